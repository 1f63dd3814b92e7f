//! Maximally resourceful and golden states, weak-converse impossibility bounds, and the
//! comparison of distill-then-dilute against direct conversion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Result};
use crate::freesets::{FreeSet, FreeSetKind};
use crate::monotones::{gen_log_robustness, log_robustness, min_monotone, overlap_spread, OVERLAP_BAND};
use crate::opalg::{random_pure_state, random_state, DensityMatrix, SUPPORT_CUTOFF};

/// Tolerance for the equalities between monotones.
pub const EQUALITY_TOL: f64 = 1e-5;
/// Certified violation margin before a bound is declared broken.
pub const VIOLATION_MARGIN: f64 = 1e-6;

/// Extended-real equality within `tol`.
fn ext_eq(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        a == b
    } else {
        (a - b).abs() <= tol
    }
}

/// `𝔇_min` bracket `[lower, upper]` from the certified overlap bounds.
fn d_min_bracket(rho: &DensityMatrix, free: &FreeSet) -> Result<(f64, f64)> {
    let h = min_monotone(rho, free)?;
    let upper = if h.lower_overlap > 0.0 { (-h.lower_overlap.log2()).max(h.value) } else { f64::INFINITY };
    Ok((h.value, upper))
}

#[derive(Clone, Debug)]
pub struct MaxResReport {
    pub state: DensityMatrix,
    pub cond_i_holds: bool,
    /// `max(pool ∪ {α}) 𝔇_max − 𝔇_min(α)`, or the overlap spread excess when that fails.
    pub cond_i_residual: f64,
    pub cond_ii_holds: bool,
    pub cond_ii_residual: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub d_max_f: f64,
    pub overlap_spread: f64,
    pub pool_max_d_max: f64,
    pub pool_max_d_max_f: f64,
    pub pool_size: usize,
    /// The first condition holds against the analytic bound `𝔇_max ≤ log₂ d`, not only the pool.
    pub cond_i_global: bool,
}

/// Seeded pool of pure and mixed states of random rank.
pub fn random_pool(dim: usize, n: usize, seed: u64) -> Vec<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                random_pure_state(dim, &mut rng)
            } else {
                let rank = rng.random_range(1..=dim);
                random_state(dim, rank, &mut rng)
            }
        })
        .collect()
}

/// Evaluates both sufficient conditions for `α` to be maximally resourceful, with the
/// supremum over all states replaced by the maximum over `pool ∪ {α}`.
pub fn check_maximally_resourceful(alpha: &DensityMatrix, free: &FreeSet, pool: &[DensityMatrix]) -> Result<MaxResReport> {
    check_dims(free.dim(), alpha.dim())?;
    for s in pool {
        check_dims(free.dim(), s.dim())?;
    }
    let h = min_monotone(alpha, free)?;
    let d_min = h.value;
    let spread = overlap_spread(h.p_star.operator(), free)?;
    let d_max = gen_log_robustness(alpha, free, 0.0)?.value;
    let d_max_f = log_robustness(alpha, free, 0.0)?.value;

    // Pool maxima are only needed when the remaining premise can still hold.
    let pool_max = |f: &dyn Fn(&DensityMatrix) -> Result<f64>, own: f64| -> Result<f64> {
        let mut best = own;
        for s in pool {
            best = best.max(f(s)?);
            if best == f64::INFINITY {
                break;
            }
        }
        Ok(best)
    };
    let spread_ok = spread <= OVERLAP_BAND;
    let pool_max_d_max = if spread_ok {
        pool_max(&|s| Ok(gen_log_robustness(s, free, 0.0)?.value), d_max)?
    } else {
        f64::NAN
    };
    let cond_i_residual = if spread_ok { pool_max_d_max - d_min } else { spread };
    let cond_i_holds = spread_ok && ext_eq(d_min, pool_max_d_max, EQUALITY_TOL);
    let log_d = (free.dim() as f64).log2();
    let contains_mixed = free.state_residual(&DensityMatrix::maximally_mixed(free.dim())) <= 1e-12;
    let cond_i_global = spread_ok && contains_mixed && d_min >= log_d - EQUALITY_TOL;

    let pool_max_d_max_f = if d_max_f.is_finite() {
        pool_max(&|s| Ok(log_robustness(s, free, 0.0)?.value), d_max_f)?
    } else {
        f64::INFINITY
    };
    let cond_ii_holds = ext_eq(d_min, pool_max_d_max_f, EQUALITY_TOL);
    let cond_ii_residual = if pool_max_d_max_f.is_finite() {
        pool_max_d_max_f - d_min
    } else {
        f64::INFINITY
    };
    Ok(MaxResReport {
        state: alpha.clone(),
        cond_i_holds,
        cond_i_residual,
        cond_ii_holds,
        cond_ii_residual,
        d_min,
        d_max,
        d_max_f,
        overlap_spread: spread,
        pool_max_d_max,
        pool_max_d_max_f,
        pool_size: pool.len(),
        cond_i_global,
    })
}

/// Dilution variant: which max-type monotone enters the premise and the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilutionVariant {
    /// `𝔇_min(α) = 𝔇_max(α)`; bound against `𝔇_max(σ)`.
    Generalized,
    /// `𝔇_min(α) = 𝔇_max,F(α)`; bound against `𝔇_max,F′(σ)`.
    Standard,
}

/// Outcome of a weak-converse test.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakConverse {
    pub applicable: bool,
    pub implied_bound_holds: bool,
    pub premise_lhs: f64,
    pub premise_rhs: f64,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
}

impl WeakConverse {
    /// The transition is certified impossible.
    pub fn impossible(&self) -> bool {
        self.applicable && !self.implied_bound_holds
    }
}

/// `upper < lower` by a certified margin, in the extended reals.
fn certified_below(upper: f64, lower: f64) -> bool {
    if lower == f64::INFINITY {
        upper.is_finite()
    } else {
        upper + VIOLATION_MARGIN < lower
    }
}

/// Necessary condition for `α ⪰ σ` when `α` is maximally resourceful by the premise.
pub fn weak_converse_dilution(
    alpha: &DensityMatrix,
    free_in: &FreeSet,
    sigma: &DensityMatrix,
    free_out: &FreeSet,
    variant: DilutionVariant,
) -> Result<WeakConverse> {
    check_dims(free_in.dim(), alpha.dim())?;
    check_dims(free_out.dim(), sigma.dim())?;
    let (d_min_lo, d_min_hi) = d_min_bracket(alpha, free_in)?;
    let (own, target) = match variant {
        DilutionVariant::Generalized => (gen_log_robustness(alpha, free_in, 0.0)?, gen_log_robustness(sigma, free_out, 0.0)?),
        DilutionVariant::Standard => (log_robustness(alpha, free_in, 0.0)?, log_robustness(sigma, free_out, 0.0)?),
    };
    let applicable = ext_eq(d_min_lo, own.value, EQUALITY_TOL);
    Ok(WeakConverse {
        applicable,
        implied_bound_holds: !certified_below(d_min_hi, target.lower),
        premise_lhs: d_min_lo,
        premise_rhs: own.value,
        bound_lhs: d_min_lo,
        bound_rhs: target.value,
    })
}

/// Necessary condition for `ρ ⪰ α` when `𝔇_max,F′(α) = 𝔇_min(α)`.
pub fn weak_converse_distillation(rho: &DensityMatrix, free_in: &FreeSet, alpha: &DensityMatrix, free_out: &FreeSet) -> Result<WeakConverse> {
    check_dims(free_in.dim(), rho.dim())?;
    check_dims(free_out.dim(), alpha.dim())?;
    let target = log_robustness(alpha, free_out, 0.0)?;
    let (alpha_min, _) = d_min_bracket(alpha, free_out)?;
    let applicable = ext_eq(target.value, alpha_min, EQUALITY_TOL);
    let (rho_lo, rho_hi) = d_min_bracket(rho, free_in)?;
    Ok(WeakConverse {
        applicable,
        implied_bound_holds: !certified_below(rho_hi, target.lower),
        premise_lhs: target.value,
        premise_rhs: alpha_min,
        bound_lhs: rho_lo,
        bound_rhs: target.value,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeppComparison {
    pub d_min_rho: f64,
    pub d_max_f_sigma: f64,
    /// `⌊𝔇_min(ρ)⌋ ≥ 𝔇_max,F(σ) + 1`.
    pub distill_dilute_ok: bool,
    /// `𝔇_min(ρ) ≥ 𝔇_max,F(σ)`.
    pub direct_ok: bool,
}

/// Compares the route through maximally entangled bits against direct conversion.
pub fn sepp_comparison(rho: &DensityMatrix, sigma: &DensityMatrix, free: &FreeSet) -> Result<SeppComparison> {
    check_dims(free.dim(), rho.dim())?;
    check_dims(free.dim(), sigma.dim())?;
    let d_min_rho = min_monotone(rho, free)?.value;
    let d_max_f_sigma = log_robustness(sigma, free, 0.0)?.value;
    // Values within rounding of an integer count as that integer.
    let bits = if d_min_rho.is_finite() { (d_min_rho + 1e-9).floor() } else { f64::INFINITY };
    let distill_dilute_ok = crate::transitions::ext_ge(bits, d_max_f_sigma + 1.0, 0.0);
    let direct_ok = crate::transitions::ext_ge(d_min_rho, d_max_f_sigma, 0.0);
    Ok(SeppComparison {
        d_min_rho,
        d_max_f_sigma,
        distill_dilute_ok,
        direct_ok,
    })
}

#[derive(Clone, Debug)]
pub struct GoldenCandidate {
    pub candidate: DensityMatrix,
    pub d_min: f64,
    pub d_max: f64,
    /// `𝔇_max − 𝔇_min` of the candidate.
    pub gap: f64,
}

/// Largest overlap `max_{ω∈F} ⟨ψ|ω|ψ⟩` and the maximizing free state.
fn worst_overlap(psi: &DensityMatrix, free: &FreeSet) -> Result<(f64, DensityMatrix)> {
    let opt = free.max_linear(psi)?;
    Ok((opt.bound, opt.argopt))
}

/// Rank-one states maximizing `𝔇_min`, by seeded random restarts of a subgradient
/// descent on `max_ω ⟨ψ|ω|ψ⟩` with geometrically decaying steps.
pub fn golden_state_search(free: &FreeSet, n_restarts: usize, seed: u64) -> Result<GoldenCandidate> {
    let d = free.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (iterations, decay) = match free.kind() {
        FreeSetKind::Ppt { .. } => (400, 0.985),
        _ => (20_000, 0.9992),
    };
    let mut best: Option<(f64, DensityMatrix)> = None;
    for restart in 0..n_restarts.max(1) {
        let start = if restart == 0 {
            DensityMatrix::basis(d, 0)
        } else {
            random_pure_state(d, &mut rng)
        };
        let mut psi = start.spectrum().vector(0);
        let mut state = start;
        let (mut value, mut omega) = worst_overlap(&state, free)?;
        let mut local_best = (value, state.clone());
        let mut step = 0.5;
        for _ in 0..iterations {
            let grad = omega.matrix() * &psi;
            let next = &psi - grad * nalgebra::Complex::new(step, 0.0);
            let norm = next.norm();
            if norm <= SUPPORT_CUTOFF {
                break;
            }
            psi = next / nalgebra::Complex::new(norm, 0.0);
            state = DensityMatrix::pure(&psi)?;
            (value, omega) = worst_overlap(&state, free)?;
            if value < local_best.0 {
                local_best = (value, state.clone());
            }
            step *= decay;
        }
        // Ties keep the earlier candidate.
        if best.as_ref().is_none_or(|b| local_best.0 < b.0 - 1e-12) {
            best = Some(local_best);
        }
    }
    let (_, candidate) = best.expect("at least one restart");
    let d_min = min_monotone(&candidate, free)?.value;
    let d_max = gen_log_robustness(&candidate, free, 0.0)?.value;
    Ok(GoldenCandidate {
        gap: (d_max - d_min).max(0.0),
        candidate,
        d_min,
        d_max,
    })
}
