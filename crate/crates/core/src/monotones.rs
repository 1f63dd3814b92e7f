//! Free-set-relative monotones: relative entropy of resource, hypothesis-testing
//! and min monotones, (generalized) logarithmic robustness, free fractions and the
//! optimal convex decomposition.

use nalgebra::DMatrix;

use crate::conic::{
    AdmmSettings, ConeConstraint, ConeMap, ConicProblem,
};
use crate::divergences::{
    d_max_f_unchecked, d_max_smoothed_unchecked, max_ratio, neg_log2, neyman_pearson,
    step_toward, umegaki_unchecked, TestOperator,
};
use crate::error::{check_dims, check_epsilon, Error, Result};
use crate::freesets::{FreeSet, FreeSetKind, MEMBERSHIP_TOL};
use crate::opalg::{DensityMatrix, HermitianOperator, C64, SUPPORT_CUTOFF};

/// Stop tolerance on the Frank–Wolfe gap of the hypothesis-testing monotone.
pub const HYP_GAP_TOL: f64 = 1e-7;
/// Stop tolerance on the Frank–Wolfe gap of the relative entropy of resource.
pub const REL_GAP_TOL: f64 = 1e-6;
/// Equality band for the constant-overlap premise.
pub const OVERLAP_BAND: f64 = 1e-6;

/// Result of the relative entropy of resource.
#[derive(Clone, Debug)]
pub struct RelativeEntropyOfResource {
    /// `D(ρ‖ω)` at the returned free state: an upper bound on the infimum.
    pub value: f64,
    pub omega: DensityMatrix,
    /// Frank–Wolfe gap: the infimum lies in `[value − gap, value]`.
    pub gap: f64,
    pub iterations: usize,
}

/// Derivative of `ω ↦ log₂ ω` applied to `x`, in closed form on the eigenbasis of `ω`.
fn log2_derivative(omega: &HermitianOperator, x: &HermitianOperator) -> HermitianOperator {
    let spec = omega.spectrum();
    let v = &spec.vectors;
    let r = v.adjoint() * x.matrix() * v;
    let d = spec.dim();
    let w = &spec.values;
    let ln2 = std::f64::consts::LN_2;
    let g = DMatrix::<C64>::from_fn(d, d, |i, j| {
        let (a, b) = (w[i].max(1e-300), w[j].max(1e-300));
        let coeff = if (a - b).abs() <= 1e-12 * a.max(b) {
            1.0 / (0.5 * (a + b))
        } else {
            (a.ln() - b.ln()) / (a - b)
        };
        r[(i, j)] * (coeff / ln2)
    });
    HermitianOperator::symmetrized(v * g * v.adjoint())
}

/// Minimizes a convex function along the segment `[0, 1]` by golden-section search.
fn golden_section(f: impl Fn(f64) -> f64, evals: usize) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [0.0, 1.0] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// `𝔇(ρ) = inf_{ω∈F} D(ρ‖ω)` by Frank–Wolfe with exact line search.
pub fn relative_entropy_of_resource(rho: &DensityMatrix, free: &FreeSet) -> Result<RelativeEntropyOfResource> {
    check_dims(free.dim(), rho.dim())?;
    if let FreeSetKind::Singleton(gamma) = free.kind() {
        return Ok(RelativeEntropyOfResource {
            value: umegaki_unchecked(rho, gamma),
            omega: gamma.clone(),
            gap: 0.0,
            iterations: 0,
        });
    }
    if free.state_residual(rho) <= MEMBERSHIP_TOL {
        return Ok(RelativeEntropyOfResource {
            value: 0.0,
            omega: rho.clone(),
            gap: 0.0,
            iterations: 0,
        });
    }
    let objective = |omega: &HermitianOperator| umegaki_unchecked(rho, omega);
    // Start from the better of the maximally mixed state and a nearby free state.
    let mixed = free.interior_point();
    let near = free.repair(rho).mix(&mixed, 0.9);
    let mut omega = if objective(&near) < objective(&mixed) { near } else { mixed };
    let mut value = objective(&omega);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..1000 {
        iterations = it + 1;
        let grad = log2_derivative(&omega, rho).scale(-1.0);
        let lmo = free.min_linear(&grad)?;
        gap = (grad.inner(&omega) - lmo.bound).max(0.0);
        if gap <= REL_GAP_TOL {
            break;
        }
        let s = lmo.argopt;
        let (step, f_new) = golden_section(|g| objective(&omega.mix(&s, 1.0 - g)), 40);
        if !(f_new < value) || step == 0.0 {
            break;
        }
        omega = omega.mix(&s, 1.0 - step);
        value = f_new;
    }
    Ok(RelativeEntropyOfResource {
        value,
        omega,
        gap,
        iterations,
    })
}

/// Saddle point of the hypothesis-testing monotone.
#[derive(Clone, Debug)]
pub struct HypMonotone {
    /// `−log₂` of a certified upper bound on `max_{ω∈F} Tr[P* ω]`: a lower bound on `𝔇_h^ε(ρ)`.
    pub value: f64,
    pub omega_star: DensityMatrix,
    pub p_star: TestOperator,
    /// `max_ω min_P Tr[Pω]` lies in `[lower_overlap, 2^{−value}]`.
    pub lower_overlap: f64,
    pub iterations: usize,
}

impl HypMonotone {
    /// `M = 2^{𝔇_h}`, possibly `+∞`.
    pub fn m(&self) -> f64 {
        self.value.exp2()
    }

    pub fn gap(&self) -> f64 {
        ((-self.value).exp2() - self.lower_overlap).max(0.0)
    }
}

/// `𝔇_h^ε(ρ) = −log₂ max_{ω∈F} min_{P} Tr[Pω]` via Frank–Wolfe on the concave outer problem.
pub fn hyp_monotone(rho: &DensityMatrix, free: &FreeSet, eps: f64) -> Result<HypMonotone> {
    check_dims(free.dim(), rho.dim())?;
    check_epsilon(eps)?;
    if let FreeSetKind::Singleton(gamma) = free.kind() {
        let np = neyman_pearson(rho, gamma, eps);
        return Ok(HypMonotone {
            value: np.value,
            omega_star: gamma.clone(),
            lower_overlap: np.type_two_error,
            p_star: np.test,
            iterations: 0,
        });
    }
    if eps == 0.0 || eps >= 1.0 {
        let p = if eps == 0.0 {
            rho.spectrum().projector(|x| x > SUPPORT_CUTOFF)
        } else {
            HermitianOperator::zeros(rho.dim())
        };
        let lmo = free.max_linear(&p)?;
        return Ok(HypMonotone {
            value: neg_log2(lmo.bound).max(0.0),
            omega_star: lmo.argopt,
            lower_overlap: lmo.value.max(0.0),
            p_star: TestOperator::assume_valid(p),
            iterations: lmo.iterations,
        });
    }
    let mut omega = free.interior_point();
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<(TestOperator, DensityMatrix)> = None;
    let mut iterations = 0;
    for it in 0..300 {
        iterations = it + 1;
        let np = neyman_pearson(rho, &omega, eps);
        lower = lower.max(np.type_two_error);
        let lmo = free.max_linear(&np.test)?;
        if lmo.bound < upper {
            upper = lmo.bound;
            best = Some((np.test.clone(), lmo.argopt.clone()));
        }
        if upper - lower <= HYP_GAP_TOL {
            break;
        }
        let s = lmo.argopt;
        let (step, _) = golden_section(
            |g| -neyman_pearson(rho, &omega.mix(&s, 1.0 - g), eps).type_two_error,
            30,
        );
        if step == 0.0 {
            // Fall back to the open-loop schedule so the iterate keeps moving.
            omega = omega.mix(&s, 1.0 - 2.0 / (it as f64 + 3.0));
        } else {
            omega = omega.mix(&s, 1.0 - step);
        }
    }
    let (p_star, omega_star) = best.expect("at least one iteration");
    Ok(HypMonotone {
        value: neg_log2(upper).max(0.0),
        omega_star,
        p_star,
        lower_overlap: lower.max(0.0),
        iterations,
    })
}

/// `𝔇_min(ρ) = −log₂ max_{ω∈F} Tr[ω Π_ρ]`.
pub fn min_monotone(rho: &DensityMatrix, free: &FreeSet) -> Result<HypMonotone> {
    hyp_monotone(rho, free, 0.0)
}

/// Spread `max_ω Tr[Pω] − min_ω Tr[Pω]` over the free set, from certified bounds.
pub fn overlap_spread(test: &HermitianOperator, free: &FreeSet) -> Result<f64> {
    let hi = free.max_linear(test)?;
    let lo = free.min_linear(test)?;
    Ok((hi.bound - lo.bound).max(0.0))
}

/// Which robustness a cone cover computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CoverMode {
    /// `T ⪰ σ`, `T ∈ cone(F)`: generalized robustness.
    Generalized,
    /// `T ∈ cone(F)`, `T − σ ∈ cone(F)`: standard robustness.
    Standard,
}

/// A certified feasible cover `T` and a lower bound on `min Tr T`.
#[derive(Clone, Debug)]
struct Cover {
    /// `Tr T`, or `+∞` when no cover exists.
    trace: f64,
    /// `T / Tr T`.
    state: Option<DensityMatrix>,
    lower: f64,
}

impl Cover {
    fn infinite() -> Self {
        Cover {
            trace: f64::INFINITY,
            state: None,
            lower: f64::INFINITY,
        }
    }
}

/// `min Tr T` over the cone constraints of `mode`.
fn cone_cover(sigma: &DensityMatrix, free: &FreeSet, mode: CoverMode) -> Cover {
    let d = sigma.dim();
    match (free.kind(), mode) {
        (_, _) if free.state_residual(sigma) <= MEMBERSHIP_TOL => Cover {
            trace: 1.0,
            state: Some(sigma.clone()),
            lower: 1.0,
        },
        (FreeSetKind::Full, _) => Cover {
            trace: 1.0,
            state: Some(sigma.clone()),
            lower: 1.0,
        },
        (FreeSetKind::Singleton(gamma), CoverMode::Generalized) => {
            let ratio = max_ratio(sigma, gamma);
            if ratio.is_finite() {
                Cover {
                    trace: ratio.max(1.0),
                    state: Some(gamma.clone()),
                    lower: ratio.max(1.0),
                }
            } else {
                Cover::infinite()
            }
        }
        (FreeSetKind::Singleton(_), CoverMode::Standard) | (FreeSetKind::Incoherent, CoverMode::Standard) => {
            // Mixing with free states never removes the component of σ outside F.
            Cover::infinite()
        }
        (FreeSetKind::Incoherent, CoverMode::Generalized) => {
            let problem = ConicProblem {
                dim: d,
                objective: HermitianOperator::identity(d),
                trace_one: false,
                diagonal: true,
                cones: vec![ConeConstraint::shifted(ConeMap::Identity, sigma.as_operator().clone())],
            };
            solve_cover(sigma, free, &problem, |t| {
                let t = HermitianOperator::from_real_diagonal(&t.diagonal());
                let s = (-(&t - sigma).min_eigenvalue()).max(0.0);
                &t + &HermitianOperator::identity(d).scale(s)
            })
        }
        (FreeSetKind::Ppt { dim_a, dim_b }, _) => {
            let (da, db) = (*dim_a, *dim_b);
            let pt = ConeMap::PartialTranspose { dim_a: da, dim_b: db };
            let mut cones = vec![
                ConeConstraint::shifted(ConeMap::Identity, sigma.as_operator().clone()),
                ConeConstraint::psd(pt),
            ];
            if mode == CoverMode::Standard {
                cones.push(ConeConstraint::shifted(pt, sigma.partial_transpose_unchecked(da, db)));
            }
            let problem = ConicProblem {
                dim: d,
                objective: HermitianOperator::identity(d),
                trace_one: false,
                diagonal: false,
                cones,
            };
            solve_cover(sigma, free, &problem, move |t| {
                let mut s = (-(t - sigma).min_eigenvalue())
                    .max(-t.partial_transpose_unchecked(da, db).min_eigenvalue())
                    .max(0.0);
                if mode == CoverMode::Standard {
                    s = s.max(-(t - sigma).partial_transpose_unchecked(da, db).min_eigenvalue());
                }
                t + &HermitianOperator::identity(d).scale(s)
            })
        }
    }
}

/// Runs the splitting solver, repairs the cover to exact feasibility and builds a
/// dual lower bound `Tr[σZ] / max_{ω∈F} Tr[Zω]` from the multipliers, where `Z`
/// lies in the dual cone of `cone(F)`.
fn solve_cover(
    sigma: &DensityMatrix,
    free: &FreeSet,
    problem: &ConicProblem,
    repair: impl Fn(&HermitianOperator) -> HermitianOperator,
) -> Cover {
    let settings = AdmmSettings {
        max_iterations: 6_000,
        tolerance: 1e-11,
        penalty: 1.0,
    };
    let mut best: Option<Cover> = None;
    let mut warm: Option<HermitianOperator> = None;
    let mut settings = settings;
    for _round in 0..3 {
        let sol = problem.solve(settings, warm.as_ref());
        let t = repair(&sol.x);
        let trace = t.trace();
        let mut z = sol.duals[0].clone();
        if problem.cones.len() == 3 {
            if let ConeMap::PartialTranspose { dim_a, dim_b } = problem.cones[2].map {
                z = &z + &sol.duals[2].partial_transpose_unchecked(dim_a, dim_b);
            }
        }
        let denom = free.max_linear(&z).map(|o| o.bound).unwrap_or(f64::INFINITY);
        let lower = if denom > 0.0 && denom.is_finite() {
            (sigma.inner(&z) / denom).max(1.0)
        } else {
            1.0
        };
        let cand = Cover {
            trace,
            state: Some(DensityMatrix::assume_valid(t.scale(1.0 / trace))),
            lower: lower.min(trace),
        };
        let merged = match best.take() {
            None => cand,
            Some(b) => {
                let lower = b.lower.max(cand.lower);
                let mut keep = if cand.trace < b.trace { cand } else { b };
                keep.lower = lower.min(keep.trace);
                keep
            }
        };
        let done = merged.trace - merged.lower <= 1e-9 * merged.trace;
        best = Some(merged);
        if done {
            break;
        }
        warm = Some(sol.x);
        settings.max_iterations *= 2;
    }
    best.expect("one round")
}

/// Value and witnesses of a (generalized) logarithmic robustness.
#[derive(Clone, Debug)]
pub struct Robustness {
    /// Certified upper bound on the monotone, attained by the witnesses.
    pub value: f64,
    /// Certified lower bound (exact for the closed-form sets; `value` itself when ε > 0).
    pub lower: f64,
    /// `σ̃`, within ε of the input.
    pub sigma_tilde: DensityMatrix,
    /// `σ̃₊ ∈ F`.
    pub sigma_tilde_plus: DensityMatrix,
}

fn robustness_at(sigma: &DensityMatrix, free: &FreeSet, mode: CoverMode) -> Robustness {
    let cover = cone_cover(sigma, free, mode);
    match cover.state {
        Some(plus) if cover.trace.is_finite() => {
            let plus = if cover.trace <= 1.0 + 1e-14 { sigma.clone() } else { plus };
            // For the generalized cover the exact ratio to the witness is itself a
            // certified value, never above `log₂ Tr T`.
            let value = match mode {
                CoverMode::Generalized if cover.trace > 1.0 => max_ratio(sigma, &plus).min(cover.trace).log2().max(0.0),
                _ => cover.trace.log2().max(0.0),
            };
            Robustness {
                value,
                lower: cover.lower.log2().max(0.0).min(value),
                sigma_tilde: sigma.clone(),
                sigma_tilde_plus: plus,
            }
        }
        _ => Robustness {
            value: f64::INFINITY,
            lower: f64::INFINITY,
            sigma_tilde: sigma.clone(),
            sigma_tilde_plus: free.repair(sigma),
        },
    }
}

/// Smoothing for the robustness monotones: explicit candidates in the ε-ball, each
/// re-optimized, keeping the best certified value.
fn smoothed_robustness(sigma: &DensityMatrix, free: &FreeSet, eps: f64, mode: CoverMode) -> Robustness {
    let base = robustness_at(sigma, free, mode);
    if eps == 0.0 || base.value == 0.0 {
        return base;
    }
    let lower_at_zero = base.lower;
    let mut best = base;
    let consider = |best: &mut Robustness, cand: &DensityMatrix| {
        let r = robustness_at(cand, free, mode);
        if r.value < best.value {
            *best = Robustness {
                sigma_tilde: cand.clone(),
                ..r
            };
        }
    };
    let mut targets = vec![free.repair(sigma), best.sigma_tilde_plus.clone()];
    if matches!(free.kind(), FreeSetKind::Incoherent) {
        targets.push(sigma.dephased());
    }
    for target in &targets {
        consider(&mut best, &step_toward(sigma, target, eps));
    }
    if mode == CoverMode::Generalized {
        let smoothed = d_max_smoothed_unchecked(sigma, &best.sigma_tilde_plus.clone(), eps);
        consider(&mut best, &smoothed.witness);
    }
    for _ in 0..3 {
        let target = best.sigma_tilde_plus.clone();
        let cand = step_toward(sigma, &target, eps);
        let before = best.value;
        consider(&mut best, &cand);
        if best.value >= before - 1e-12 {
            break;
        }
    }
    // Only the unsmoothed lower bound transfers: smoothing can only decrease the value.
    best.lower = best.lower.min(lower_at_zero).min(best.value);
    best
}

/// `𝔇_max^ε(σ) = inf_{ω∈F} D_max^ε(σ‖ω)`, equal to `−log₂ 𝔉_g(σ)` at ε = 0.
pub fn gen_log_robustness(sigma: &DensityMatrix, free: &FreeSet, eps: f64) -> Result<Robustness> {
    check_dims(free.dim(), sigma.dim())?;
    check_epsilon(eps)?;
    Ok(smoothed_robustness(sigma, free, eps, CoverMode::Generalized))
}

/// `𝔇_max,F^ε(σ) = inf_{ω∈F} D_max,F^ε(σ‖ω)`, equal to `−log₂ 𝔉(σ)` at ε = 0.
pub fn log_robustness(sigma: &DensityMatrix, free: &FreeSet, eps: f64) -> Result<Robustness> {
    check_dims(free.dim(), sigma.dim())?;
    check_epsilon(eps)?;
    Ok(smoothed_robustness(sigma, free, eps, CoverMode::Standard))
}

/// A free fraction with the state mixed in.
#[derive(Clone, Debug)]
pub struct FreeFraction {
    pub p: f64,
    /// `ω` with `pσ + (1 − p)ω ∈ F`; absent when `p = 1`.
    pub mixer: Option<DensityMatrix>,
}

/// Bisection tolerance of the fraction searches.
const FRACTION_TOL: f64 = 1e-9;

/// Bisection over `p` where `certify(p)` returns a certified achievable fraction
/// and its mixture when the attempt at `p` succeeds.
fn bisect_fraction(
    sigma: &DensityMatrix,
    certify: impl Fn(f64) -> Option<(f64, DensityMatrix)>,
) -> FreeFraction {
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 1.0;
    let mut mixture: Option<DensityMatrix> = None;
    for _ in 0..60 {
        if hi - lo <= FRACTION_TOL * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match certify(mid) {
            Some((achieved, x)) if achieved >= mid * (1.0 - 1e-7) => {
                if achieved > lo {
                    lo = achieved;
                    mixture = Some(x);
                }
            }
            Some((achieved, x)) => {
                if achieved > lo {
                    lo = achieved;
                    mixture = Some(x);
                }
                hi = mid;
            }
            None => hi = mid,
        }
    }
    let mixer = mixture.and_then(|x| mixer_from(sigma, &x, lo));
    FreeFraction { p: lo, mixer }
}

/// `ω = (X − pσ)/(1 − p)` for a mixture `X`.
fn mixer_from(sigma: &DensityMatrix, mixture: &HermitianOperator, p: f64) -> Option<DensityMatrix> {
    if p >= 1.0 {
        return None;
    }
    let w = mixture.combine(1.0 / (1.0 - p), sigma, -p / (1.0 - p));
    Some(DensityMatrix::assume_valid(w))
}

/// Feasibility at a fixed fraction `p`: a state `X ∈ F` with `X − pσ ⪰ 0` (and
/// `X − pσ ∈ cone(F)` for the standard fraction), found by the splitting solver
/// and then repaired by mixing with the identity. Returns the fraction the
/// repaired point provably achieves and the point itself.
fn fraction_attempt(
    sigma: &DensityMatrix,
    free: &FreeSet,
    p: f64,
    standard: bool,
    warm: Option<&HermitianOperator>,
) -> (f64, DensityMatrix) {
    let d = sigma.dim();
    let scaled = sigma.scale(p);
    let mut cones = vec![ConeConstraint::shifted(ConeMap::Identity, scaled.clone())];
    let mut diagonal = false;
    let mut pt_dims = None;
    match free.kind() {
        FreeSetKind::Incoherent => diagonal = true,
        FreeSetKind::Ppt { dim_a, dim_b } => {
            let map = ConeMap::PartialTranspose { dim_a: *dim_a, dim_b: *dim_b };
            cones.push(ConeConstraint::psd(map));
            if standard {
                cones.push(ConeConstraint::shifted(map, scaled.partial_transpose_unchecked(*dim_a, *dim_b)));
            }
            pt_dims = Some((*dim_a, *dim_b));
        }
        FreeSetKind::Full | FreeSetKind::Singleton(_) => {}
    }
    let problem = ConicProblem {
        dim: d,
        objective: HermitianOperator::zeros(d),
        trace_one: true,
        diagonal,
        cones,
    };
    let settings = AdmmSettings {
        max_iterations: 3_000,
        tolerance: 1e-13,
        penalty: 1.0,
    };
    let sol = problem.solve(settings, warm);
    let mut x = sol.x;
    if diagonal {
        x = HermitianOperator::from_real_diagonal(&x.diagonal());
    }
    let mut s = (-(&x - &scaled).min_eigenvalue()).max(0.0);
    if let Some((da, db)) = pt_dims {
        s = s.max(-x.partial_transpose_unchecked(da, db).min_eigenvalue());
        if standard {
            s = s.max(-(&x - &scaled).partial_transpose_unchecked(da, db).min_eigenvalue());
        }
    }
    let norm = x.trace() + s * d as f64;
    let repaired = (&x + &HermitianOperator::identity(d).scale(s)).scale(1.0 / norm);
    (p / norm, DensityMatrix::assume_valid(repaired))
}

fn fraction(sigma: &DensityMatrix, free: &FreeSet, standard: bool) -> FreeFraction {
    if free.state_residual(sigma) <= MEMBERSHIP_TOL {
        return FreeFraction { p: 1.0, mixer: None };
    }
    match free.kind() {
        FreeSetKind::Full => FreeFraction { p: 1.0, mixer: None },
        // Mixing with free states never removes the part of σ outside F.
        FreeSetKind::Singleton(_) | FreeSetKind::Incoherent if standard => FreeFraction { p: 0.0, mixer: None },
        FreeSetKind::Singleton(gamma) => {
            // pσ + (1 − p)ω = γ for a state ω iff γ − pσ ⪰ 0.
            let gamma = gamma.clone();
            bisect_fraction(sigma, |p| {
                ((&*gamma - &sigma.scale(p)).min_eigenvalue() >= -1e-15).then(|| (p, gamma.clone()))
            })
        }
        FreeSetKind::Incoherent | FreeSetKind::Ppt { .. } => {
            let warm = std::cell::RefCell::new(None::<HermitianOperator>);
            bisect_fraction(sigma, |p| {
                let (achieved, x) = fraction_attempt(sigma, free, p, standard, warm.borrow().as_ref());
                if achieved >= p * (1.0 - 1e-7) {
                    *warm.borrow_mut() = Some(x.as_operator().clone());
                }
                (achieved > 0.0).then_some((achieved, x))
            })
        }
    }
}

/// `𝔉(σ)`: the largest `p` with `pσ + (1 − p)ω ∈ F` for some free `ω`.
pub fn free_fraction(sigma: &DensityMatrix, free: &FreeSet) -> Result<FreeFraction> {
    check_dims(free.dim(), sigma.dim())?;
    Ok(fraction(sigma, free, true))
}

/// `𝔉_g(σ)`: as [`free_fraction`] with `ω` ranging over all states.
pub fn gen_free_fraction(sigma: &DensityMatrix, free: &FreeSet) -> Result<FreeFraction> {
    check_dims(free.dim(), sigma.dim())?;
    Ok(fraction(sigma, free, false))
}

/// `σ₊ = 𝔉_g σ + (1 − 𝔉_g) σ₀` together with the antipodal free point `σ₋`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub sigma_plus: DensityMatrix,
    pub sigma_zero: DensityMatrix,
    pub sigma_minus: DensityMatrix,
    pub gff: f64,
    pub dmax_f_to_plus: f64,
}

pub fn optimal_decomposition(sigma: &DensityMatrix, free: &FreeSet) -> Result<Decomposition> {
    check_dims(free.dim(), sigma.dim())?;
    if free.state_residual(sigma) <= MEMBERSHIP_TOL {
        return Err(Error::PreconditionViolation(
            "the optimal decomposition is defined for non-free states only".into(),
        ));
    }
    let rob = robustness_at(sigma, free, CoverMode::Generalized);
    let plus = rob.sigma_tilde_plus;
    let ratio = max_ratio(sigma, &plus);
    let gff = if ratio.is_finite() { (1.0 / ratio).min(1.0) } else { 0.0 };
    let zero = if gff > 0.0 && gff < 1.0 {
        let z = plus.combine(1.0 / (1.0 - gff), sigma, -gff / (1.0 - gff));
        DensityMatrix::from_psd_repair(&z)
    } else {
        plus.clone()
    };
    let dmax_f_to_plus = d_max_f_unchecked(sigma, &plus, free).value;
    let sigma_minus = if dmax_f_to_plus.is_finite() {
        let lambda = dmax_f_to_plus.exp2();
        DensityMatrix::assume_valid(plus.combine(lambda / (lambda - 1.0), sigma, -1.0 / (lambda - 1.0)))
    } else {
        plus.clone()
    };
    Ok(Decomposition {
        sigma_plus: plus,
        sigma_zero: zero,
        sigma_minus,
        gff,
        dmax_f_to_plus,
    })
}

/// Every monotone of a state at one smoothing parameter, with the optimizers.
#[derive(Clone, Debug)]
pub struct MonotoneReport {
    pub d_rel: f64,
    pub d_h_eps: f64,
    pub d_min: f64,
    pub d_max_eps: f64,
    pub d_max_f_eps: f64,
    pub ff: f64,
    pub gff: f64,
    pub hyp: HypMonotone,
    pub gen_robustness: Robustness,
    pub robustness: Robustness,
}

pub fn monotone_report(rho: &DensityMatrix, free: &FreeSet, eps: f64) -> Result<MonotoneReport> {
    let d_rel = relative_entropy_of_resource(rho, free)?.value;
    let hyp = hyp_monotone(rho, free, eps)?;
    let d_min = min_monotone(rho, free)?.value;
    let gen_robustness = gen_log_robustness(rho, free, eps)?;
    let robustness = log_robustness(rho, free, eps)?;
    let ff = free_fraction(rho, free)?.p;
    let gff = gen_free_fraction(rho, free)?.p;
    Ok(MonotoneReport {
        d_rel,
        d_h_eps: hyp.value,
        d_min,
        d_max_eps: gen_robustness.value,
        d_max_f_eps: robustness.value,
        ff,
        gff,
        hyp,
        gen_robustness,
        robustness,
    })
}
