//! Pairwise one-shot divergences, base-2, with `+∞` as a first-class value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conic::{dykstra, project_below, project_density, project_psd, project_trace_ball};
use crate::error::{check_dims, check_epsilon, Error, Result};
use crate::freesets::{FreeSet, FreeSetKind};
use crate::opalg::{half_trace_norm_diff, random_state, DensityMatrix, HermitianOperator, SUPPORT_CUTOFF};

/// Absolute tolerance of the ray-membership test used by [`d_max_f`].
pub const RAY_MEMBERSHIP_TOL: f64 = 1e-8;
/// Largest ratio explored by the ray search before declaring `+∞`.
pub const RAY_CAP: f64 = 1.152_921_504_606_847e18; // 2^60

/// An operator `0 ⪯ P ⪯ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestOperator {
    op: HermitianOperator,
}

impl TestOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let ev = op.eigenvalues();
        let (hi, lo) = (ev[0], ev[ev.len() - 1]);
        if lo < -1e-9 || hi > 1.0 + 1e-9 {
            return Err(Error::InvalidOperator(format!(
                "test operator spectrum [{lo:e}, {hi}] leaves [0, 1]"
            )));
        }
        Ok(Self { op })
    }

    pub(crate) fn assume_valid(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn complement(&self) -> Self {
        Self {
            op: &HermitianOperator::identity(self.op.dim()) - &self.op,
        }
    }
}

impl std::ops::Deref for TestOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

/// `−log₂ x` with `−log 0 = +∞`.
pub fn neg_log2(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        -x.log2()
    }
}

/// Weight of `rho` outside the support of `sigma`.
fn weight_off_support(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    let kernel = sigma.spectrum().projector(|x| x <= SUPPORT_CUTOFF);
    rho.inner(&kernel)
}

/// Umegaki relative entropy `Tr ρ(log ρ − log σ)`.
pub fn umegaki(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    Ok(umegaki_unchecked(rho, sigma))
}

pub(crate) fn umegaki_unchecked(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    if weight_off_support(rho, sigma) > SUPPORT_CUTOFF {
        return f64::INFINITY;
    }
    let entropy_term: f64 = rho
        .eigenvalues()
        .iter()
        .filter(|&&x| x > SUPPORT_CUTOFF)
        .map(|&x| x * x.log2())
        .sum();
    let log_sigma = sigma
        .spectrum()
        .rebuild(|x| if x > SUPPORT_CUTOFF { x.log2() } else { 0.0 });
    (entropy_term - rho.inner(&log_sigma)).max(0.0)
}

/// Optimal Neyman–Pearson test and its value.
#[derive(Clone, Debug)]
pub struct HypothesisTest {
    pub value: f64,
    pub test: TestOperator,
    /// `Tr[σP]` of the returned test.
    pub type_two_error: f64,
}

/// `D_h^ε(ρ‖σ) = −log₂ min{Tr σP : 0 ⪯ P ⪯ 1, Tr ρP ≥ 1 − ε}`.
pub fn hypothesis_testing(rho: &DensityMatrix, sigma: &HermitianOperator, eps: f64) -> Result<HypothesisTest> {
    check_dims(rho.dim(), sigma.dim())?;
    check_epsilon(eps)?;
    Ok(neyman_pearson(rho, sigma, eps))
}

/// Minimizes `Tr σP` over `{0 ⪯ P ⪯ 1, Tr ρP ≥ 1 − ε}` for any `σ ⪰ 0`.
///
/// The optimum is a threshold test on `ρ − tσ`. The threshold is bracketed by
/// bisection and the two projectors at the bracket ends are mixed so the
/// constraint is met with equality; within the boundary eigenspace every split
/// of the same `ρ`-weight has the same `σ`-cost.
pub(crate) fn neyman_pearson(rho: &HermitianOperator, sigma: &HermitianOperator, eps: f64) -> HypothesisTest {
    let d = rho.dim();
    let finish = |p: HermitianOperator| {
        let err = sigma.inner(&p).max(0.0);
        HypothesisTest {
            value: neg_log2(err),
            test: TestOperator::assume_valid(p),
            type_two_error: err,
        }
    };
    if eps >= 1.0 {
        return finish(HermitianOperator::zeros(d));
    }
    let target = 1.0 - eps;
    let kernel = sigma.spectrum().projector(|x| x <= SUPPORT_CUTOFF);
    if rho.inner(&kernel) >= target - 1e-15 {
        let mut out = finish(kernel);
        out.value = f64::INFINITY;
        out.type_two_error = 0.0;
        return out;
    }
    if eps == 0.0 {
        return finish(rho.spectrum().projector(|x| x > SUPPORT_CUTOFF));
    }
    let projector_at = |t: f64| (rho - &sigma.scale(t)).spectrum().projector(|x| x > 0.0);
    let accept = |p: &HermitianOperator| rho.inner(p);

    let mut lo = 0.0;
    let mut p_lo = rho.spectrum().projector(|x| x > SUPPORT_CUTOFF);
    let mut hi = 1.0;
    let mut p_hi = projector_at(hi);
    while accept(&p_hi) >= target && hi < 1e18 {
        lo = hi;
        p_lo = p_hi;
        hi *= 2.0;
        p_hi = projector_at(hi);
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p_mid = projector_at(mid);
        if accept(&p_mid) >= target {
            lo = mid;
            p_lo = p_mid;
        } else {
            hi = mid;
            p_hi = p_mid;
        }
    }
    let a_lo = accept(&p_lo);
    let a_hi = accept(&p_hi);
    let c = if a_lo - a_hi > 1e-300 {
        ((target - a_hi) / (a_lo - a_hi)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    finish(p_lo.combine(c, &p_hi, 1.0 - c))
}

/// `D_min(ρ‖σ) = −log₂ Tr[σ Π_ρ]`.
pub fn d_min(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let support = rho.spectrum().projector(|x| x > SUPPORT_CUTOFF);
    Ok(neg_log2(sigma.inner(&support)).max(0.0))
}

/// `D_max(ρ‖σ) = log₂ min{λ : λσ ⪰ ρ}`.
pub fn d_max(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    Ok(d_max_unchecked(rho, sigma).max(0.0))
}

/// `log₂ λ_max(σ^{-1/2} ρ σ^{-1/2})` on the support of `σ`, `+∞` off it.
pub(crate) fn d_max_unchecked(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    let ratio = max_ratio(rho, sigma);
    if ratio.is_infinite() {
        f64::INFINITY
    } else if ratio <= 0.0 {
        f64::NEG_INFINITY
    } else {
        ratio.log2()
    }
}

/// `min{λ : λσ ⪰ ρ}` for `ρ ⪰ 0`.
pub(crate) fn max_ratio(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    if weight_off_support(rho, sigma) > SUPPORT_CUTOFF {
        return f64::INFINITY;
    }
    let inv_sqrt = sigma
        .spectrum()
        .rebuild(|x| if x > SUPPORT_CUTOFF { 1.0 / x.sqrt() } else { 0.0 });
    rho.congruence(inv_sqrt.matrix()).max_eigenvalue()
}

/// A smoothed value together with the state that attains it.
#[derive(Clone, Debug)]
pub struct Smoothed {
    pub value: f64,
    pub witness: DensityMatrix,
}

/// Pulls `candidate` back onto the segment toward `center` until it lies in the
/// ball `½‖· − center‖₁ ≤ ε`.
pub(crate) fn clamp_to_ball(candidate: &DensityMatrix, center: &DensityMatrix, eps: f64) -> DensityMatrix {
    let dist = half_trace_norm_diff(candidate, center);
    if dist <= eps {
        candidate.clone()
    } else {
        // Mixing with the center keeps positivity and unit trace.
        candidate.mix(center, eps / dist * (1.0 - 1e-12))
    }
}

/// The point of the segment from `center` toward `target` at trace distance `ε`
/// (or `target` itself when it is closer).
pub(crate) fn step_toward(center: &DensityMatrix, target: &DensityMatrix, eps: f64) -> DensityMatrix {
    clamp_to_ball(target, center, eps)
}

/// `D_max^ε(ρ‖σ) = inf{D_max(ρ'‖σ) : ½‖ρ − ρ'‖₁ ≤ ε}`, as a certified upper bound
/// attained by the returned witness.
pub fn d_max_smoothed(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<Smoothed> {
    check_dims(rho.dim(), sigma.dim())?;
    check_epsilon(eps)?;
    Ok(d_max_smoothed_unchecked(rho, sigma, eps))
}

pub(crate) fn d_max_smoothed_unchecked(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Smoothed {
    let base = d_max_unchecked(rho, sigma).max(0.0);
    let mut best = Smoothed {
        value: base,
        witness: rho.clone(),
    };
    if eps == 0.0 || base == 0.0 {
        return best;
    }
    let consider = |best: &mut Smoothed, cand: DensityMatrix| {
        let v = d_max_unchecked(&cand, sigma).max(0.0);
        if v < best.value {
            *best = Smoothed { value: v, witness: cand };
        }
    };
    consider(&mut best, step_toward(rho, sigma, eps));

    // Bisection on λ with an alternating-projection feasibility test.
    let mut lo = 1.0;
    let mut hi = best.value.exp2();
    if hi.is_finite() {
        let mut start = best.witness.as_operator().clone();
        for _ in 0..60 {
            if hi - lo <= 1e-9 * hi {
                break;
            }
            let lambda = 0.5 * (lo + hi);
            let upper = sigma.scale(lambda);
            let ball = |x: &HermitianOperator| project_trace_ball(x, rho, eps);
            let order = |x: &HermitianOperator| project_below(&project_psd(x), &upper);
            let (x, _) = dykstra(&start, &[&ball, &order], 600, 1e-9);
            let cand = clamp_to_ball(&project_density(&x), rho, eps);
            let ratio = max_ratio(&cand, sigma);
            if ratio <= lambda * (1.0 + 1e-9) {
                hi = ratio.max(lo).min(hi);
                start = cand.as_operator().clone();
                consider(&mut best, cand);
            } else {
                lo = lambda;
            }
        }
    }
    best
}

/// `D_max,F(ρ‖σ) = log₂ inf{λ > 1 : (λσ − ρ)/(λ − 1) ∈ F}`.
#[derive(Clone, Debug)]
pub struct RayDivergence {
    pub value: f64,
    /// False when `σ ∉ F`, where the feasible ratios need not form an interval
    /// and the value is the least feasible grid point.
    pub certified: bool,
}

pub fn d_max_f(rho: &DensityMatrix, sigma: &DensityMatrix, free: &FreeSet) -> Result<RayDivergence> {
    check_dims(rho.dim(), sigma.dim())?;
    check_dims(free.dim(), sigma.dim())?;
    Ok(d_max_f_unchecked(rho, sigma, free))
}

pub(crate) fn d_max_f_unchecked(rho: &HermitianOperator, sigma: &HermitianOperator, free: &FreeSet) -> RayDivergence {
    if matches!(free.kind(), FreeSetKind::Full) {
        return RayDivergence {
            value: d_max_unchecked(rho, sigma).max(0.0),
            certified: true,
        };
    }
    let sigma_free = free.state_residual(sigma) <= RAY_MEMBERSHIP_TOL;
    if half_trace_norm_diff(rho, sigma) <= 1e-13 {
        return RayDivergence {
            value: if sigma_free { 0.0 } else { f64::INFINITY },
            certified: sigma_free,
        };
    }
    let floor = max_ratio(rho, sigma);
    if floor.is_infinite() {
        return RayDivergence {
            value: f64::INFINITY,
            certified: true,
        };
    }
    // Positivity holds for every λ ≥ floor; only membership is searched.
    let a = sigma - rho;
    // Below λ = 2 the tolerance applies to the normalized ray point.
    let feasible = |lambda: f64| free.ray_residual(sigma, &a, lambda) <= RAY_MEMBERSHIP_TOL * (lambda - 1.0).min(1.0);
    let lo_start = floor.max(1.0);
    if sigma_free {
        let mut lo = lo_start;
        let mut hi = (2.0 * lo).max(2.0);
        if feasible(lo) && lo > 1.0 {
            return RayDivergence {
                value: lo.log2(),
                certified: true,
            };
        }
        while !feasible(hi) {
            if hi >= RAY_CAP {
                return RayDivergence {
                    value: f64::INFINITY,
                    certified: true,
                };
            }
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-13 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        RayDivergence {
            value: hi.log2().max(0.0),
            certified: true,
        }
    } else {
        let step = 10f64.powf(1.0 / 1024.0);
        let mut lambda = lo_start.max(1.0 + 1e-12);
        while lambda <= RAY_CAP {
            if feasible(lambda) {
                return RayDivergence {
                    value: lambda.log2(),
                    certified: false,
                };
            }
            lambda *= step;
        }
        RayDivergence {
            value: f64::INFINITY,
            certified: false,
        }
    }
}

/// Smoothed `D_max,F`: an upper bound from explicit candidates in the ball.
pub fn d_max_f_smoothed(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    free: &FreeSet,
    eps: f64,
    seed: u64,
) -> Result<Smoothed> {
    check_dims(rho.dim(), sigma.dim())?;
    check_dims(free.dim(), sigma.dim())?;
    check_epsilon(eps)?;
    Ok(d_max_f_smoothed_unchecked(rho, sigma, free, eps, seed, 50))
}

pub(crate) fn d_max_f_smoothed_unchecked(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    free: &FreeSet,
    eps: f64,
    seed: u64,
    restarts: usize,
) -> Smoothed {
    let mut best = Smoothed {
        value: d_max_f_unchecked(rho, sigma, free).value,
        witness: rho.clone(),
    };
    if eps == 0.0 || best.value == 0.0 {
        return best;
    }
    let mut consider = |cand: DensityMatrix| {
        let v = d_max_f_unchecked(&cand, sigma, free).value;
        if v < best.value {
            best = Smoothed { value: v, witness: cand };
        }
    };
    consider(step_toward(rho, sigma, eps));
    consider(step_toward(rho, &free.repair(rho), eps));
    if matches!(free.kind(), FreeSetKind::Incoherent) {
        let dephased = rho.dephased();
        if half_trace_norm_diff(rho, &dephased) <= eps {
            consider(dephased);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let toward = if rng.random_bool(0.5) {
            free.sample_with(&mut rng)
        } else {
            random_state(rho.dim(), rho.dim(), &mut rng)
        };
        consider(step_toward(rho, &toward, eps * rng.random::<f64>()));
    }
    best
}
