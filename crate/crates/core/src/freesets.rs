//! Closed convex free sets and their oracles: membership, linear optimization,
//! sampling and (when finite) the extreme points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conic::{project_density, AdmmSettings, ConeConstraint, ConeMap, ConicProblem};
use crate::error::{check_dims, Error, Result};
use crate::opalg::{half_trace_norm_diff, random_pure_state, random_state, DensityMatrix, HermitianOperator};

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Target duality gap of the PPT linear oracle.
pub const PPT_GAP_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub enum FreeSetKind {
    /// Every state is free.
    Full,
    /// A single free state (athermality, asymmetric distinguishability).
    Singleton(DensityMatrix),
    /// States diagonal in the computational basis.
    Incoherent,
    /// States with positive partial transpose on `dim_a x dim_b`.
    Ppt { dim_a: usize, dim_b: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeSet {
    kind: FreeSetKind,
    dim: usize,
}

/// Result of a linear optimization over the free set.
///
/// `value = Tr[A·argopt]` is attained by a member of the set; `bound` is a certified
/// bound on the true optimum from the other side (upper for maximization, lower for
/// minimization), equal to `value` for the sets solved in closed form.
#[derive(Clone, Debug)]
pub struct LinearOptimum {
    pub value: f64,
    pub argopt: DensityMatrix,
    pub bound: f64,
    pub iterations: usize,
}

impl LinearOptimum {
    pub fn gap(&self) -> f64 {
        (self.bound - self.value).abs()
    }
}

impl FreeSet {
    pub fn full(dim: usize) -> Self {
        Self {
            kind: FreeSetKind::Full,
            dim,
        }
    }

    pub fn singleton(gamma: DensityMatrix) -> Self {
        let dim = gamma.dim();
        Self {
            kind: FreeSetKind::Singleton(gamma),
            dim,
        }
    }

    pub fn incoherent(dim: usize) -> Self {
        Self {
            kind: FreeSetKind::Incoherent,
            dim,
        }
    }

    pub fn ppt(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a < 1 || dim_b < 1 {
            return Err(Error::InvalidParameter("PPT factor dimensions must be positive".into()));
        }
        Ok(Self {
            kind: FreeSetKind::Ppt { dim_a, dim_b },
            dim: dim_a * dim_b,
        })
    }

    pub fn kind(&self) -> &FreeSetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FreeSetKind::Full => "full".into(),
            FreeSetKind::Singleton(_) => "singleton".into(),
            FreeSetKind::Incoherent => "incoherent".into(),
            FreeSetKind::Ppt { dim_a, dim_b } => format!("ppt:{dim_a}x{dim_b}"),
        }
    }

    /// Distance-like violation of membership for a state-like operator: zero iff free.
    ///
    /// full: negativity; singleton: half trace distance to γ; incoherent: largest
    /// off-diagonal modulus; ppt: negativity of the partial transpose.
    pub fn membership_residual(&self, omega: &HermitianOperator) -> f64 {
        match &self.kind {
            FreeSetKind::Full => (-omega.min_eigenvalue()).max(0.0),
            FreeSetKind::Singleton(gamma) => half_trace_norm_diff(omega, gamma),
            FreeSetKind::Incoherent => omega.max_abs_off_diagonal(),
            FreeSetKind::Ppt { dim_a, dim_b } => {
                (-omega.partial_transpose_unchecked(*dim_a, *dim_b).min_eigenvalue()).max(0.0)
            }
        }
    }

    /// Membership of a state-like operator, also requiring positivity (`ω ⪰ −tol`).
    pub(crate) fn state_residual(&self, omega: &HermitianOperator) -> f64 {
        let psd = (-omega.min_eigenvalue()).max(0.0);
        psd.max(self.membership_residual(omega))
    }

    pub fn contains(&self, omega: &DensityMatrix, tol: f64) -> Result<bool> {
        check_dims(self.dim, omega.dim())?;
        Ok(self.membership_residual(omega) <= tol)
    }

    /// Membership violation of the unnormalized ray point `(λ − 1)σ + A`, where
    /// `A = σ − ρ`. The two parts are combined per constraint so `A` is not lost to
    /// rounding when `λ` is large, and the tolerance applies to the unnormalized
    /// operator. Positivity is not checked here.
    pub(crate) fn ray_residual(&self, sigma: &HermitianOperator, a: &HermitianOperator, lambda: f64) -> f64 {
        let s = lambda - 1.0;
        match &self.kind {
            FreeSetKind::Full => 0.0,
            FreeSetKind::Singleton(gamma) => 0.5 * (sigma - gamma).combine(s, a, 1.0).trace_norm(),
            FreeSetKind::Incoherent => sigma.combine(s, a, 1.0).max_abs_off_diagonal(),
            FreeSetKind::Ppt { dim_a, dim_b } => {
                let sp = sigma.partial_transpose_unchecked(*dim_a, *dim_b);
                let ap = a.partial_transpose_unchecked(*dim_a, *dim_b);
                (-sp.combine(s, &ap, 1.0).min_eigenvalue()).max(0.0)
            }
        }
    }

    /// `max_{ω ∈ F} Tr[A ω]` with a maximizer.
    pub fn max_linear(&self, a: &HermitianOperator) -> Result<LinearOptimum> {
        check_dims(self.dim, a.dim())?;
        Ok(match &self.kind {
            FreeSetKind::Full => {
                let spec = a.spectrum();
                let top = DensityMatrix::pure(&spec.vector(0)).expect("unit eigenvector");
                LinearOptimum {
                    value: spec.values[0],
                    argopt: top,
                    bound: spec.values[0],
                    iterations: 0,
                }
            }
            FreeSetKind::Singleton(gamma) => {
                let v = a.inner(gamma);
                LinearOptimum {
                    value: v,
                    argopt: gamma.clone(),
                    bound: v,
                    iterations: 0,
                }
            }
            FreeSetKind::Incoherent => {
                let diag = a.diagonal();
                let (best, v) = diag
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
                LinearOptimum {
                    value: v,
                    argopt: DensityMatrix::basis(self.dim, best),
                    bound: v,
                    iterations: 0,
                }
            }
            FreeSetKind::Ppt { dim_a, dim_b } => ppt_max_linear(a, *dim_a, *dim_b),
        })
    }

    /// `min_{ω ∈ F} Tr[A ω]` with a minimizer; `bound` is a certified lower bound.
    pub fn min_linear(&self, a: &HermitianOperator) -> Result<LinearOptimum> {
        let mut opt = self.max_linear(&a.scale(-1.0))?;
        opt.value = -opt.value;
        opt.bound = -opt.bound;
        Ok(opt)
    }

    /// Deterministic pseudo-random free state.
    pub fn sample(&self, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DensityMatrix {
        match &self.kind {
            FreeSetKind::Full => {
                let rank = rng.random_range(1..=self.dim);
                random_state(self.dim, rank, rng)
            }
            FreeSetKind::Singleton(gamma) => gamma.clone(),
            FreeSetKind::Incoherent => {
                // Mix of uniform weights and sparse vertices so that faces get exercised.
                let mut p: Vec<f64> = (0..self.dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                if rng.random_bool(0.3) {
                    let zeroed = rng.random_range(0..self.dim);
                    p[zeroed] = 0.0;
                }
                let total: f64 = p.iter().sum();
                let p: Vec<f64> = if total > 0.0 {
                    p.iter().map(|x| x / total).collect()
                } else {
                    vec![1.0 / self.dim as f64; self.dim]
                };
                DensityMatrix::diagonal_state(&p).expect("probability vector")
            }
            FreeSetKind::Ppt { dim_a, dim_b } => {
                let terms = rng.random_range(1..=4);
                let weights: Vec<f64> = (0..terms).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let total: f64 = weights.iter().sum();
                let mut acc = HermitianOperator::zeros(self.dim);
                for w in weights {
                    let a = if rng.random_bool(0.5) {
                        random_pure_state(*dim_a, rng)
                    } else {
                        random_state(*dim_a, *dim_a, rng)
                    };
                    let b = if rng.random_bool(0.5) {
                        random_pure_state(*dim_b, rng)
                    } else {
                        random_state(*dim_b, *dim_b, rng)
                    };
                    acc = &acc + &a.tensor(&b).scale(w / total);
                }
                DensityMatrix::assume_valid(acc)
            }
        }
    }

    /// Extreme points when finitely many.
    pub fn vertices(&self) -> Option<Vec<DensityMatrix>> {
        match &self.kind {
            FreeSetKind::Incoherent => Some((0..self.dim).map(|k| DensityMatrix::basis(self.dim, k)).collect()),
            FreeSetKind::Singleton(gamma) => Some(vec![gamma.clone()]),
            FreeSetKind::Full | FreeSetKind::Ppt { .. } => None,
        }
    }

    /// A free state of full rank when one exists (the singleton may be rank deficient).
    pub fn interior_point(&self) -> DensityMatrix {
        match &self.kind {
            FreeSetKind::Singleton(gamma) => gamma.clone(),
            _ => DensityMatrix::maximally_mixed(self.dim),
        }
    }

    /// Moves an approximately free state into the set: mixes toward the maximally
    /// mixed state just enough to clear the violation. Identity for members.
    pub(crate) fn repair(&self, omega: &HermitianOperator) -> DensityMatrix {
        let state = project_density(omega);
        match &self.kind {
            FreeSetKind::Full => state,
            FreeSetKind::Singleton(gamma) => gamma.clone(),
            FreeSetKind::Incoherent => state.dephased(),
            FreeSetKind::Ppt { dim_a, dim_b } => {
                let mu = state.partial_transpose_unchecked(*dim_a, *dim_b).min_eigenvalue();
                if mu >= 0.0 {
                    return state;
                }
                let floor = 1.0 / self.dim as f64;
                let s = (-mu / (floor - mu)).min(1.0);
                state.mix(&DensityMatrix::maximally_mixed(self.dim), 1.0 - s)
            }
        }
    }
}

/// PPT linear maximization. The primal point comes from the splitting solver and is
/// repaired into the set; the bound `λ_max(A + Yᵀᴮ)` holds for every `Y ⪰ 0`.
fn ppt_max_linear(a: &HermitianOperator, dim_a: usize, dim_b: usize) -> LinearOptimum {
    let d = dim_a * dim_b;
    let problem = ConicProblem {
        dim: d,
        objective: a.scale(-1.0),
        trace_one: true,
        diagonal: false,
        cones: vec![
            ConeConstraint::psd(ConeMap::Identity),
            ConeConstraint::psd(ConeMap::PartialTranspose { dim_a, dim_b }),
        ],
    };
    let free = FreeSet {
        kind: FreeSetKind::Ppt { dim_a, dim_b },
        dim: d,
    };
    let mut settings = AdmmSettings {
        max_iterations: 4_000,
        tolerance: 1e-11,
        penalty: 1.0,
    };
    let mut warm: Option<HermitianOperator> = None;
    let mut total_iterations = 0;
    let mut best: Option<LinearOptimum> = None;
    for _round in 0..4 {
        let sol = problem.solve(settings, warm.as_ref());
        total_iterations += sol.iterations;
        let argopt = free.repair(&sol.x);
        let value = a.inner(&argopt);
        let bound = [&sol.duals[1], &HermitianOperator::zeros(d)]
            .iter()
            .map(|y| (a + &y.partial_transpose_unchecked(dim_a, dim_b)).max_eigenvalue())
            .fold(f64::INFINITY, f64::min);
        let candidate = LinearOptimum {
            value,
            argopt,
            bound,
            iterations: total_iterations,
        };
        let done = candidate.gap() <= PPT_GAP_TOL * 0.1;
        best = Some(match best {
            Some(b) if b.value >= candidate.value && b.bound <= candidate.bound => b,
            Some(b) => LinearOptimum {
                bound: b.bound.min(candidate.bound),
                iterations: total_iterations,
                ..(if candidate.value >= b.value { candidate } else { b })
            },
            None => candidate,
        });
        if done {
            break;
        }
        warm = Some(sol.x);
        settings.max_iterations *= 2;
    }
    best.expect("at least one round")
}
