//! Projection kernels and a small operator-splitting solver for the
//! spectrahedral subproblems that appear over the PPT and incoherent free sets.
//!
//! The solver handles problems of the form
//!
//! ```text
//! minimize ⟨C, X⟩  over Hermitian X
//! subject to  X ∈ A                (affine: optional Tr X = 1, optional diagonal X)
//!             L_k(X) − B_k ⪰ 0      (L_k the identity or a partial transpose)
//! ```
//!
//! Each `L_k` is a Frobenius isometry and an involution, which makes the
//! X-update of the alternating-direction scheme a closed-form average.

use crate::opalg::{DensityMatrix, HermitianOperator};

/// Linear maps allowed inside cone constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConeMap {
    Identity,
    PartialTranspose { dim_a: usize, dim_b: usize },
}

impl ConeMap {
    pub(crate) fn apply(&self, x: &HermitianOperator) -> HermitianOperator {
        match *self {
            ConeMap::Identity => x.clone(),
            ConeMap::PartialTranspose { dim_a, dim_b } => x.partial_transpose_unchecked(dim_a, dim_b),
        }
    }
}

/// `map(X) − offset ⪰ 0`.
#[derive(Clone, Debug)]
pub(crate) struct ConeConstraint {
    pub map: ConeMap,
    pub offset: Option<HermitianOperator>,
}

impl ConeConstraint {
    pub(crate) fn psd(map: ConeMap) -> Self {
        Self { map, offset: None }
    }

    pub(crate) fn shifted(map: ConeMap, offset: HermitianOperator) -> Self {
        Self { map, offset: Some(offset) }
    }

    fn residual_operator(&self, x: &HermitianOperator) -> HermitianOperator {
        let mapped = self.map.apply(x);
        match &self.offset {
            Some(b) => &mapped - b,
            None => mapped,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ConicProblem {
    pub dim: usize,
    pub objective: HermitianOperator,
    pub trace_one: bool,
    pub diagonal: bool,
    pub cones: Vec<ConeConstraint>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct AdmmSettings {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub penalty: f64,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-10,
            penalty: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ConicSolution {
    pub x: HermitianOperator,
    /// Dual multipliers `Y_k ⪰ 0` for each cone constraint, projected onto the PSD cone.
    pub duals: Vec<HermitianOperator>,
    pub iterations: usize,
}

impl ConicProblem {
    fn project_affine(&self, x: &HermitianOperator) -> HermitianOperator {
        let mut y = if self.diagonal {
            HermitianOperator::from_real_diagonal(&x.diagonal())
        } else {
            x.clone()
        };
        if self.trace_one {
            let shift = (1.0 - y.trace()) / self.dim as f64;
            y = &y + &HermitianOperator::identity(self.dim).scale(shift);
        }
        y
    }

    /// Scaled-form ADMM with residual balancing on the penalty parameter.
    pub(crate) fn solve(&self, settings: AdmmSettings, warm_start: Option<&HermitianOperator>) -> ConicSolution {
        let k = self.cones.len();
        let d = self.dim;
        let mut rho = settings.penalty;
        let mut x = match warm_start {
            Some(w) => w.clone(),
            None => self.project_affine(&HermitianOperator::identity(d).scale(1.0 / d as f64)),
        };
        let mut z: Vec<HermitianOperator> = self
            .cones
            .iter()
            .map(|c| project_psd(&c.residual_operator(&x)))
            .collect();
        let mut u: Vec<HermitianOperator> = vec![HermitianOperator::zeros(d); k];
        let mut iterations = 0;
        let scale = 1.0 + self.objective.frobenius_norm();

        for it in 0..settings.max_iterations {
            iterations = it + 1;
            // X-update: average of the pulled-back targets, shifted by the objective.
            let mut acc = self.objective.scale(-1.0 / rho);
            for (j, cone) in self.cones.iter().enumerate() {
                let mut target = &z[j] - &u[j];
                if let Some(b) = &cone.offset {
                    target = &target + b;
                }
                acc = &acc + &cone.map.apply(&target);
            }
            let x_new = self.project_affine(&acc.scale(1.0 / k as f64));

            let mut r2 = 0.0;
            let mut s2 = 0.0;
            for (j, cone) in self.cones.iter().enumerate() {
                let lx = cone.residual_operator(&x_new);
                let z_new = project_psd(&(&lx + &u[j]));
                let r = &lx - &z_new;
                r2 += r.frobenius_norm().powi(2);
                s2 += (&z_new - &z[j]).frobenius_norm().powi(2);
                u[j] = &u[j] + &r;
                z[j] = z_new;
            }
            x = x_new;
            let primal_residual = r2.sqrt();
            let dual_residual = rho * s2.sqrt();
            if primal_residual < settings.tolerance * scale && dual_residual < settings.tolerance * scale && it > 10 {
                break;
            }
            if it % 50 == 49 {
                if primal_residual > 10.0 * dual_residual {
                    rho *= 2.0;
                    for uj in u.iter_mut() {
                        *uj = uj.scale(0.5);
                    }
                } else if dual_residual > 10.0 * primal_residual {
                    rho *= 0.5;
                    for uj in u.iter_mut() {
                        *uj = uj.scale(2.0);
                    }
                }
            }
        }
        let duals = u.iter().map(|uj| project_psd(&uj.scale(-rho))).collect();
        ConicSolution {
            x,
            duals,
            iterations,
        }
    }
}

/// Frobenius projection onto the PSD cone.
pub(crate) fn project_psd(x: &HermitianOperator) -> HermitianOperator {
    x.positive_part()
}

/// Frobenius projection onto `{X ⪯ upper}`.
pub(crate) fn project_below(x: &HermitianOperator, upper: &HermitianOperator) -> HermitianOperator {
    let gap = upper - x;
    upper - &project_psd(&gap)
}

/// Euclidean projection onto `{p ≥ 0, Σ p = total}`.
pub(crate) fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - total) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Euclidean projection onto the l1 ball of the given radius.
pub(crate) fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return v.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let w = project_simplex(&abs, radius);
    v.iter().zip(w).map(|(x, m)| m * x.signum()).collect()
}

/// Euclidean projection onto `{Σ v = 0, ‖v‖₁ ≤ radius}`, by Dykstra's method on the two sets.
pub(crate) fn project_l1_zero_sum(v: &[f64], radius: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let mut x = v.to_vec();
    let mut p = vec![0.0; v.len()];
    let mut q = vec![0.0; v.len()];
    for _ in 0..500 {
        let y_in: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let mean = y_in.iter().sum::<f64>() / n;
        let y: Vec<f64> = y_in.iter().map(|a| a - mean).collect();
        p = y_in.iter().zip(&y).map(|(a, b)| a - b).collect();
        let x_in: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let x_new = project_l1_ball(&x_in, radius);
        q = x_in.iter().zip(&x_new).map(|(a, b)| a - b).collect();
        let change: f64 = x_new.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = x_new;
        let sum: f64 = x.iter().sum();
        if change < 1e-15 && sum.abs() < 1e-14 {
            break;
        }
    }
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|a| a - mean).collect()
}

/// Frobenius projection onto the density matrices.
pub(crate) fn project_density(x: &HermitianOperator) -> DensityMatrix {
    let spec = x.spectrum();
    let p = project_simplex(&spec.values, 1.0);
    DensityMatrix::assume_valid(spec.rebuild_with(&p))
}

/// Frobenius projection onto `{X : Tr X = 1, ‖X − center‖₁ ≤ 2ε}`.
pub(crate) fn project_trace_ball(x: &HermitianOperator, center: &HermitianOperator, eps: f64) -> HermitianOperator {
    let delta = x - center;
    let spec = delta.spectrum();
    // The trace shift of X is absorbed into the zero-sum constraint on the eigenvalues of X − center.
    let shift = (center.trace() - 1.0) / spec.dim() as f64;
    let shifted: Vec<f64> = spec.values.iter().map(|v| v + shift).collect();
    let proj = project_l1_zero_sum(&shifted, 2.0 * eps);
    let unshifted: Vec<f64> = proj.iter().map(|v| v - shift).collect();
    let projected_delta = spec.rebuild_with(&unshifted);
    center + &projected_delta
}

/// Dykstra's alternating projection over a list of convex sets given by their projectors.
/// Returns the final iterate and the largest pairwise disagreement at exit.
pub(crate) fn dykstra(
    start: &HermitianOperator,
    projectors: &[&dyn Fn(&HermitianOperator) -> HermitianOperator],
    max_iterations: usize,
    tolerance: f64,
) -> (HermitianOperator, f64) {
    let n = projectors.len();
    let d = start.dim();
    let mut x = start.clone();
    let mut increments = vec![HermitianOperator::zeros(d); n];
    let mut iterates = vec![start.clone(); n];
    let mut spread = f64::INFINITY;
    for _ in 0..max_iterations {
        for j in 0..n {
            let y = &x + &increments[j];
            let p = projectors[j](&y);
            increments[j] = &y - &p;
            x = p.clone();
            iterates[j] = p;
        }
        spread = iterates
            .iter()
            .map(|it| (it - &x).frobenius_norm())
            .fold(0.0, f64::max);
        if spread < tolerance {
            break;
        }
    }
    (x, spread)
}
