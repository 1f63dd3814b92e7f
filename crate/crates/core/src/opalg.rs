//! Dense complex Hermitian operator algebra.
//!
//! Everything here is sized for desk-scale systems (dimension at most 16), so
//! each spectral operation is a full `O(d^3)` eigendecomposition.

use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dims, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Largest anti-Hermitian component absorbed by symmetrization.
pub const TOL_HERM: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a density matrix.
pub const TOL_PSD_STATE: f64 = 1e-9;
/// Trace tolerance for density matrices.
pub const TOL_TRACE: f64 = 1e-10;
/// Complete-positivity tolerance on Choi matrices.
pub const TOL_CP: f64 = 1e-8;
/// Trace-preservation tolerance on Choi matrices.
pub const TOL_TP: f64 = 1e-8;
/// Eigenvalue cutoff for rank and support decisions.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// A Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

/// Eigenvalues in descending order with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// `V f(Λ) V†`.
    pub fn rebuild(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for k in 0..d {
            let w = f(self.values[k]);
            scaled.column_mut(k).scale_mut(w);
        }
        HermitianOperator::symmetrized(&scaled * self.vectors.adjoint())
    }

    /// `V diag(values) V†` with replacement eigenvalues in the same order.
    pub fn rebuild_with(&self, values: &[f64]) -> HermitianOperator {
        let mut scaled = self.vectors.clone();
        for (k, &w) in values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(w);
        }
        HermitianOperator::symmetrized(&scaled * self.vectors.adjoint())
    }

    /// Projector onto the span of the eigenvectors selected by `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> HermitianOperator {
        self.rebuild(|x| if keep(x) { 1.0 } else { 0.0 })
    }
}

impl HermitianOperator {
    /// Validates Hermiticity; violations up to [`TOL_HERM`] (relative to the
    /// largest entry, floored at one) are symmetrized away, larger ones rejected.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidOperator(format!(
                "expected a non-empty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let violation = (&mat - mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if violation > TOL_HERM * scale {
            return Err(Error::InvalidOperator(format!(
                "matrix is not Hermitian (max |A - A^dag| = {violation:e})"
            )));
        }
        Ok(Self::symmetrized(mat))
    }

    /// `(A + A†)/2` without any check; for results of Hermitian-preserving arithmetic.
    pub(crate) fn symmetrized(mat: CMatrix) -> Self {
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj).scale(0.5),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self {
            mat: CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    /// `|v⟩⟨v|`, unnormalized.
    pub fn outer(v: &DVector<C64>) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// `Tr[A B]`, real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    m = m.max(self.mat[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: self.mat.scale(s) }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &HermitianOperator, b: f64) -> Self {
        Self {
            mat: self.mat.scale(a) + other.mat.scale(b),
        }
    }

    /// `X A X†` for an arbitrary square `X`.
    pub fn congruence(&self, x: &CMatrix) -> Self {
        Self::symmetrized(x * &self.mat * x.adjoint())
    }

    pub fn spectrum(&self) -> Spectrum {
        let eig = self.mat.clone().symmetric_eigen();
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
        Spectrum { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("non-empty operator")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x.abs()).sum()
    }

    /// Positive part `(A)_+`.
    pub fn positive_part(&self) -> Self {
        self.spectrum().rebuild(|x| x.max(0.0))
    }

    /// Transpose in the computational basis, i.e. entrywise conjugation for Hermitian matrices.
    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    /// Transpose on the second tensor factor of a `dim_a x dim_b` system.
    pub fn partial_transpose(&self, dim_a: usize, dim_b: usize) -> Result<Self> {
        check_dims(self.dim(), dim_a * dim_b)?;
        Ok(self.partial_transpose_unchecked(dim_a, dim_b))
    }

    pub(crate) fn partial_transpose_unchecked(&self, dim_a: usize, dim_b: usize) -> Self {
        let d = dim_a * dim_b;
        let mut out = CMatrix::zeros(d, d);
        for ia in 0..dim_a {
            for jb in 0..dim_b {
                for ka in 0..dim_a {
                    for lb in 0..dim_b {
                        out[(ia * dim_b + lb, ka * dim_b + jb)] = self.mat[(ia * dim_b + jb, ka * dim_b + lb)];
                    }
                }
            }
        }
        Self { mat: out }
    }

    /// Partial trace over the second factor of a `dim_a x dim_b` system.
    pub fn partial_trace_second(&self, dim_a: usize, dim_b: usize) -> Result<Self> {
        check_dims(self.dim(), dim_a * dim_b)?;
        let mut out = CMatrix::zeros(dim_a, dim_a);
        for i in 0..dim_a {
            for k in 0..dim_a {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..dim_b {
                    acc += self.mat[(i * dim_b + j, k * dim_b + j)];
                }
                out[(i, k)] = acc;
            }
        }
        Ok(Self::symmetrized(out))
    }

    pub fn kron(&self, other: &HermitianOperator) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { mat: &self.mat - &rhs.mat }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

/// Eigendecomposition with descending eigenvalues.
pub fn eig_decompose(a: &HermitianOperator) -> Spectrum {
    a.spectrum()
}

/// A positive semidefinite, unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl Deref for DensityMatrix {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(Error::InvalidOperator(format!("trace is {tr}, expected 1")));
        }
        let min = op.min_eigenvalue();
        if min < -TOL_PSD_STATE {
            return Err(Error::InvalidOperator(format!("minimum eigenvalue {min:e} is negative")));
        }
        Ok(Self { op })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(mat)?)
    }

    /// Clips negative eigenvalues and renormalizes. Panics on an operator with no positive part.
    pub fn from_psd_repair(op: &HermitianOperator) -> Self {
        let pos = op.positive_part();
        let tr = pos.trace();
        assert!(tr > 0.0, "cannot normalize an operator with zero positive part");
        Self { op: pos.scale(1.0 / tr) }
    }

    /// Wraps an operator known to be a state up to round-off.
    pub(crate) fn assume_valid(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut diag = vec![0.0; dim];
        diag[k] = 1.0;
        Self {
            op: HermitianOperator::from_real_diagonal(&diag),
        }
    }

    pub fn diagonal_state(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(probs))
    }

    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        Ok(Self {
            op: HermitianOperator::outer(&v.unscale(n)),
        })
    }

    /// `|+_d⟩ = d^{-1/2} Σ_i |i⟩`.
    pub fn max_coherent(dim: usize) -> Self {
        let v = DVector::from_element(dim, C64::new(1.0, 0.0));
        Self::pure(&v).expect("non-zero vector")
    }

    /// `|Φ⁺⟩ = d^{-1/2} Σ_i |ii⟩` on `d x d`.
    pub fn max_entangled(local_dim: usize) -> Self {
        let mut v = DVector::from_element(local_dim * local_dim, C64::new(0.0, 0.0));
        for i in 0..local_dim {
            v[i * local_dim + i] = C64::new(1.0, 0.0);
        }
        Self::pure(&v).expect("non-zero vector")
    }

    /// `F Φ⁺ + (1 - F)(I - Φ⁺)/(d² - 1)` on `d x d`.
    pub fn isotropic(local_dim: usize, fidelity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(Error::InvalidParameter(format!("fidelity {fidelity} outside [0, 1]")));
        }
        let phi = Self::max_entangled(local_dim);
        let d2 = (local_dim * local_dim) as f64;
        let rest = (&HermitianOperator::identity(local_dim * local_dim) - &phi).scale(1.0 / (d2 - 1.0));
        Self::new(phi.combine(fidelity, &rest, 1.0 - fidelity))
    }

    /// `t ρ + (1 - t) σ`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Self {
        Self {
            op: self.combine(t, other, 1.0 - t),
        }
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.op
    }

    /// Completely dephased copy (diagonal part).
    pub fn dephased(&self) -> Self {
        Self {
            op: HermitianOperator::from_real_diagonal(&self.diagonal()),
        }
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        Self { op: self.kron(other) }
    }
}

/// `½‖ρ − σ‖₁`.
pub fn half_trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    Ok(half_trace_norm_diff(rho, sigma))
}

pub(crate) fn half_trace_norm_diff(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    0.5 * (a - b).trace_norm()
}

/// Projector onto the eigenvectors of `rho` with eigenvalue above `cutoff`.
pub fn support_projector(rho: &HermitianOperator, cutoff: f64) -> HermitianOperator {
    rho.spectrum().projector(|x| x > cutoff)
}

/// Partial transpose on the second factor.
pub fn partial_transpose(rho: &HermitianOperator, dim_a: usize, dim_b: usize) -> Result<HermitianOperator> {
    rho.partial_transpose(dim_a, dim_b)
}

/// Binary test-and-prepare description: measure `{P, 1 − P}` and prepare `on_accept` or `on_reject`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestAndPrepare {
    pub test: HermitianOperator,
    pub on_accept: DensityMatrix,
    pub on_reject: DensityMatrix,
}

/// Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelChoi {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: HermitianOperator,
    pub description: Option<TestAndPrepare>,
}

impl ChannelChoi {
    pub fn new(dim_in: usize, dim_out: usize, choi: HermitianOperator) -> Result<Self> {
        check_dims(dim_in * dim_out, choi.dim())?;
        Ok(Self {
            dim_in,
            dim_out,
            choi,
            description: None,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let phi = DensityMatrix::max_entangled(dim).scale(dim as f64);
        Self {
            dim_in: dim,
            dim_out: dim,
            choi: phi,
            description: None,
        }
    }

    /// `X ↦ Tr[X] I/d_out`.
    pub fn fully_depolarizing(dim_in: usize, dim_out: usize) -> Self {
        Self::constant(dim_in, &DensityMatrix::maximally_mixed(dim_out))
    }

    /// `X ↦ Tr[X] ω`.
    pub fn constant(dim_in: usize, omega: &DensityMatrix) -> Self {
        Self {
            dim_in,
            dim_out: omega.dim(),
            choi: HermitianOperator::identity(dim_in).kron(omega),
            description: None,
        }
    }

    /// `X ↦ Tr[P X] α + Tr[(1 − P) X] β`, with Choi matrix `Pᵀ ⊗ α + (1 − P)ᵀ ⊗ β`.
    pub fn test_and_prepare(test: &HermitianOperator, on_accept: &DensityMatrix, on_reject: &DensityMatrix) -> Result<Self> {
        check_dims(on_accept.dim(), on_reject.dim())?;
        let d_in = test.dim();
        let complement = &HermitianOperator::identity(d_in) - test;
        let choi = &test.transpose().kron(on_accept) + &complement.transpose().kron(on_reject);
        Ok(Self {
            dim_in: d_in,
            dim_out: on_accept.dim(),
            choi,
            description: Some(TestAndPrepare {
                test: test.clone(),
                on_accept: on_accept.clone(),
                on_reject: on_reject.clone(),
            }),
        })
    }

    /// Random CPTP map: Wishart Choi matrix renormalized so that `Tr_out J = I`.
    pub fn random<R: Rng + ?Sized>(dim_in: usize, dim_out: usize, rng: &mut R) -> Self {
        let n = dim_in * dim_out;
        let g = ginibre(n, n, rng);
        let j = HermitianOperator::symmetrized(&g * g.adjoint());
        let marginal = j.partial_trace_second(dim_in, dim_out).expect("dims consistent");
        let inv_sqrt = marginal.spectrum().rebuild(|x| 1.0 / x.sqrt());
        let lift = inv_sqrt.kron(&HermitianOperator::identity(dim_out));
        Self {
            dim_in,
            dim_out,
            choi: j.congruence(lift.matrix()),
            description: None,
        }
    }

    /// `max(0, −λ_min(J))`.
    pub fn cp_residual(&self) -> f64 {
        (-self.choi.min_eigenvalue()).max(0.0)
    }

    /// `max_ij |(Tr_out J − I)_ij|`.
    pub fn tp_residual(&self) -> f64 {
        let marginal = self
            .choi
            .partial_trace_second(self.dim_in, self.dim_out)
            .expect("dims consistent by construction");
        (&marginal - &HermitianOperator::identity(self.dim_in)).max_abs_entry()
    }

    pub fn is_cptp(&self) -> bool {
        self.cp_residual() <= TOL_CP && self.tp_residual() <= TOL_TP
    }

    /// `E(X) = Σ_ij X_ij E(|i⟩⟨j|)`, where `E(|i⟩⟨j|)` is block `(i, j)` of the Choi matrix.
    pub fn apply_operator(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        check_dims(self.dim_in, x.dim())?;
        let n = self.dim_out;
        let j = self.choi.matrix();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..self.dim_in {
            for k in 0..self.dim_in {
                let w = x.get(i, k);
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                let block = j.view((i * n, k * n), (n, n));
                out += block * w;
            }
        }
        Ok(HermitianOperator::symmetrized(out))
    }
}

/// Applies the channel; the result is re-wrapped as a state without repair, so a
/// non-CPTP map may produce a slightly invalid "state" that downstream checks will flag.
pub fn apply_channel(channel: &ChannelChoi, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::assume_valid(channel.apply_operator(rho)?))
}

pub(crate) fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Random state from the induced measure with the given rank.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, rank.max(1), rng);
    let op = HermitianOperator::symmetrized(&g * g.adjoint());
    let tr = op.trace();
    DensityMatrix::assume_valid(op.scale(1.0 / tr))
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, 1, rng);
    DensityMatrix::pure(&g.column(0).into_owned()).expect("Gaussian vector is non-zero")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    HermitianOperator::symmetrized(ginibre(dim, dim, rng))
}
