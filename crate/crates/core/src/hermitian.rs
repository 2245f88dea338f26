//! Dense complex Hermitian matrix utilities.
//!
//! Every matrix symbol in the allocation problem (beamformer covariances,
//! artificial-noise covariance, slack matrices, channel outer products) is a
//! small dense Hermitian matrix. This module wraps them in a validated newtype
//! and provides the spectral helpers the rest of the crate relies on: PSD
//! checks, eigendecomposition, rank estimation and the real symmetric
//! embedding used to hand Hermitian LMIs to a real-cone solver.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Absolute tolerance on entry asymmetry accepted by [`HermitianMatrix::new`].
pub const TOL_HERM: f64 = 1e-9;

/// `λ₂/λ₁` at or below this value declares a PSD matrix rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

/// A complex Hermitian matrix. Construction symmetrizes as `(A + Aᴴ)/2`, so
/// the stored entries are exactly conjugate-symmetric with a real diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates `m` against [`TOL_HERM`] and symmetrizes it.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, TOL_HERM)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        if !worst.is_finite() || worst > tol {
            return Err(Error::Validation(format!(
                "matrix is not hermitian: max |a_ij - conj(a_ji)| = {worst:.3e} > {tol:.1e}"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without validation. Use for matrices that are Hermitian
    /// by construction up to rounding.
    pub fn symmetrized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self(h)
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    /// `v vᴴ`.
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `Re Tr(self · other)`, the real inner product on Hermitian matrices.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.0[(i, j)] * other.0[(j, i)]).re;
            }
        }
        acc
    }

    /// `Fᴴ X F` for a (possibly rectangular) factor `F` with `dim` rows.
    pub fn congruence(&self, f: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrized(f.adjoint() * &self.0 * f)
    }

    /// `vᴴ X v`, real for Hermitian `X`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let e = eig_hermitian(self);
        e.values
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let e = eig_hermitian(self);
        *e.values.last().unwrap_or(&0.0)
    }

    /// Places `self` into a larger zero matrix at `(offset, offset)`.
    pub fn embed_diagonal_block(&self, total: usize, offset: usize) -> HermitianMatrix {
        let mut m = CMatrix::zeros(total, total);
        m.view_mut((offset, offset), (self.dim(), self.dim()))
            .copy_from(&self.0);
        HermitianMatrix(m)
    }

    /// Congruence-scales by a positive diagonal: `D X D`.
    pub fn scale_diagonal(&self, d: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        let mut m = self.0.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= d[i] * d[j];
            }
        }
        HermitianMatrix(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Add for HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(self.0 + rhs.0)
    }
}

impl AddAssign<&HermitianMatrix> for HermitianMatrix {
    fn add_assign(&mut self, rhs: &HermitianMatrix) {
        self.0 += &rhs.0;
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix(-self.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        HermitianMatrix(&self.0 * C64::new(rhs, 0.0))
    }
}

impl Mul<f64> for HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        HermitianMatrix(self.0 * C64::new(rhs, 0.0))
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

impl HermitianEigen {
    pub fn principal(&self) -> Option<(f64, &CVector)> {
        self.values.first().map(|&v| (v, &self.vectors[0]))
    }

    /// Reassembles `Σ λᵢ uᵢ uᵢᴴ`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.vectors.first().map_or(0, |v| v.len());
        let mut m = CMatrix::zeros(n, n);
        for (lam, u) in self.values.iter().zip(&self.vectors) {
            m += u * u.adjoint() * C64::new(*lam, 0.0);
        }
        HermitianMatrix::symmetrized(m)
    }
}

pub fn eig_hermitian(a: &HermitianMatrix) -> HermitianEigen {
    let n = a.dim();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        };
    }
    let se = SymmetricEigen::new(a.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| se.eigenvectors.column(i).into_owned())
        .collect();
    HermitianEigen { values, vectors }
}

/// True iff the minimum eigenvalue is at least `-tol`.
pub fn is_psd(a: &HermitianMatrix, tol: f64) -> bool {
    a.dim() == 0 || a.min_eigenvalue() >= -tol
}

/// `[[Re A, −Im A], [Im A, Re A]]`. PSD iff `A` is PSD; every eigenvalue of
/// `A` appears twice.
pub fn real_embed(a: &HermitianMatrix) -> DMatrix<f64> {
    let n = a.dim();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a.0[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Number of eigenvalues exceeding `tol · λ_max`.
pub fn rank_estimate(a: &HermitianMatrix, tol: f64) -> usize {
    let e = eig_hermitian(a);
    let top = e.values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    e.values.iter().filter(|&&v| v > tol * top).count()
}

/// `λ₂/λ₁` of a PSD matrix; 0 for rank ≤ 1 or the zero matrix.
pub fn rank_one_ratio(a: &HermitianMatrix) -> f64 {
    let e = eig_hermitian(a);
    match (e.values.first(), e.values.get(1)) {
        (Some(&l1), Some(&l2)) if l1 > 0.0 => (l2.max(0.0)) / l1,
        _ => 0.0,
    }
}

/// Rotates `v` so that its first entry with magnitude above `1e-12·‖v‖∞` is
/// real and nonnegative.
pub fn canonical_phase(v: &CVector) -> CVector {
    let peak = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if peak == 0.0 {
        return v.clone();
    }
    let anchor = v
        .iter()
        .find(|z| z.norm() > 1e-12 * peak)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let rot = anchor.conj() / anchor.norm();
    v.map(|z| z * rot)
}
