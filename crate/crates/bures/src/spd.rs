//! Covariance-matrix calculus: validated symmetric PSD matrices, square
//! roots, the transport map between centered Gaussians, log/exp maps, the
//! anchor-weighted inner product, and geodesics.
//!
//! Conventions used throughout:
//! - `Π(S1, S2) = √(tr S1 + tr S2 − 2 tr(S1^{1/2} S2 S1^{1/2})^{1/2})`,
//!   with the trace argument's eigenvalues clamped at zero and the value
//!   under the outer root clamped at zero.
//! - transport map `t_M^S = M^{−1/2} (M^{1/2} S M^{1/2})^{1/2} M^{−1/2}`,
//!   defined for strictly positive `M` and PSD `S`.
//! - log map `ℓ_M(S) = t_M^S − I`, exp map `e_M(A) = (A+I) M (A+I)`.
//! - inner product at anchor `M`: `⟨A, B⟩_M = tr(A M B)`.

use crate::linalg::{eigen_pair_divide, sym_eigen, LinalgError, Mat, SymEigen};
use crate::scalar::Scalar;
use crate::tol;
use thiserror::Error;

/// Errors from geometry operations.
#[derive(Debug, Error)]
pub enum SpdError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_dev:e})")]
    NonSymmetric { max_dev: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("anchor is numerically singular (min eigenvalue {min_eig:e} <= gate {gate:e})")]
    AnchorSingular { min_eig: f64, gate: f64 },
    #[error("tangent vector leaves the injectivity domain (min eigenvalue of A+I is {min_eig:e})")]
    OutOfInjectivity { min_eig: f64 },
    #[error("geodesic coefficient loses positive semidefiniteness at t = {t} (min eigenvalue {min_eig:e})")]
    ExtrapolationOutOfRange { t: f64, min_eig: f64 },
    #[error("dimension mismatch: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
}

fn check_finite<F: Scalar>(m: &Mat<F>) -> Result<(), SpdError> {
    if m.data().iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SpdError::NonFinite)
    }
}

fn check_symmetric<F: Scalar>(m: &Mat<F>) -> Result<(), SpdError> {
    let dev = m.max_asymmetry();
    if dev > F::c(tol::SYMMETRY_REL) * F::one().max(m.max_abs()) {
        Err(SpdError::NonSymmetric { max_dev: dev.as_f64() })
    } else {
        Ok(())
    }
}

fn check_dims(a: usize, b: usize) -> Result<(), SpdError> {
    if a == b {
        Ok(())
    } else {
        Err(SpdError::DimMismatch { a, b })
    }
}

/// Symmetric positive-semidefinite matrix with its eigendecomposition cached
/// at construction. Construction validates symmetry and semidefiniteness;
/// eigenvalues in `[−ε·‖·‖₂, 0]` are clamped to zero (roundoff), anything
/// lower is rejected as genuinely indefinite.
#[derive(Clone, Debug)]
pub struct CovMatrix<F> {
    mat: Mat<F>,
    eigen: SymEigen<F>,
}

impl<F: Scalar> CovMatrix<F> {
    pub fn new(mat: Mat<F>) -> Result<Self, SpdError> {
        check_finite(&mat)?;
        check_symmetric(&mat)?;
        let sym = mat.sym();
        let eigen = sym_eigen(&sym)?;
        let slack = F::c(tol::PSD_SLACK_REL) * eigen.spectral_norm();
        if eigen.min() < -slack {
            return Err(SpdError::NotPsd { min_eig: eigen.min().as_f64() });
        }
        if eigen.min() < F::zero() {
            Ok(Self::from_clamped_eigen(eigen))
        } else {
            Ok(Self { mat: sym, eigen })
        }
    }

    pub fn from_row_major(dim: usize, data: &[F]) -> Result<Self, SpdError> {
        Ok(Self::new(Mat::from_row_major(dim, data)?)?)
    }

    /// Rebuilds the matrix from eigenvalues clamped at zero, keeping the
    /// stored matrix and decomposition consistent.
    fn from_clamped_eigen(mut eigen: SymEigen<F>) -> Self {
        for v in &mut eigen.values {
            *v = v.max(F::zero());
        }
        let mat = eigen.reconstruct(|l| l);
        Self { mat, eigen }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            mat: Mat::identity(dim),
            eigen: SymEigen { values: vec![F::one(); dim], vectors: Mat::identity(dim) },
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            mat: Mat::zeros(dim),
            eigen: SymEigen { values: vec![F::zero(); dim], vectors: Mat::identity(dim) },
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &Mat<F> {
        &self.mat
    }

    pub fn eigen(&self) -> &SymEigen<F> {
        &self.eigen
    }

    pub fn trace(&self) -> F {
        self.mat.trace()
    }

    pub fn min_eig(&self) -> F {
        self.eigen.min()
    }

    pub fn spectral_norm(&self) -> F {
        self.eigen.spectral_norm()
    }

    /// `Π(self, 0) = √tr(self)`.
    pub fn pi_norm(&self) -> F {
        self.trace().max(F::zero()).sqrt()
    }

    pub fn strictly_positive(&self) -> bool {
        self.strictly_positive_with(F::c(tol::PD_GATE))
    }

    pub fn strictly_positive_with(&self, gate: F) -> bool {
        self.min_eig() > gate
    }

    /// Gate required before this matrix may serve as the base point of a
    /// transport map (an inverse square root is about to be taken).
    pub fn require_anchor(&self) -> Result<(), SpdError> {
        if self.strictly_positive() {
            Ok(())
        } else {
            Err(SpdError::AnchorSingular {
                min_eig: self.min_eig().as_f64(),
                gate: tol::PD_GATE,
            })
        }
    }

    /// Unique PSD square root. Shares the eigenbasis with `self`, so this is
    /// exact relative to the cached decomposition.
    pub fn sym_sqrt(&self) -> CovMatrix<F> {
        let values: Vec<F> = self.eigen.values.iter().map(|&l| l.max(F::zero()).sqrt()).collect();
        let eigen = SymEigen { values, vectors: self.eigen.vectors.clone() };
        let mat = eigen.reconstruct(|l| l);
        CovMatrix { mat, eigen }
    }

    /// `self^{−1/2}`; requires the anchor gate.
    pub fn inv_sqrt(&self) -> Result<Mat<F>, SpdError> {
        self.require_anchor()?;
        Ok(self.eigen.reconstruct(|l| F::one() / l.sqrt()))
    }

    /// Bures-Wasserstein distance `Π(self, other)`.
    pub fn bw_distance(&self, other: &Self) -> Result<F, SpdError> {
        check_dims(self.dim(), other.dim())?;
        let root = self.eigen.reconstruct(|l| l.max(F::zero()).sqrt());
        let inner = root.matmul(other.mat()).matmul(&root).sym();
        let cross: F = sym_eigen(&inner)?
            .values
            .iter()
            .map(|&l| l.max(F::zero()).sqrt())
            .sum();
        let two = F::c(2.0);
        let sq = self.trace() + other.trace() - two * cross;
        Ok(sq.max(F::zero()).sqrt())
    }

    /// Optimal transport map `t_self^target`; symmetric PSD, and pushes
    /// `self` to `target`: `t · self · t = target`.
    pub fn transport_map(&self, target: &Self) -> Result<Mat<F>, SpdError> {
        check_dims(self.dim(), target.dim())?;
        self.require_anchor()?;
        let root = self.eigen.reconstruct(|l| l.sqrt());
        let inv_root = self.eigen.reconstruct(|l| F::one() / l.sqrt());
        let mid = root.matmul(target.mat()).matmul(&root).sym();
        let mid_root = sym_eigen(&mid)?.reconstruct(|l| l.max(F::zero()).sqrt());
        Ok(inv_root.matmul(&mid_root).matmul(&inv_root).sym())
    }

    /// `ℓ_self(target) = t_self^target − I`.
    pub fn log_map(&self, target: &Self) -> Result<TangentVector<F>, SpdError> {
        let t = self.transport_map(target)?;
        Ok(TangentVector::from_sym_unchecked(t.sub(&Mat::identity(self.dim()))))
    }

    /// `e_self(A) = (A+I) · self · (A+I)`; requires `A+I` PSD.
    pub fn exp_map(&self, a: &TangentVector<F>) -> Result<CovMatrix<F>, SpdError> {
        check_dims(self.dim(), a.dim())?;
        self.require_anchor()?;
        let shifted = a.mat().add(&Mat::identity(self.dim()));
        let eigen = sym_eigen(&shifted)?;
        let slack = F::c(tol::PSD_SLACK_REL) * F::one().max(eigen.spectral_norm());
        if eigen.min() < -slack {
            return Err(SpdError::OutOfInjectivity { min_eig: eigen.min().as_f64() });
        }
        let coeff =
            if eigen.min() < F::zero() { eigen.reconstruct(|l| l.max(F::zero())) } else { shifted };
        CovMatrix::new(coeff.sandwich(&self.mat))
    }

    /// `⟨A, B⟩_self = tr(A · self · B)`; symmetric in its arguments when all
    /// three matrices are symmetric.
    pub fn m_inner(&self, a: &TangentVector<F>, b: &TangentVector<F>) -> Result<F, SpdError> {
        check_dims(self.dim(), a.dim())?;
        check_dims(self.dim(), b.dim())?;
        Ok(a.mat().trace_product(&self.mat.matmul(b.mat())))
    }

    /// `‖A‖_self = √⟨A, A⟩_self`.
    pub fn m_norm(&self, a: &TangentVector<F>) -> Result<F, SpdError> {
        Ok(self.m_inner(a, a)?.max(F::zero()).sqrt())
    }
}

/// Symmetric matrix playing the role of a tangent vector; the anchor it is
/// attached to is supplied per operation.
#[derive(Clone, Debug)]
pub struct TangentVector<F> {
    mat: Mat<F>,
}

impl<F: Scalar> TangentVector<F> {
    pub fn new(mat: Mat<F>) -> Result<Self, SpdError> {
        check_finite(&mat)?;
        check_symmetric(&mat)?;
        Ok(Self { mat: mat.sym() })
    }

    pub fn from_row_major(dim: usize, data: &[F]) -> Result<Self, SpdError> {
        Self::new(Mat::from_row_major(dim, data)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim) }
    }

    /// For matrices that are symmetric by construction.
    pub(crate) fn from_sym_unchecked(mat: Mat<F>) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &Mat<F> {
        &self.mat
    }

    pub fn frob_norm(&self) -> F {
        self.mat.frob_norm()
    }

    pub fn scale(&self, c: F) -> Self {
        Self { mat: self.mat.scale(c) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { mat: self.mat.sub(&other.mat) }
    }

    /// Spectral norm `max |λ|` (computed on demand).
    pub fn spectral_norm(&self) -> Result<F, LinalgError> {
        Ok(sym_eigen(&self.mat)?.spectral_norm())
    }
}

/// Geodesic `t ↦ ((1−t)I + tT) · start · ((1−t)I + tT)` with `T` the
/// transport map from `start` to `end`. For `t ∈ [0, 1]` the coefficient is
/// automatically PSD; extrapolation past 1 is allowed while it stays PSD.
#[derive(Clone, Debug)]
pub struct GeodesicParam<F> {
    start: CovMatrix<F>,
    transport: Mat<F>,
}

impl<F: Scalar> GeodesicParam<F> {
    pub fn new(start: &CovMatrix<F>, end: &CovMatrix<F>) -> Result<Self, SpdError> {
        let transport = start.transport_map(end)?;
        Ok(Self { start: start.clone(), transport })
    }

    pub fn start(&self) -> &CovMatrix<F> {
        &self.start
    }

    pub fn transport(&self) -> &Mat<F> {
        &self.transport
    }

    pub fn point(&self, t: F) -> Result<CovMatrix<F>, SpdError> {
        let n = self.start.dim();
        let mut coeff = self.transport.scale(t);
        let shift = F::one() - t;
        for i in 0..n {
            coeff[(i, i)] = coeff[(i, i)] + shift;
        }
        let eigen = sym_eigen(&coeff)?;
        let slack = F::c(tol::PSD_SLACK_REL) * F::one().max(eigen.spectral_norm());
        if eigen.min() < -slack {
            return Err(SpdError::ExtrapolationOutOfRange {
                t: t.as_f64(),
                min_eig: eigen.min().as_f64(),
            });
        }
        let coeff =
            if eigen.min() < F::zero() { eigen.reconstruct(|l| l.max(F::zero())) } else { coeff };
        CovMatrix::new(coeff.sandwich(self.start.mat()))
    }
}

/// Fréchet derivative of the matrix square root at `s` (whose decomposition
/// is given) in direction `d`: the solution `X` of `X·s^{1/2} + s^{1/2}·X = d`.
pub fn sqrt_frechet<F: Scalar>(eigen: &SymEigen<F>, d: &Mat<F>) -> Mat<F> {
    eigen_pair_divide(eigen, d, |li, lj| li.max(F::zero()).sqrt() + lj.max(F::zero()).sqrt())
}

/// Well-conditioned random matrix for randomized tests across the crate.
#[cfg(test)]
pub(crate) fn random_spd(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> CovMatrix<f64> {
    use rand::Rng;
    let mut g = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let mut m = g.matmul(&g.transpose());
    for i in 0..n {
        m[(i, i)] += 0.3;
    }
    CovMatrix::new(m.sym()).unwrap()
}
