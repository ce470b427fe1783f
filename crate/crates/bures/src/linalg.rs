//! Dense linear algebra on small square matrices.
//!
//! Everything in this crate works at desk scale (dimensions in the single
//! digits), so a hand-rolled row-major matrix with a cyclic Jacobi
//! eigensolver is preferable to a LAPACK binding: it stays generic over the
//! scalar type, gives exact control over symmetrization and clamping, and the
//! eigenbasis is reused directly by the square-root Fréchet derivative.

use crate::scalar::Scalar;
use thiserror::Error;

/// Errors from the dense kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix data has length {got}, expected {dim}x{dim}")]
    BadLength { dim: usize, got: usize },
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
}

/// Square row-major matrix.
///
/// Symmetry is a caller-maintained property; products of symmetric matrices
/// are not symmetric, so callers re-symmetrize with [`Mat::sym`] where the
/// result is symmetric in exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F> {
    dim: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![F::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_row_major(dim: usize, data: &[F]) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != dim * dim {
            return Err(LinalgError::BadLength { dim, got: data.len() });
        }
        Ok(Self { dim, data: data.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn scale(&self, c: F) -> Self {
        let data = self.data.iter().map(|&a| a * c).collect();
        Self { dim: self.dim, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == F::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self * inner * self`, re-symmetrized. Only meaningful when both
    /// factors are symmetric, which is the case at every call site (exp-map,
    /// geodesic points, the barycenter update).
    pub fn sandwich(&self, inner: &Self) -> Self {
        self.matmul(inner).matmul(self).sym()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn sym(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        let half = F::c(0.5);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)]) * half;
            }
        }
        out
    }

    pub fn trace(&self) -> F {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> F {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut acc = F::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    pub fn frob_norm(&self) -> F {
        self.data.iter().map(|&a| a * a).sum::<F>().sqrt()
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |m, &a| m.max(a.abs()))
    }

    /// Largest entrywise deviation from symmetry, `max |a_ij − a_ji|`.
    pub fn max_asymmetry(&self) -> F {
        let n = self.dim;
        let mut dev = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                dev = dev.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        dev
    }
}

impl<F: Scalar> core::ops::Index<(usize, usize)> for Mat<F> {
    type Output = F;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.dim + j]
    }
}

impl<F: Scalar> core::ops::IndexMut<(usize, usize)> for Mat<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigendecomposition of a symmetric matrix: `A = V diag(values) Vᵀ` with
/// eigenvalues ascending and eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymEigen<F> {
    pub values: Vec<F>,
    pub vectors: Mat<F>,
}

impl<F: Scalar> SymEigen<F> {
    /// Rebuilds `V diag(f(λ)) Vᵀ` (symmetric by construction).
    pub fn reconstruct(&self, f: impl Fn(F) -> F) -> Mat<F> {
        let n = self.values.len();
        let mut out = Mat::zeros(n);
        for k in 0..n {
            let lk = f(self.values[k]);
            if lk == F::zero() {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * lk;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vik * self.vectors[(j, k)];
                }
            }
        }
        out.sym()
    }

    pub fn min(&self) -> F {
        self.values[0]
    }

    pub fn max(&self) -> F {
        self.values[self.values.len() - 1]
    }

    /// Spectral norm `max |λ|`.
    pub fn spectral_norm(&self) -> F {
        self.min().abs().max(self.max().abs())
    }
}

fn off_diagonal_norm<F: Scalar>(a: &Mat<F>) -> F {
    let n = a.dim();
    let mut acc = F::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation annihilating `a[(p,q)]`; accumulates into `v`.
fn jacobi_rotate<F: Scalar>(a: &mut Mat<F>, v: &mut Mat<F>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == F::zero() {
        return;
    }
    let tau = (a[(q, q)] - a[(p, p)]) / (F::c(2.0) * apq);
    let root = (F::one() + tau * tau).sqrt();
    // smaller-magnitude root of t² + 2τt − 1 = 0, for stability
    let t = if tau >= F::zero() { F::one() / (tau + root) } else { F::one() / (tau - root) };
    let c = F::one() / (F::one() + t * t).sqrt();
    let s = t * c;
    let n = a.dim();
    // A ← Gᵀ A G with G the (p,q) Givens rotation
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    // the rotation zeroes (p,q) exactly in exact arithmetic
    a[(p, q)] = F::zero();
    a[(q, p)] = F::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized first (roundoff tolerance); convergence is
/// declared when the off-diagonal Frobenius norm falls below
/// `(4 + n)·ε·‖A‖_F`, which cyclic Jacobi reaches quadratically.
pub fn sym_eigen<F: Scalar>(m: &Mat<F>) -> Result<SymEigen<F>, LinalgError> {
    let n = m.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut a = m.sym();
    let mut v = Mat::identity(n);
    let scale = a.frob_norm();
    if scale == F::zero() {
        return Ok(SymEigen { values: vec![F::zero(); n], vectors: v });
    }
    let tol = scale * F::epsilon() * F::c((4 + n) as f64);
    const MAX_SWEEPS: usize = 128;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps, off: off.as_f64() });
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Solves the eigenbasis-divided problem: returns
/// `V [ (Vᵀ D V)_ij / denom(λ_i, λ_j) ] Vᵀ`.
///
/// With `denom = √λ_i + √λ_j` this is the Daleckii–Krein formula for the
/// Fréchet derivative of the square root (the solution X of
/// `X S^{1/2} + S^{1/2} X = D`); with `denom = λ_i + λ_j` it solves the
/// Lyapunov pairing `X S + S X = D` used by the metric-gradient conversion.
/// Callers must guarantee the denominators stay away from zero.
pub fn eigen_pair_divide<F: Scalar>(
    e: &SymEigen<F>,
    d: &Mat<F>,
    denom: impl Fn(F, F) -> F,
) -> Mat<F> {
    let n = e.values.len();
    let dt = e.vectors.transpose().matmul(d).matmul(&e.vectors);
    let mut x = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] = dt[(i, j)] / denom(e.values[i], e.values[j]);
        }
    }
    e.vectors.matmul(&x).matmul(&e.vectors.transpose()).sym()
}
