//! Barycenters of covariance populations via the transport fixed-point map.
//!
//! A barycenter M of the population `Σᵢ wᵢ δ_{Σᵢ}` is characterized by the
//! stationarity condition `Σᵢ wᵢ (t_M^{Σᵢ} − I) = 0`. The solver iterates
//! `M ← T M T` with `T = Σᵢ wᵢ t_M^{Σᵢ}`, which has exactly that condition
//! as its fixed point, and measures progress in the anchor norm `‖·‖_M`.

use crate::linalg::Mat;
use crate::population::DiscretePopulation;
use crate::scalar::Scalar;
use crate::spd::{CovMatrix, SpdError, TangentVector};
use crate::tol;
use thiserror::Error;

/// Iteration cap for the fixed-point map; convergence is linear and desk
/// scale populations settle in well under a hundred steps.
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Error)]
pub enum BarycenterError {
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Population(#[from] crate::population::PopulationError),
    #[error("empirical barycenter requires at least one drawn index")]
    EmptyDraw,
    #[error("drawn index {index} out of range for {len} atoms")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Solver outcome. `converged == false` means the iteration cap was reached;
/// the best iterate seen (smallest residual) is returned with its residual.
#[derive(Clone, Debug)]
pub struct BarycenterResult<F> {
    pub barycenter: CovMatrix<F>,
    pub iterations: usize,
    pub residual: F,
    pub residual_history: Vec<F>,
    pub converged: bool,
}

/// Barycentric residual `Σᵢ wᵢ (t_M^{Σᵢ} − I)`; vanishes exactly at the
/// barycenter.
pub fn residual<F: Scalar>(
    m: &CovMatrix<F>,
    p: &DiscretePopulation<F>,
) -> Result<TangentVector<F>, SpdError> {
    Ok(TangentVector::new(mean_transport(m, p)?.sub(&Mat::identity(m.dim())))
        .expect("sum of symmetric transports is symmetric"))
}

fn mean_transport<F: Scalar>(
    m: &CovMatrix<F>,
    p: &DiscretePopulation<F>,
) -> Result<Mat<F>, SpdError> {
    let mut t = Mat::zeros(m.dim());
    for (atom, &w) in p.atoms().iter().zip(p.weights()) {
        if w == F::zero() {
            continue;
        }
        t = t.add(&m.transport_map(atom)?.scale(w));
    }
    Ok(t)
}

/// Runs the fixed-point iteration from `init` (default: the linear mean
/// `Σᵢ wᵢ Σᵢ`, strictly positive whenever the population is valid) until
/// `‖Σᵢ wᵢ(t_M^{Σᵢ} − I)‖_M ≤ tol`.
pub fn barycenter_fixed_point<F: Scalar>(
    p: &DiscretePopulation<F>,
    init: Option<&CovMatrix<F>>,
    tol: F,
    max_iter: usize,
) -> Result<BarycenterResult<F>, BarycenterError> {
    let mut m = match init {
        Some(m0) => m0.clone(),
        None => linear_mean(p)?,
    };
    let mut history = Vec::new();
    let mut best: Option<(CovMatrix<F>, F, usize)> = None;
    for iter in 0..=max_iter {
        let t = mean_transport(&m, p)?;
        let disp = t.sub(&Mat::identity(m.dim()));
        let res = disp.trace_product(&m.mat().matmul(&disp)).max(F::zero()).sqrt();
        history.push(res);
        if best.as_ref().map_or(true, |(_, r, _)| res < *r) {
            best = Some((m.clone(), res, iter));
        }
        if res <= tol {
            return Ok(BarycenterResult {
                barycenter: m,
                iterations: iter,
                residual: res,
                residual_history: history,
                converged: true,
            });
        }
        if iter == max_iter {
            break;
        }
        m = CovMatrix::new(t.sandwich(m.mat()))?;
    }
    let (barycenter, residual, iterations) = best.expect("loop ran at least once");
    Ok(BarycenterResult {
        barycenter,
        iterations,
        residual,
        residual_history: history,
        converged: false,
    })
}

/// Fixed-point solve with the default tolerance and iteration cap.
pub fn barycenter<F: Scalar>(
    p: &DiscretePopulation<F>,
) -> Result<BarycenterResult<F>, BarycenterError> {
    barycenter_fixed_point(p, None, F::c(tol::BARY_TOL), DEFAULT_MAX_ITER)
}

fn linear_mean<F: Scalar>(p: &DiscretePopulation<F>) -> Result<CovMatrix<F>, SpdError> {
    let mut m = Mat::zeros(p.dim());
    for (atom, &w) in p.atoms().iter().zip(p.weights()) {
        m = m.add(&atom.mat().scale(w));
    }
    CovMatrix::new(m)
}

/// Barycenter of the equal-weights empirical measure over the drawn atom
/// indices (with multiplicity).
pub fn empirical_barycenter<F: Scalar>(
    p: &DiscretePopulation<F>,
    indices: &[usize],
    tol: F,
    max_iter: usize,
) -> Result<BarycenterResult<F>, BarycenterError> {
    if indices.is_empty() {
        return Err(BarycenterError::EmptyDraw);
    }
    let k = p.len();
    let mut counts = vec![0usize; k];
    for &i in indices {
        if i >= k {
            return Err(BarycenterError::IndexOutOfRange { index: i, len: k });
        }
        counts[i] += 1;
    }
    let n = F::c(indices.len() as f64);
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            atoms.push(p.atom(i).clone());
            weights.push(F::c(c as f64) / n);
        }
    }
    let empirical = DiscretePopulation::new(atoms, weights)?;
    barycenter_fixed_point(&empirical, None, tol, max_iter)
}
