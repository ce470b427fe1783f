//! Derivatives in the anchor: Fréchet derivative of the matrix square root,
//! directional derivatives of transport maps, and the envelope-formula
//! gradient of the rate function.
//!
//! At a feasible anchor with dual optimizer `A_M` and tilted weights `qᵢ`,
//! the first-order change of `I_P` in direction `H` reduces to
//! `dI(H) = −tr(A_M · M · Σᵢ qᵢ · ∂t_M^{Σᵢ}(H))`: the terms involving the
//! derivative of `A_M` itself drop out because `A_M` is a stationary point of
//! the inner problem, and the explicit tilt terms cancel since the tilted
//! barycenter sits at `M`. The finite-difference suite below validates this
//! against re-solving the inner problem at perturbed anchors.

use crate::linalg::{eigen_pair_divide, Mat, SymEigen};
use crate::population::DiscretePopulation;
use crate::scalar::Scalar;
use crate::spd::{self, CovMatrix, SpdError, TangentVector};
use crate::tilting::DualSolution;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GradientError {
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error("dual certificate is not feasible; the rate gradient is undefined")]
    InfeasibleAnchor,
    #[error("dual certificate is anchored at a different matrix (deviation {deviation:e})")]
    AnchorMismatch { deviation: f64 },
}

/// Unique symmetric `X` with `X·S^{1/2} + S^{1/2}·X = D`, via first divided
/// differences `1/(√λᵢ + √λⱼ)` in the eigenbasis of `S`.
pub fn sqrt_frechet<F: Scalar>(
    s: &CovMatrix<F>,
    d: &TangentVector<F>,
) -> Result<TangentVector<F>, SpdError> {
    s.require_anchor()?;
    if s.dim() != d.dim() {
        return Err(SpdError::DimMismatch { a: s.dim(), b: d.dim() });
    }
    Ok(TangentVector::from_sym_unchecked(spd::sqrt_frechet(s.eigen(), d.mat())))
}

/// Anchor-side factors shared by every directional derivative at `M`.
struct AnchorFactors<F> {
    r: Mat<F>,
    rinv: Mat<F>,
}

impl<F: Scalar> AnchorFactors<F> {
    fn new(m: &CovMatrix<F>) -> Result<Self, SpdError> {
        m.require_anchor()?;
        Ok(Self { r: m.sym_sqrt().mat().clone(), rinv: m.inv_sqrt()? })
    }
}

/// Target-side factors for one atom: `Σ·R`, the eigendecomposition of
/// `B = R·Σ·R`, and `C = B^{1/2}`.
struct AtomFactors<F> {
    s_r: Mat<F>,
    b_eigen: SymEigen<F>,
    c: Mat<F>,
}

impl<F: Scalar> AtomFactors<F> {
    fn new(anchor: &AnchorFactors<F>, s: &CovMatrix<F>) -> Result<Self, SpdError> {
        let s_r = s.mat().matmul(&anchor.r);
        let b = anchor.r.matmul(&s_r).sym();
        let b_eigen = crate::linalg::sym_eigen(&b)?;
        let c = b_eigen.reconstruct(|x| x.max(F::zero()).sqrt());
        Ok(Self { s_r, b_eigen, c })
    }

    /// Directional derivative of `M ↦ t_M^Σ = R⁻¹ (R Σ R)^{1/2} R⁻¹` given the
    /// square-root derivatives `dR` and `dR⁻¹ = −R⁻¹ dR R⁻¹` of the anchor.
    fn transport_derivative(
        &self,
        anchor: &AnchorFactors<F>,
        dr: &Mat<F>,
        drinv: &Mat<F>,
    ) -> Mat<F> {
        // dB = dR·Σ·R + (dR·Σ·R)ᵀ
        let x = dr.matmul(&self.s_r);
        let db = x.add(&x.transpose());
        let dc = eigen_pair_divide(&self.b_eigen, &db, |a, b| {
            a.max(F::zero()).sqrt() + b.max(F::zero()).sqrt()
        });
        // dt = dR⁻¹·C·R⁻¹ + (dR⁻¹·C·R⁻¹)ᵀ + R⁻¹·dC·R⁻¹
        let y = drinv.matmul(&self.c).matmul(&anchor.rinv);
        y.add(&y.transpose()).add(&anchor.rinv.matmul(&dc).matmul(&anchor.rinv))
    }
}

/// Directional derivative of `M ↦ t_M^S` at `M` in direction `H`.
pub fn transport_directional<F: Scalar>(
    m: &CovMatrix<F>,
    s: &CovMatrix<F>,
    h: &TangentVector<F>,
) -> Result<TangentVector<F>, SpdError> {
    if m.dim() != s.dim() {
        return Err(SpdError::DimMismatch { a: m.dim(), b: s.dim() });
    }
    if m.dim() != h.dim() {
        return Err(SpdError::DimMismatch { a: m.dim(), b: h.dim() });
    }
    s.require_anchor()?;
    let anchor = AnchorFactors::new(m)?;
    let atom = AtomFactors::new(&anchor, s)?;
    let dr = spd::sqrt_frechet(m.eigen(), h.mat());
    let drinv = anchor.rinv.matmul(&dr).matmul(&anchor.rinv).scale(-F::one());
    Ok(TangentVector::from_sym_unchecked(atom.transport_derivative(&anchor, &dr, &drinv)))
}

/// Euclidean gradient `G` of `I_P` at the dual's anchor:
/// `tr(G·H) = −tr(A_M · M · Σᵢ qᵢ · ∂t_M^{Σᵢ}(H))` for every symmetric `H`,
/// assembled over the symmetric basis.
pub fn rate_gradient<F: Scalar>(
    p: &DiscretePopulation<F>,
    m: &CovMatrix<F>,
    dual: &DualSolution<F>,
) -> Result<TangentVector<F>, GradientError> {
    if !dual.feasible() {
        return Err(GradientError::InfeasibleAnchor);
    }
    if m.dim() != dual.anchor.dim() {
        return Err(GradientError::Spd(SpdError::DimMismatch {
            a: m.dim(),
            b: dual.anchor.dim(),
        }));
    }
    let deviation = m.mat().sub(dual.anchor.mat()).max_abs().as_f64();
    if deviation > 1e-10 * (1.0 + m.mat().max_abs().as_f64()) {
        return Err(GradientError::AnchorMismatch { deviation });
    }
    if p.dim() != m.dim() {
        return Err(GradientError::Spd(SpdError::DimMismatch { a: p.dim(), b: m.dim() }));
    }

    let dim = m.dim();
    let anchor = AnchorFactors::new(m)?;
    let weighted_atoms: Vec<(F, AtomFactors<F>)> = p
        .atoms()
        .iter()
        .zip(&dual.tilted_weights)
        .filter(|(_, &q)| q > F::zero())
        .map(|(s, &q)| Ok((q, AtomFactors::new(&anchor, s)?)))
        .collect::<Result<_, SpdError>>()?;
    // pairing matrix for the linear functional: tr(A·M·dt) = tr(dt·(A·M))
    let am = dual.optimizer.mat().matmul(m.mat());

    let mut directions: Vec<(usize, usize)> = (0..dim).map(|a| (a, a)).collect();
    for a in 0..dim {
        for b in (a + 1)..dim {
            directions.push((a, b));
        }
    }
    let entries: Vec<F> = directions
        .par_iter()
        .map(|&(a, b)| {
            let mut h = Mat::zeros(dim);
            h[(a, b)] = F::one();
            h[(b, a)] = F::one();
            let dr = spd::sqrt_frechet(m.eigen(), &h);
            let drinv = anchor.rinv.matmul(&dr).matmul(&anchor.rinv).scale(-F::one());
            let mut dt_bar = Mat::zeros(dim);
            for (q, atom) in &weighted_atoms {
                dt_bar = dt_bar.add(&atom.transport_derivative(&anchor, &dr, &drinv).scale(*q));
            }
            -dt_bar.trace_product(&am)
        })
        .collect();

    let mut g = Mat::zeros(dim);
    let half = F::c(0.5);
    for (&(a, b), &v) in directions.iter().zip(&entries) {
        if a == b {
            g[(a, a)] = v;
        } else {
            g[(a, b)] = v * half;
            g[(b, a)] = v * half;
        }
    }
    Ok(TangentVector::from_sym_unchecked(g))
}
