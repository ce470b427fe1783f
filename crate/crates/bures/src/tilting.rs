//! Exponential tilting of a population at an anchor, the cumulant generating
//! function, and the concave dual program whose value is the rate function.
//!
//! For an anchor `M` and tilt `A`, the tilted weights are
//! `qᵢ ∝ wᵢ · exp tr(A M t_M^{Σᵢ})`. The dual objective is
//! `J(A) = tr(AM) − log Σᵢ wᵢ exp tr(A M t_M^{Σᵢ})`, maximized by ascent in
//! the anchor geometry: the gradient is `I − t̄_A` with `t̄_A = Σᵢ qᵢ t_M^{Σᵢ}`,
//! so stationarity says exactly that `M` is the barycenter of the tilted
//! population. The optimal value equals the relative entropy of the optimal
//! tilt against the base weights; both identities are enforced as test
//! certificates.

use crate::barycenter::{self, BarycenterError};
use crate::linalg::Mat;
use crate::population::{DiscretePopulation, PopulationError};
use crate::scalar::Scalar;
use crate::spd::{CovMatrix, SpdError, TangentVector};
use crate::tol;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TiltingError {
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Barycenter(#[from] BarycenterError),
    #[error("weight vectors have different lengths: {q} vs {p}")]
    LengthMismatch { q: usize, p: usize },
    #[error("absolute continuity violated: q[{index}] > 0 but p[{index}] = 0")]
    SupportViolation { index: usize },
    #[error("anchor outside the effective domain (dual diverged)")]
    InfeasibleAnchor,
    #[error("dual solve did not converge ({iterations} iterations, residual {residual:e})")]
    Unconverged { iterations: usize, residual: f64 },
}

/// Terminal state of the dual ascent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualStatus {
    /// Residual dropped below tolerance; the anchor is in the effective
    /// domain and `value` is the rate.
    Converged,
    /// Tilt norm blew past the cap with the residual still bounded away from
    /// zero; the supremum is diverging and the rate is +∞.
    Infeasible,
    /// Iteration budget exhausted (or the line search stalled) without a
    /// verdict; distinct from infeasibility.
    IterationLimit,
}

/// Outcome of the dual program at a fixed anchor. `value` is the best
/// objective value seen (a lower bound on the supremum, finite even when the
/// supremum is +∞); [`DualSolution::rate`] folds in the infeasibility flag.
#[derive(Clone, Debug)]
pub struct DualSolution<F> {
    pub anchor: CovMatrix<F>,
    pub optimizer: TangentVector<F>,
    pub value: F,
    pub tilted_weights: Vec<F>,
    pub residual: F,
    pub iterations: usize,
    pub status: DualStatus,
}

impl<F: Scalar> DualSolution<F> {
    pub fn feasible(&self) -> bool {
        self.status == DualStatus::Converged
    }

    /// Rate-function value: the objective at the optimizer, or +∞ when the
    /// anchor was diagnosed infeasible. For `IterationLimit` this is only the
    /// best estimate; callers must consult `status`.
    pub fn rate(&self) -> F {
        match self.status {
            DualStatus::Infeasible => F::infinity(),
            _ => self.value,
        }
    }
}

/// Solver knobs; defaults match the module contracts.
#[derive(Clone, Copy, Debug)]
pub struct DualConfig<F> {
    pub tol: F,
    pub max_iter: usize,
    /// Frobenius-norm cap on the tilt; exceeding it with a non-vanishing
    /// residual is the operational infeasibility diagnosis.
    pub cap: F,
}

impl<F: Scalar> Default for DualConfig<F> {
    fn default() -> Self {
        Self { tol: F::c(tol::DUAL_TOL), max_iter: 20_000, cap: F::c(tol::DUAL_CAP) }
    }
}

/// Population reweighted by an exponential tilt; atoms are shared with the
/// base population.
#[derive(Clone, Debug)]
pub struct TiltedPopulation<F> {
    pub base: DiscretePopulation<F>,
    pub anchor: CovMatrix<F>,
    pub tilt: TangentVector<F>,
    tilted_weights: Vec<F>,
}

impl<F: Scalar> TiltedPopulation<F> {
    pub fn weights(&self) -> &[F] {
        &self.tilted_weights
    }

    /// The tilt as a standalone population (same atoms, tilted weights).
    pub fn to_population(&self) -> Result<DiscretePopulation<F>, PopulationError> {
        DiscretePopulation::new(self.base.atoms().to_vec(), self.tilted_weights.clone())
    }
}

/// Per-anchor context shared by the tilting computations: transport maps and
/// the matrices `M·t_M^{Σᵢ}` whose trace pairing with the tilt gives the
/// per-atom scores.
struct AnchorPrep<F> {
    m_transports: Vec<Mat<F>>,
    transports: Vec<Mat<F>>,
    support: Vec<usize>,
}

impl<F: Scalar> AnchorPrep<F> {
    fn new(p: &DiscretePopulation<F>, m: &CovMatrix<F>) -> Result<Self, SpdError> {
        m.require_anchor()?;
        let mut transports = Vec::with_capacity(p.len());
        let mut m_transports = Vec::with_capacity(p.len());
        let mut support = Vec::new();
        for (i, (atom, &w)) in p.atoms().iter().zip(p.weights()).enumerate() {
            let t = m.transport_map(atom)?;
            m_transports.push(m.mat().matmul(&t));
            transports.push(t);
            if w > F::c(tol::WEIGHT_FLUSH) {
                support.push(i);
            }
        }
        Ok(Self { m_transports, transports, support })
    }

    /// Scores `sᵢ = tr(A M t_M^{Σᵢ})` on the support.
    fn scores(&self, a: &Mat<F>) -> Vec<F> {
        self.support.iter().map(|&i| a.trace_product(&self.m_transports[i])).collect()
    }
}

/// `log Σᵢ wᵢ exp(xᵢ)` with max-shift; `weights` and `xs` are aligned.
fn log_sum_exp_weighted<F: Scalar>(weights: &[F], xs: &[F]) -> F {
    let hi = xs.iter().fold(F::neg_infinity(), |m, &x| m.max(x));
    if !hi.is_finite() {
        return hi;
    }
    let z: F = weights.iter().zip(xs).map(|(&w, &x)| w * (x - hi).exp()).sum();
    hi + z.ln()
}

/// Cumulant generating function
/// `Λ(A) = log Σᵢ wᵢ exp ⟨A, t_M^{Σᵢ} − I⟩_M`.
pub fn cgf<F: Scalar>(
    p: &DiscretePopulation<F>,
    m: &CovMatrix<F>,
    a: &TangentVector<F>,
) -> Result<F, SpdError> {
    let prep = AnchorPrep::new(p, m)?;
    let tr_am = a.mat().trace_product(m.mat());
    let xs: Vec<F> = prep.scores(a.mat()).iter().map(|&s| s - tr_am).collect();
    let ws: Vec<F> = prep.support.iter().map(|&i| p.weights()[i]).collect();
    Ok(log_sum_exp_weighted(&ws, &xs))
}

fn tilted_weights_on_support<F: Scalar>(
    base_weights: &[F],
    support: &[usize],
    scores: &[F],
    k: usize,
) -> Vec<F> {
    let hi = scores.iter().fold(F::neg_infinity(), |m, &x| m.max(x));
    let mut q = vec![F::zero(); k];
    let mut total = F::zero();
    for (&i, &s) in support.iter().zip(scores) {
        let v = base_weights[i] * (s - hi).exp();
        q[i] = v;
        total = total + v;
    }
    let flush = F::c(tol::WEIGHT_FLUSH);
    let mut kept = F::zero();
    for v in &mut q {
        *v = *v / total;
        if *v < flush {
            *v = F::zero();
        } else {
            kept = kept + *v;
        }
    }
    for v in &mut q {
        *v = *v / kept;
    }
    q
}

/// Exponential tilt `P^{M→A}`: weights `∝ wᵢ exp tr(A M t_M^{Σᵢ})`. A zero
/// tilt returns the base weights bit-for-bit.
pub fn tilt<F: Scalar>(
    p: &DiscretePopulation<F>,
    m: &CovMatrix<F>,
    a: &TangentVector<F>,
) -> Result<TiltedPopulation<F>, SpdError> {
    let tilted_weights = if a.mat().max_abs() == F::zero() {
        m.require_anchor()?;
        p.weights().to_vec()
    } else {
        let prep = AnchorPrep::new(p, m)?;
        let scores = prep.scores(a.mat());
        tilted_weights_on_support(p.weights(), &prep.support, &scores, p.len())
    };
    Ok(TiltedPopulation { base: p.clone(), anchor: m.clone(), tilt: a.clone(), tilted_weights })
}

/// Maximizes `J(A) = tr(AM) − log Σᵢ wᵢ exp tr(A M t_M^{Σᵢ})` by gradient
/// ascent in the anchor geometry with an Armijo line search (factor ½, slope
/// fraction 0.1). The ascent direction is `I − t̄_A`, so the convergence
/// criterion `‖t̄_A − I‖_M ≤ tol` is the barycenter fixed-point condition for
/// the tilted population.
pub fn solve_dual_with<F: Scalar>(
    p: &DiscretePopulation<F>,
    m: &CovMatrix<F>,
    cfg: &DualConfig<F>,
) -> Result<DualSolution<F>, SpdError> {
    let prep = AnchorPrep::new(p, m)?;
    let k = p.len();
    let dim = m.dim();
    let support_weights: Vec<F> = prep.support.iter().map(|&i| p.weights()[i]).collect();

    let objective_and_weights = |a: &Mat<F>| -> (F, Vec<F>) {
        let scores = prep.scores(a);
        let logsum = log_sum_exp_weighted(&support_weights, &scores);
        let q = tilted_weights_on_support(p.weights(), &prep.support, &scores, k);
        (a.trace_product(m.mat()) - logsum, q)
    };
    let gradient_state = |q: &[F]| -> (Mat<F>, F, F) {
        let mut t_bar = Mat::zeros(dim);
        for &i in &prep.support {
            if q[i] > F::zero() {
                t_bar = t_bar.add(&prep.transports[i].scale(q[i]));
            }
        }
        let d = Mat::identity(dim).sub(&t_bar);
        let slope = d.trace_product(&m.mat().matmul(&d)).max(F::zero());
        (d, slope, slope.sqrt())
    };
    let m_frob = m.mat().frob_norm();
    // objective evaluations carry rounding noise on this scale; residuals are
    // assembled from absolute quantities and resolve far finer
    let value_noise =
        |a_norm: F| F::c(32.0) * F::epsilon() * (F::one() + a_norm * m_frob);
    let residual_noise = F::c(8.0) * F::epsilon() * (F::one() + m_frob);

    let mut a = Mat::zeros(dim);
    let (mut value, mut q) = objective_and_weights(&a);
    let mut best_a = a.clone();
    let mut best_value = value;
    let mut best_q = q.clone();
    let mut eta = F::one();
    let eta_hi = F::c(1e12);
    let half = F::c(0.5);
    let mut iterations = 0;
    let mut residual;
    // last accepted step and the gradient before it, for the curvature estimate
    let mut prev: Option<(Mat<F>, Mat<F>)> = None;

    let finish = |status: DualStatus, a: Mat<F>, value: F, q: Vec<F>, residual: F, iterations| {
        DualSolution {
            anchor: m.clone(),
            optimizer: TangentVector::new(a).expect("ascent iterate stays symmetric"),
            value,
            tilted_weights: q,
            residual,
            iterations,
            status,
        }
    };

    loop {
        // gradient D = I − Σᵢ qᵢ tᵢ and its squared anchor norm
        let (d, slope, res) = gradient_state(&q);
        residual = res;

        if residual <= cfg.tol {
            return Ok(finish(DualStatus::Converged, a, value, q, residual, iterations));
        }

        // Barzilai–Borwein step in the anchor metric. Plain doubling stalls
        // near the optimum whenever the natural-gradient Hessian is close to
        // the identity: the doubled step contracts the residual by a factor
        // barely under one, which still passes the line search, and the
        // solver creeps. The secant estimate recovers the right scale.
        if let Some((s, d_old)) = prev.take() {
            let y = d_old.sub(&d);
            let sy = s.trace_product(&m.mat().matmul(&y));
            if sy > F::zero() {
                let ss = s.trace_product(&m.mat().matmul(&s));
                let bb = ss / sy;
                if bb.is_finite() && bb > F::zero() {
                    eta = bb.max(F::c(1e-12)).min(eta_hi);
                }
            }
        }
        if a.frob_norm() > cfg.cap {
            return Ok(finish(
                DualStatus::Infeasible,
                best_a,
                best_value,
                best_q,
                residual,
                iterations,
            ));
        }
        if iterations >= cfg.max_iter {
            return Ok(finish(
                DualStatus::IterationLimit,
                best_a,
                best_value,
                best_q,
                residual,
                iterations,
            ));
        }

        let mut halvings = 0;
        loop {
            let a_try = a.add(&d.scale(eta));
            let (value_try, q_try) = objective_and_weights(&a_try);
            let promised = F::c(0.1) * eta * slope;
            let accepted = if promised > value_noise(a_try.frob_norm()) {
                value_try >= value + promised
            } else {
                // the promised increase has shrunk below the objective's
                // rounding noise (slope ~ residual² underflows first); switch
                // the certificate to a strict gradient-norm decrease
                gradient_state(&q_try).2 <= residual - residual_noise
            };
            if accepted {
                a = a_try;
                value = value_try;
                q = q_try;
                break;
            }
            eta = eta * half;
            halvings += 1;
            if halvings > 60 {
                // step size underflowed without satisfying either test
                return Ok(finish(
                    DualStatus::IterationLimit,
                    best_a,
                    best_value,
                    best_q,
                    residual,
                    iterations,
                ));
            }
        }
        prev = Some((d.scale(eta), d));
        eta = (eta + eta).min(eta_hi);
        iterations += 1;
        if value > best_value {
            best_value = value;
            best_a = a.clone();
            best_q = q.clone();
        }
    }
}

pub fn solve_dual<F: Scalar>(
    p: &DiscretePopulation<F>,
    m: &CovMatrix<F>,
) -> Result<DualSolution<F>, SpdError> {
    solve_dual_with(p, m, &DualConfig::default())
}

/// `I_P(M)`: dual value when the program converges, +∞ when the anchor is
/// infeasible; an iteration-limit outcome is surfaced as an error.
pub fn rate_function<F: Scalar>(
    p: &DiscretePopulation<F>,
    m: &CovMatrix<F>,
) -> Result<F, TiltingError> {
    let sol = solve_dual(p, m)?;
    match sol.status {
        DualStatus::Converged => Ok(sol.value),
        DualStatus::Infeasible => Ok(F::infinity()),
        DualStatus::IterationLimit => Err(TiltingError::Unconverged {
            iterations: sol.iterations,
            residual: sol.residual.as_f64(),
        }),
    }
}

/// `H(Q | P) = Σᵢ qᵢ log(qᵢ / pᵢ)` with `0·log 0 = 0`.
pub fn relative_entropy<F: Scalar>(q: &[F], p: &[F]) -> Result<F, TiltingError> {
    if q.len() != p.len() {
        return Err(TiltingError::LengthMismatch { q: q.len(), p: p.len() });
    }
    let mut h = F::zero();
    for (index, (&qi, &pi)) in q.iter().zip(p).enumerate() {
        if qi > F::zero() {
            if pi <= F::zero() {
                return Err(TiltingError::SupportViolation { index });
            }
            h = h + qi * (qi / pi).ln();
        }
    }
    Ok(h)
}

/// Point `t` on the entropy-interpolation path between two feasible anchors:
/// the barycenter of the mixture `(1−t)·P^{M₀} + t·P^{M₁}` of their tilted
/// populations.
pub fn tilt_interpolation_path<F: Scalar>(
    p: &DiscretePopulation<F>,
    m0: &CovMatrix<F>,
    m1: &CovMatrix<F>,
    t: F,
) -> Result<CovMatrix<F>, TiltingError> {
    let d0 = solve_dual(p, m0)?;
    let d1 = solve_dual(p, m1)?;
    for d in [&d0, &d1] {
        match d.status {
            DualStatus::Converged => {}
            DualStatus::Infeasible => return Err(TiltingError::InfeasibleAnchor),
            DualStatus::IterationLimit => {
                return Err(TiltingError::Unconverged {
                    iterations: d.iterations,
                    residual: d.residual.as_f64(),
                })
            }
        }
    }
    let one_minus = F::one() - t;
    let mixed: Vec<F> = d0
        .tilted_weights
        .iter()
        .zip(&d1.tilted_weights)
        .map(|(&a, &b)| one_minus * a + t * b)
        .collect();
    let mixture = DiscretePopulation::new(p.atoms().to_vec(), mixed)?;
    let bary = barycenter::barycenter(&mixture)?;
    if !bary.converged {
        return Err(TiltingError::Unconverged {
            iterations: bary.iterations,
            residual: bary.residual.as_f64(),
        });
    }
    Ok(bary.barycenter)
}
