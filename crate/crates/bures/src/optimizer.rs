//! Rate-function minimization over rare-event sets: metric projection onto
//! ball complements, projected Riemannian gradient descent, the radial rate
//! profile, and the concentration reference curve derived from the
//! bounded-support statistic `Π(Σ, 0)`.

use crate::barycenter::BarycenterError;
use crate::linalg::{eigen_pair_divide, Mat};
use crate::population::{DiscretePopulation, PopulationError};
use crate::rate_gradient::{rate_gradient, GradientError};
use crate::scalar::Scalar;
use crate::spd::{CovMatrix, GeodesicParam, SpdError, TangentVector};
use crate::tilting::{solve_dual, DualSolution, DualStatus, TiltingError};
use rayon::prelude::*;
use thiserror::Error;

pub const DEFAULT_PRGD_ITERS: usize = 200;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Tilting(#[from] TiltingError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Barycenter(#[from] BarycenterError),
    #[error("event radius must be a nonnegative finite real, got {radius}")]
    BadRadius { radius: f64 },
    #[error("radii must be strictly increasing and nonnegative (violation at index {index})")]
    RadiiOrder { index: usize },
}

/// Rare-event set `{M : Π(M, center) ≥ radius}`. Radius 0 makes the event the
/// whole space.
#[derive(Clone, Debug)]
pub struct BallComplement<F> {
    pub center: CovMatrix<F>,
    pub radius: F,
}

impl<F: Scalar> BallComplement<F> {
    pub fn new(center: CovMatrix<F>, radius: F) -> Result<Self, OptimizerError> {
        center.require_anchor()?;
        if !(radius >= F::zero()) || !radius.is_finite() {
            return Err(OptimizerError::BadRadius { radius: radius.as_f64() });
        }
        Ok(Self { center, radius })
    }
}

/// Metric projection onto `{Π(·, center) ≥ r}`: points already in the set are
/// fixed; interior points move along the geodesic from the center through
/// them (extrapolating past the point if necessary) until the distance is
/// exactly `r`. A point sitting on the center has no outward direction; the
/// documented fallback leaves along the first symmetric basis element, scaled
/// so the exponential lands at distance `r`.
pub fn project_ball_complement<F: Scalar>(
    m: &CovMatrix<F>,
    center: &CovMatrix<F>,
    r: F,
) -> Result<CovMatrix<F>, SpdError> {
    center.require_anchor()?;
    let dist = m.bw_distance(center)?;
    // the relative slack makes points on the sphere exact fixed points
    if dist >= r * (F::one() - F::c(1e-12)) {
        return Ok(m.clone());
    }
    if dist <= F::c(1e-12) * (F::one() + center.pi_norm()) {
        let scale = r / center.mat()[(0, 0)].max(F::c(crate::tol::PD_GATE)).sqrt();
        let mut a = Mat::zeros(center.dim());
        a[(0, 0)] = scale;
        return center.exp_map(&TangentVector::from_sym_unchecked(a));
    }
    GeodesicParam::new(center, m)?.point(r / dist)
}

/// Riemannian gradient at `M` from the Euclidean gradient `G`: the symmetric
/// `V` with `tr(G·H) = tr(V·M·H)` for all symmetric `H`, i.e. the Sylvester
/// solution of `V·M + M·V = 2G`.
fn riemannian_gradient<F: Scalar>(m: &CovMatrix<F>, g: &TangentVector<F>) -> TangentVector<F> {
    let v = eigen_pair_divide(m.eigen(), &g.mat().scale(F::c(2.0)), |a, b| a + b);
    TangentVector::from_sym_unchecked(v)
}

enum Eval<F> {
    Feasible(F, DualSolution<F>),
    Infeasible,
    Uncertain,
}

fn evaluate<F: Scalar>(p: &DiscretePopulation<F>, m: &CovMatrix<F>) -> Result<Eval<F>, SpdError> {
    let dual = solve_dual(p, m)?;
    Ok(match dual.status {
        DualStatus::Converged => Eval::Feasible(dual.value, dual),
        DualStatus::Infeasible => Eval::Infeasible,
        DualStatus::IterationLimit => Eval::Uncertain,
    })
}

#[derive(Clone, Debug)]
pub struct PrgdResult<F> {
    pub minimizer: CovMatrix<F>,
    /// Rate at the minimizer; +∞ when even the projected start was infeasible.
    pub value: F,
    /// Rate at the start and at every accepted iterate, in order.
    pub trace: Vec<F>,
    pub iterations: usize,
    pub eta_final: F,
}

/// Projected Riemannian gradient descent for `I_P` over a ball complement:
/// `M ← proj((I − ηV)·M·(I − ηV))` with `V` the Riemannian gradient. A step
/// is accepted only when the candidate projects cleanly, its dual converges,
/// and the rate strictly decreases; η doubles on acceptance and halves on
/// rejection, with 20 consecutive rejections ending the run at the best
/// iterate. The final value never exceeds the value at the (projected)
/// starting point.
pub fn prgd<F: Scalar>(
    p: &DiscretePopulation<F>,
    event: &BallComplement<F>,
    eta: Option<F>,
    max_iter: usize,
    init: &CovMatrix<F>,
) -> Result<PrgdResult<F>, OptimizerError> {
    let mut m = project_ball_complement(init, &event.center, event.radius)?;
    let (mut value, mut dual) = match evaluate(p, &m)? {
        Eval::Feasible(v, d) => (v, d),
        Eval::Infeasible => {
            return Ok(PrgdResult {
                minimizer: m,
                value: F::infinity(),
                trace: vec![F::infinity()],
                iterations: 0,
                eta_final: eta.unwrap_or(F::zero()),
            })
        }
        Eval::Uncertain => {
            return Err(OptimizerError::Tilting(TiltingError::Unconverged {
                iterations: 0,
                residual: f64::NAN,
            }))
        }
    };
    let mut eta = eta.unwrap_or_else(|| F::c(0.1) / (F::one() + value));
    let mut trace = vec![value];
    let mut best_m = m.clone();
    let mut best_value = value;
    let mut iterations = 0;

    'outer: for _ in 0..max_iter {
        let g = rate_gradient(p, &m, &dual)?;
        let v = riemannian_gradient(&m, &g);
        if v.frob_norm() * eta <= F::c(1e-13) * (F::one() + m.mat().frob_norm()) {
            break; // step is a numerical no-op
        }
        let mut halvings = 0;
        loop {
            let candidate = (|| -> Result<CovMatrix<F>, SpdError> {
                let mut c = v.mat().scale(-eta);
                for i in 0..c.dim() {
                    c[(i, i)] = c[(i, i)] + F::one();
                }
                let moved = CovMatrix::new(c.matmul(m.mat()).matmul(&c).sym())?;
                project_ball_complement(&moved, &event.center, event.radius)
            })();
            if let Ok(next) = candidate {
                if let Ok(Eval::Feasible(val, d)) = evaluate(p, &next) {
                    if val < value {
                        m = next;
                        dual = d;
                        value = val;
                        trace.push(val);
                        iterations += 1;
                        if val < best_value {
                            best_value = val;
                            best_m = m.clone();
                        }
                        eta = (eta + eta).min(F::c(1e9));
                        continue 'outer;
                    }
                }
            }
            eta = eta * F::c(0.5);
            halvings += 1;
            if halvings >= 20 {
                break 'outer;
            }
        }
    }

    Ok(PrgdResult { minimizer: best_m, value: best_value, trace, iterations, eta_final: eta })
}

/// Radial profile of the constrained minimum: `values[i] = inf I_P` over
/// `{Π(·, center) ≥ radii[i]}`, estimated by multi-start PRGD.
#[derive(Clone, Debug)]
pub struct RateProfile<F> {
    pub center: CovMatrix<F>,
    pub radii: Vec<F>,
    pub values: Vec<F>,
    /// Feasible witness of each value; `None` when every start failed (the
    /// value is then +∞).
    pub argmins: Vec<Option<CovMatrix<F>>>,
}

/// Runs PRGD from the projected center and projected atoms at each radius and
/// keeps the best feasible value (first start wins ties). Starts that fail to
/// project or certify are skipped; a radius where all fail records +∞. A
/// final backward sweep enforces monotonicity: a witness feasible at a larger
/// radius is feasible at every smaller one, so its value is inherited
/// wherever it improves the estimate.
pub fn rate_profile<F: Scalar>(
    p: &DiscretePopulation<F>,
    center: &CovMatrix<F>,
    radii: &[F],
) -> Result<RateProfile<F>, OptimizerError> {
    for (index, r) in radii.iter().enumerate() {
        let ordered = *r >= F::zero() && r.is_finite() && (index == 0 || radii[index - 1] < *r);
        if !ordered {
            return Err(OptimizerError::RadiiOrder { index });
        }
    }
    let starts: Vec<&CovMatrix<F>> =
        std::iter::once(center).chain(p.atoms().iter()).collect();
    let jobs: Vec<(usize, usize)> = (0..radii.len())
        .flat_map(|ri| (0..starts.len()).map(move |si| (ri, si)))
        .collect();
    let outcomes: Vec<Option<(F, CovMatrix<F>)>> = jobs
        .par_iter()
        .map(|&(ri, si)| {
            let event = BallComplement::new(center.clone(), radii[ri]).ok()?;
            let run = prgd(p, &event, None, DEFAULT_PRGD_ITERS, starts[si]).ok()?;
            run.value.is_finite().then_some((run.value, run.minimizer))
        })
        .collect();

    let k = starts.len();
    let mut values = vec![F::infinity(); radii.len()];
    let mut argmins: Vec<Option<CovMatrix<F>>> = vec![None; radii.len()];
    for ri in 0..radii.len() {
        for outcome in outcomes[ri * k..(ri + 1) * k].iter().flatten() {
            if outcome.0 < values[ri] {
                values[ri] = outcome.0;
                argmins[ri] = Some(outcome.1.clone());
            }
        }
    }
    for ri in (0..radii.len().saturating_sub(1)).rev() {
        if values[ri + 1] < values[ri] {
            values[ri] = values[ri + 1];
            argmins[ri] = argmins[ri + 1].clone();
        }
    }
    Ok(RateProfile { center: center.clone(), radii: radii.to_vec(), values, argmins })
}

/// One radius of the concentration comparison.
#[derive(Clone, Debug)]
pub struct HoeffdingRow<F> {
    pub radius: F,
    /// Profile value at this radius.
    pub value: F,
    /// `(r − Π(center,0) − μ)²/(2σ²) − μ²/(2σ²)`.
    pub reference: F,
    /// The reference is a certified lower bound only for
    /// `r ≥ Π(center,0) + μ`; below that the comparison is vacuous.
    pub applicable: bool,
    pub bound_ok: bool,
}

#[derive(Clone, Debug)]
pub struct HoeffdingReport<F> {
    pub mu: F,
    pub sigma_sq: F,
    pub center_pi: F,
    pub rows: Vec<HoeffdingRow<F>>,
}

pub fn hoeffding_report<F: Scalar>(
    p: &DiscretePopulation<F>,
    profile: &RateProfile<F>,
) -> HoeffdingReport<F> {
    let stats = p.pi_norm_stats();
    let center_pi = profile.center.pi_norm();
    let two_var = F::c(2.0) * stats.sigma_sq;
    let rows = profile
        .radii
        .iter()
        .zip(&profile.values)
        .map(|(&radius, &value)| {
            let shift = radius - center_pi - stats.mu;
            let num = shift * shift - stats.mu * stats.mu;
            let reference = if two_var > F::zero() {
                num / two_var
            } else if num > F::zero() {
                F::infinity()
            } else if num < F::zero() {
                F::neg_infinity()
            } else {
                F::zero()
            };
            let applicable = shift >= F::zero();
            let bound_ok = !applicable || value >= reference - F::c(1e-8);
            HoeffdingRow { radius, value, reference, applicable, bound_ok }
        })
        .collect();
    HoeffdingReport { mu: stats.mu, sigma_sq: stats.sigma_sq, center_pi, rows }
}
