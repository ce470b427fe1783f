//! Monte Carlo verification of the large-deviation behaviour of empirical
//! barycenters: simulated distance samples, Wilson tail estimates, decay
//! slopes fitted against the rate prediction, and an exact binomial oracle
//! for the scalar two-atom case.

use crate::barycenter::{self, BarycenterError, DEFAULT_MAX_ITER};
use crate::optimizer::{rate_profile, OptimizerError};
use crate::population::{replicate_seed, mix64, DiscretePopulation, PopulationError};
use crate::scalar::Scalar;
use crate::spd::{CovMatrix, SpdError};
use crate::tol;
use rayon::prelude::*;
use thiserror::Error;

/// 97.5% standard normal quantile, for two-sided 95% Wilson intervals.
pub const WILSON_Z: f64 = 1.959963984540054;
/// Minimum hit count for a tail estimate to enter the slope fit.
pub const MIN_HITS: usize = 20;

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Barycenter(#[from] BarycenterError),
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("empty distance sample")]
    EmptyDistances,
    #[error("population barycenter did not converge (residual {residual:e})")]
    CenterUnconverged { residual: f64 },
    #[error("sample sizes must be positive and strictly increasing (violation at index {index})")]
    GridOrder { index: usize },
    #[error("replicate count must be positive")]
    NoReplicates,
}

/// Distances `Π(Mₙ*, M*)` across independent replicates. Replicates whose
/// empirical barycenter failed to certify are excluded and counted.
#[derive(Clone, Debug)]
pub struct DistanceSample<F> {
    pub center: CovMatrix<F>,
    pub distances: Vec<F>,
    pub failures: usize,
}

/// Draws `n` atoms per replicate, solves the empirical barycenter, and
/// records its distance to the population barycenter. Replicate `i` uses the
/// stream seed `seed ^ mix64(i)`, so results are independent of scheduling
/// and reproducible per replicate.
pub fn simulate_distances<F: Scalar>(
    p: &DiscretePopulation<F>,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<DistanceSample<F>, McError> {
    if replicates == 0 {
        return Err(McError::NoReplicates);
    }
    if n == 0 {
        return Err(McError::GridOrder { index: 0 });
    }
    let sol = barycenter::barycenter(p)?;
    if !sol.converged {
        return Err(McError::CenterUnconverged { residual: sol.residual.as_f64() });
    }
    let center = sol.barycenter;
    let outcomes: Vec<Option<F>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let indices = p.sample_indices(n, replicate_seed(seed, rep));
            let emp = barycenter::empirical_barycenter(
                p,
                &indices,
                F::c(tol::BARY_TOL),
                DEFAULT_MAX_ITER,
            )
            .ok()?;
            if !emp.converged {
                return None;
            }
            emp.barycenter.bw_distance(&center).ok()
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let distances = outcomes.into_iter().flatten().collect();
    Ok(DistanceSample { center, distances, failures })
}

#[derive(Clone, Copy, Debug)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub hits: usize,
    pub total: usize,
}

/// Fraction of distances ≥ r with a Wilson 95% score interval.
pub fn tail_estimate<F: Scalar>(distances: &[F], r: F) -> Result<TailEstimate, McError> {
    if distances.is_empty() {
        return Err(McError::EmptyDistances);
    }
    let total = distances.len();
    let hits = distances.iter().filter(|&&d| d >= r).count();
    let n = total as f64;
    let p_hat = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let mid = (p_hat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(TailEstimate { p_hat, lo: (mid - half).max(0.0), hi: (mid + half).min(1.0), hits, total })
}

/// Tail estimate at one sample size within a slope fit.
#[derive(Clone, Copy, Debug)]
pub struct SlopeRow {
    pub n: usize,
    pub replicates: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// `−log(p̂)/n`; +∞ when no hits were observed.
    pub minus_log_p_over_n: f64,
    /// Whether the row had enough hits to enter the fit.
    pub included: bool,
}

#[derive(Clone, Debug)]
pub struct SlopeReport<F> {
    pub r: F,
    pub rows: Vec<SlopeRow>,
    /// Least-squares slope of `−log p̂` against `n` over the included rows
    /// (the intercept absorbs sub-exponential prefactors); `None` when fewer
    /// than two rows qualify.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Constrained minimum of the rate over `{Π(·, M*) ≥ r}`.
    pub reference: f64,
    /// `|slope − reference| / reference` when both are available.
    pub rel_error: Option<f64>,
    pub failures: usize,
}

/// Estimates the exponential decay rate of `ℙ(Π(Mₙ*, M*) ≥ r)` across a grid
/// of sample sizes and compares it against the optimizer's rate prediction.
/// Sample size `n` runs on the seed stream `mix64(seed ^ mix64(n))`.
pub fn rate_slope<F: Scalar>(
    p: &DiscretePopulation<F>,
    r: F,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<SlopeReport<F>, McError> {
    for (index, &n) in n_grid.iter().enumerate() {
        if n == 0 || (index > 0 && n_grid[index - 1] >= n) {
            return Err(McError::GridOrder { index });
        }
    }
    if n_grid.is_empty() {
        return Err(McError::GridOrder { index: 0 });
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    let mut failures = 0;
    let mut center = None;
    for &n in n_grid {
        let sample = simulate_distances(p, n, replicates, mix64(seed ^ mix64(n as u64)))?;
        failures += sample.failures;
        let tail = tail_estimate(&sample.distances, r)?;
        rows.push(SlopeRow {
            n,
            replicates,
            hits: tail.hits,
            p_hat: tail.p_hat,
            wilson_lo: tail.lo,
            wilson_hi: tail.hi,
            minus_log_p_over_n: if tail.hits > 0 {
                -tail.p_hat.ln() / n as f64
            } else {
                f64::INFINITY
            },
            included: tail.hits >= MIN_HITS,
        });
        center = Some(sample.center);
    }

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.included)
        .map(|row| (row.n as f64, -row.p_hat.ln()))
        .collect();
    let (slope, intercept) = if pts.len() >= 2 {
        let nf = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        let b = sxy / sxx;
        (Some(b), Some(ym - b * xm))
    } else {
        (None, None)
    };

    let center = center.expect("n_grid nonempty");
    let reference = rate_profile(p, &center, &[r])?.values[0].as_f64();
    let rel_error = match slope {
        Some(s) if reference.is_finite() && reference > 0.0 => {
            Some((s - reference).abs() / reference)
        }
        _ => None,
    };
    Ok(SlopeReport { r, rows, slope, intercept, reference, rel_error, failures })
}

/// Exact two-sided binomial tail `ℙ(|K/n − p| ≥ frac)` for `K ~ Bin(n, p)`,
/// summed in log space; ties at the cut points are included with a small
/// slack so thresholds like 0.2 at n=10 behave as written.
pub fn binomial_oracle(p: f64, n: usize, frac: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must be a probability, got {p}");
    if frac <= 0.0 {
        return 1.0;
    }
    if p == 0.0 || p == 1.0 {
        return 0.0; // K/n is deterministic and frac > 0
    }
    let nf = n as f64;
    let tie = 1e-12 * nf.max(1.0);
    let lo_cut = nf * (p - frac) + tie;
    let hi_cut = nf * (p + frac) - tie;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_terms = Vec::new();
    let mut log_choose = 0.0; // ln C(n, 0)
    for k in 0..=n {
        let kf = k as f64;
        if kf <= lo_cut || kf >= hi_cut {
            log_terms.push(log_choose + kf * lp + (nf - kf) * lq);
        }
        if k < n {
            log_choose += ((nf - kf) / (kf + 1.0)).ln();
        }
    }
    if log_terms.is_empty() {
        return 0.0;
    }
    let hi = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_terms.iter().map(|t| (t - hi).exp()).sum();
    (hi + sum.ln()).exp().min(1.0)
}

/// Exact tail `ℙ(Π(Mₙ*, M*) ≥ r)` when the population is scalar with two
/// distinct supported atoms: the square root of the empirical barycenter is
/// then an empirical mean of a two-valued variable, so the event is a
/// binomial tail. Returns `None` when the pattern does not apply.
pub fn exact_scalar_tail<F: Scalar>(p: &DiscretePopulation<F>, r: F, n: usize) -> Option<f64> {
    if p.dim() != 1 {
        return None;
    }
    let support: Vec<usize> =
        (0..p.len()).filter(|&i| p.weights()[i] > F::zero()).collect();
    if support.len() != 2 {
        return None;
    }
    let s0 = p.atom(support[0]).mat()[(0, 0)].as_f64().sqrt();
    let s1 = p.atom(support[1]).mat()[(0, 0)].as_f64().sqrt();
    let gap = (s1 - s0).abs();
    if gap <= 1e-12 {
        return None;
    }
    let w1 = p.weights()[support[1]].as_f64();
    Some(binomial_oracle(w1, n, r.as_f64() / gap))
}
