//! Univariate Wasserstein geometry through the quantile embedding: measures
//! on ℝ enter as quantile functions sampled at the midpoints (j−½)/m of
//! (0,1), where the 2-Wasserstein distance is the L² norm, barycenters are
//! pointwise means, and the rate function is a finite-dimensional KL
//! projection. Doubles as an independent oracle for the 1×1 matrix case
//! (a centered Gaussian with variance s² has quantile s·Φ⁻¹).

use crate::linalg::{sym_eigen, Mat};
use crate::scalar::Scalar;
use crate::tol;
use thiserror::Error;

pub const DEFAULT_GRID_SIZE: usize = 1024;

#[derive(Debug, Error)]
pub enum UnivariateError {
    #[error("quantile grid must be nonempty")]
    Empty,
    #[error("quantile values must be finite")]
    NonFinite,
    #[error("quantile values decrease at index {index} (drop {drop:e})")]
    NotMonotone { index: usize, drop: f64 },
    #[error("grid sizes differ: {expected} vs {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("{atoms} atoms but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1")]
    WeightSum { sum: f64 },
}

/// Quantile function sampled at the midpoints (j−½)/m. Values must be
/// nondecreasing; dips beyond 1e−12 are rejected as invalid quantiles.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileFunction<F> {
    values: Vec<F>,
}

impl<F: Scalar> QuantileFunction<F> {
    pub fn new(values: Vec<F>) -> Result<Self, UnivariateError> {
        if values.is_empty() {
            return Err(UnivariateError::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(UnivariateError::NonFinite);
        }
        let slack = F::c(tol::QUANTILE_MONOTONE);
        for (index, w) in values.windows(2).enumerate() {
            if w[1] < w[0] - slack {
                return Err(UnivariateError::NotMonotone {
                    index: index + 1,
                    drop: (w[0] - w[1]).as_f64(),
                });
            }
        }
        Ok(Self { values })
    }

    pub(crate) fn from_values_unchecked(values: Vec<F>) -> Self {
        Self { values }
    }

    /// Point mass at `c`.
    pub fn constant(m: usize, c: F) -> Self {
        Self { values: vec![c; m.max(1)] }
    }

    /// Centered Gaussian with standard deviation `sigma ≥ 0`.
    pub fn gaussian_scale(m: usize, sigma: F) -> Self {
        let m = m.max(1);
        let values = (0..m)
            .map(|j| sigma * F::c(normal_quantile((j as f64 + 0.5) / m as f64)))
            .collect();
        Self { values }
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }
}

/// L²([0,1]) distance of two quantile functions under midpoint quadrature;
/// this is the 2-Wasserstein distance of the underlying measures.
pub fn w2_distance<F: Scalar>(
    a: &QuantileFunction<F>,
    b: &QuantileFunction<F>,
) -> Result<F, UnivariateError> {
    if a.grid_size() != b.grid_size() {
        return Err(UnivariateError::GridMismatch {
            expected: a.grid_size(),
            got: b.grid_size(),
        });
    }
    let m = F::c(a.grid_size() as f64);
    let ss: F = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    Ok((ss / m).sqrt())
}

#[derive(Clone, Debug)]
pub struct UnivariatePopulation<F> {
    atoms: Vec<QuantileFunction<F>>,
    weights: Vec<F>,
}

impl<F: Scalar> UnivariatePopulation<F> {
    pub fn new(
        atoms: Vec<QuantileFunction<F>>,
        weights: Vec<F>,
    ) -> Result<Self, UnivariateError> {
        if atoms.is_empty() {
            return Err(UnivariateError::Empty);
        }
        if atoms.len() != weights.len() {
            return Err(UnivariateError::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        let m = atoms[0].grid_size();
        for a in &atoms[1..] {
            if a.grid_size() != m {
                return Err(UnivariateError::GridMismatch { expected: m, got: a.grid_size() });
            }
        }
        let mut sum = F::zero();
        for (index, &w) in weights.iter().enumerate() {
            if !(w >= F::zero()) {
                return Err(UnivariateError::NegativeWeight { index, value: w.as_f64() });
            }
            sum = sum + w;
        }
        if (sum - F::one()).abs() > F::c(tol::WEIGHT_SUM) {
            return Err(UnivariateError::WeightSum { sum: sum.as_f64() });
        }
        Ok(Self { atoms, weights })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid_size(&self) -> usize {
        self.atoms[0].grid_size()
    }

    pub fn atoms(&self) -> &[QuantileFunction<F>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }
}

/// Barycenter in the flat geometry: the pointwise weighted mean of the atom
/// quantiles (nondecreasing by convexity of the monotone cone).
pub fn uv_barycenter<F: Scalar>(p: &UnivariatePopulation<F>) -> QuantileFunction<F> {
    let m = p.grid_size();
    let mut values = vec![F::zero(); m];
    for (atom, &w) in p.atoms.iter().zip(&p.weights) {
        if w > F::zero() {
            for (v, &x) in values.iter_mut().zip(atom.values()) {
                *v = *v + w * x;
            }
        }
    }
    QuantileFunction::from_values_unchecked(values)
}

#[derive(Clone, Copy, Debug)]
pub struct UvConfig<F> {
    pub tol: F,
    pub max_iter: usize,
    pub cap: F,
}

impl<F: Scalar> Default for UvConfig<F> {
    fn default() -> Self {
        Self { tol: F::c(1e-9), max_iter: 500, cap: F::c(tol::DUAL_CAP) }
    }
}

/// Outcome of the KL projection. `rate` is +∞ exactly when `feasible` is
/// false; an iteration-limit run reports `converged = false` with the best
/// estimate and stays distinct from infeasibility.
#[derive(Clone, Debug)]
pub struct UvRateResult<F> {
    pub rate: F,
    /// Fitted mixture weights over the atoms (zeros off the support).
    pub weights: Vec<F>,
    /// Dual coordinates: the optimal tilt is `α = Σᵢ thetaᵢ·vᵢ`.
    pub theta: Vec<F>,
    pub feasible: bool,
    pub converged: bool,
    /// Primal–dual gap `|θᵀ∇g|` at exit.
    pub gap: F,
    /// L² distance between the fitted mixture quantile and the target.
    pub moment_residual: F,
    pub iterations: usize,
}

/// Rate function of the flat LDP at `target`: the minimal `KL(q ‖ w)` over
/// mixture weights whose mean quantile equals the target. Because the
/// constraint lives in the span of the k atom quantiles, the dual collapses
/// to a k-dimensional exponential-family fit `g(θ) = θᵀc − log Σᵢ wᵢ e^{(Kθ)ᵢ}`
/// with Gram matrix `K`, solved by damped Newton; dual blow-up past the same
/// cap as the matrix solver diagnoses an infeasible target.
pub fn uv_rate_function<F: Scalar>(
    p: &UnivariatePopulation<F>,
    target: &QuantileFunction<F>,
) -> Result<UvRateResult<F>, UnivariateError> {
    uv_rate_function_with(p, target, &UvConfig::default())
}

pub fn uv_rate_function_with<F: Scalar>(
    p: &UnivariatePopulation<F>,
    target: &QuantileFunction<F>,
    cfg: &UvConfig<F>,
) -> Result<UvRateResult<F>, UnivariateError> {
    let m = p.grid_size();
    if target.grid_size() != m {
        return Err(UnivariateError::GridMismatch { expected: m, got: target.grid_size() });
    }
    let support: Vec<usize> =
        (0..p.len()).filter(|&i| p.weights[i] > F::c(tol::WEIGHT_FLUSH)).collect();
    let k = support.len();
    let mf = F::c(m as f64);
    let inner = |a: &[F], b: &[F]| -> F {
        a.iter().zip(b).map(|(&x, &y)| x * y).sum::<F>() / mf
    };
    let mut gram = Mat::zeros(k);
    let mut c = vec![F::zero(); k];
    for (ii, &i) in support.iter().enumerate() {
        for (jj, &j) in support.iter().enumerate().skip(ii) {
            let v = inner(p.atoms[i].values(), p.atoms[j].values());
            gram[(ii, jj)] = v;
            gram[(jj, ii)] = v;
        }
        c[ii] = inner(p.atoms[i].values(), target.values());
    }
    let tt = inner(target.values(), target.values());
    let scale = F::one() + tt.sqrt();

    let expand = |xs: &[F]| -> Vec<F> {
        let mut full = vec![F::zero(); p.len()];
        for (ii, &i) in support.iter().enumerate() {
            full[i] = xs[ii];
        }
        full
    };
    let infeasible = |theta: &[F], gap: F, residual: F, iterations: usize| UvRateResult {
        rate: F::infinity(),
        weights: vec![F::zero(); p.len()],
        theta: expand(theta),
        feasible: false,
        converged: true,
        gap,
        moment_residual: residual,
        iterations,
    };

    // span pre-check: least squares of the target against the atom span
    let gram_eigen = sym_eigen(&gram).expect("Gram matrices are symmetric PSD");
    let lam_max = gram_eigen.values.iter().fold(F::zero(), |a, &b| a.max(b));
    let cutoff = F::c(1e-12) * lam_max;
    let pinv_apply = |eigen: &crate::linalg::SymEigen<F>, cut: F, rhs: &[F]| -> Vec<F> {
        let n = rhs.len();
        let mut out = vec![F::zero(); n];
        for (idx, &lam) in eigen.values.iter().enumerate() {
            if lam > cut {
                let mut dot = F::zero();
                for r in 0..n {
                    dot = dot + eigen.vectors[(r, idx)] * rhs[r];
                }
                let coeff = dot / lam;
                for r in 0..n {
                    out[r] = out[r] + coeff * eigen.vectors[(r, idx)];
                }
            }
        }
        out
    };
    let mat_apply = |mat: &Mat<F>, xs: &[F]| -> Vec<F> {
        (0..xs.len())
            .map(|r| (0..xs.len()).map(|s| mat[(r, s)] * xs[s]).sum())
            .collect()
    };
    let dot = |a: &[F], b: &[F]| -> F { a.iter().zip(b).map(|(&x, &y)| x * y).sum() };
    // distance of a mixture Σᵢ coeffsᵢ·gᵢ from the target, assembled pointwise
    // on the grid: the Gram quadratic form loses near-zero residuals to
    // cancellation, this does not
    let grid_residual = |coeffs: &[F]| -> F {
        let mut acc = F::zero();
        for j in 0..m {
            let mut mix = -target.values()[j];
            for (ii, &i) in support.iter().enumerate() {
                mix = mix + coeffs[ii] * p.atoms[i].values()[j];
            }
            acc = acc + mix * mix;
        }
        (acc / mf).sqrt()
    };

    let beta = pinv_apply(&gram_eigen, cutoff, &c);
    let span_residual = grid_residual(&beta);
    if span_residual > F::c(tol::UV_SPAN) * scale {
        return Ok(infeasible(&vec![F::zero(); k], F::infinity(), span_residual, 0));
    }

    let w: Vec<F> = support.iter().map(|&i| p.weights[i]).collect();
    let weights_and_value = |theta: &[F]| -> (Vec<F>, F) {
        let s = mat_apply(&gram, theta);
        let hi = s.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
        let mut q: Vec<F> = w.iter().zip(&s).map(|(&wi, &si)| wi * (si - hi).exp()).collect();
        let z: F = q.iter().cloned().sum();
        for qi in &mut q {
            *qi = *qi / z;
        }
        (q, dot(theta, &c) - (hi + z.ln()))
    };
    let kl = |q: &[F]| -> F {
        q.iter()
            .zip(&w)
            .filter(|(&qi, _)| qi > F::zero())
            .map(|(&qi, &wi)| qi * (qi / wi).ln())
            .sum()
    };

    let mut theta = vec![F::zero(); k];
    let (mut q, mut value) = weights_and_value(&theta);
    let mut eta_grad = F::one();
    let mut iterations = 0;
    loop {
        let gq = mat_apply(&gram, &q);
        let grad: Vec<F> = c.iter().zip(&gq).map(|(&ci, &gi)| ci - gi).collect();
        let residual = grid_residual(&q);
        let gap = dot(&theta, &grad).abs();
        let theta_norm = dot(&theta, &theta).sqrt();

        if residual <= cfg.tol * scale && gap <= F::c(tol::UV_GAP) {
            return Ok(UvRateResult {
                rate: kl(&q),
                weights: expand(&q),
                theta: expand(&theta),
                feasible: true,
                converged: true,
                gap,
                moment_residual: residual,
                iterations,
            });
        }
        if theta_norm > cfg.cap {
            return Ok(infeasible(&theta, gap, residual, iterations));
        }
        if iterations >= cfg.max_iter {
            return Ok(UvRateResult {
                rate: kl(&q),
                weights: expand(&q),
                theta: expand(&theta),
                feasible: true,
                converged: false,
                gap,
                moment_residual: residual,
                iterations,
            });
        }

        // Newton direction on the concave dual: Hessian −K·C·K with
        // C = diag(q) − qqᵀ; fall back to the gradient when it degenerates
        let mut cmat = Mat::zeros(k);
        for a in 0..k {
            for b in 0..k {
                cmat[(a, b)] = if a == b { q[a] - q[a] * q[b] } else { -q[a] * q[b] };
            }
        }
        let hess = gram.matmul(&cmat).matmul(&gram).sym();
        let hess_eigen = sym_eigen(&hess).expect("Hessian is symmetric");
        let hess_max = hess_eigen.values.iter().fold(F::zero(), |a, &b| a.max(b));
        let mut dir = if hess_max > F::zero() {
            pinv_apply(&hess_eigen, F::c(1e-12) * hess_max, &grad)
        } else {
            Vec::new()
        };
        let mut newton = !dir.is_empty()
            && dir.iter().all(|d| d.is_finite())
            && dot(&dir, &grad) > F::zero();
        if !newton {
            dir = grad.clone();
            newton = false;
        }
        let slope = dot(&dir, &grad);
        if !(slope > F::zero()) {
            // gradient vanished without meeting the residual test: stalled
            return Ok(UvRateResult {
                rate: kl(&q),
                weights: expand(&q),
                theta: expand(&theta),
                feasible: true,
                converged: false,
                gap,
                moment_residual: residual,
                iterations,
            });
        }

        let mut eta = if newton { F::one() } else { eta_grad };
        let mut halvings = 0;
        loop {
            let cand: Vec<F> =
                theta.iter().zip(&dir).map(|(&t, &d)| t + eta * d).collect();
            let (q_cand, v_cand) = weights_and_value(&cand);
            if v_cand >= value + F::c(0.1) * eta * slope {
                theta = cand;
                q = q_cand;
                value = v_cand;
                break;
            }
            eta = eta * F::c(0.5);
            halvings += 1;
            if halvings > 60 {
                return Ok(UvRateResult {
                    rate: kl(&q),
                    weights: expand(&q),
                    theta: expand(&theta),
                    feasible: true,
                    converged: false,
                    gap,
                    moment_residual: residual,
                    iterations,
                });
            }
        }
        if !newton {
            eta_grad = (eta + eta).min(F::c(1e12));
        }
        iterations += 1;
    }
}

/// Lower tail quantile of the standard normal (Wichura's PPND16 rational
/// approximation, accurate to ~1e−16 relative).
pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 8] = [
        3.3871328727963666080e0,
        1.3314166789178437745e2,
        1.9715909503065514427e3,
        1.3731693765509461125e4,
        4.5921953931549871457e4,
        6.7265770927008700853e4,
        3.3430575583588128105e4,
        2.5090809287301226727e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.2313330701600911252e1,
        6.8718700749205790830e2,
        5.3941960214247511077e3,
        2.1213794301586595867e4,
        3.9307895800092710610e4,
        2.8729085735721942674e4,
        5.2264952788528545610e3,
    ];
    const C: [f64; 8] = [
        1.42343711074968357734e0,
        4.63033784615654529590e0,
        5.76949722146069140550e0,
        3.64784832476320460504e0,
        1.27045825245236838258e0,
        2.41780725177450611770e-1,
        2.27238449892691845833e-2,
        7.74545014278341407640e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.05319162663775882187e0,
        1.67638483018380384940e0,
        6.89767334985100004550e-1,
        1.48103976427480074590e-1,
        1.51986665636164571966e-2,
        5.47593808499534494600e-4,
        1.05075007164441684324e-9,
    ];
    const E: [f64; 8] = [
        6.65790464350110377720e0,
        5.46378491116411436990e0,
        1.78482653991729133580e0,
        2.96560571828504891230e-1,
        2.65321895265761230930e-2,
        1.24266094738807843860e-3,
        2.71155556874348757815e-5,
        2.01033439929228813265e-7,
    ];
    const FF: [f64; 8] = [
        1.0,
        5.99832206555887937690e-1,
        1.36929880922735805310e-1,
        1.48753612908506148525e-2,
        7.86869131145613259100e-4,
        1.84631831751005468180e-5,
        1.42151175831644588870e-7,
        2.04426310338993978564e-15,
    ];
    fn poly(coef: &[f64; 8], x: f64) -> f64 {
        coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&FF, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normal_quantile_reference_values() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() <= 1e-12);
        assert!((normal_quantile(0.8413447460685429) - 1.0).abs() <= 1e-10);
        assert!((normal_quantile(0.25) + 0.6744897501960817).abs() <= 1e-13);
        assert!((normal_quantile(0.001) + 3.090232306167813).abs() <= 1e-12);
        assert!((normal_quantile(1e-6) + 4.753424308822899).abs() <= 1e-11);
        assert!((normal_quantile(1e-12) + 7.034483825301131).abs() <= 1e-10);
        // the reflections 1 − p are exact for these, so antisymmetry is too
        for &p in &[0.015625, 0.125, 0.25, 0.3125, 0.3, 0.46875] {
            assert!((normal_quantile(1.0 - p) + normal_quantile(p)).abs() <= 1e-12);
        }
        let mut last = f64::NEG_INFINITY;
        for j in 0..999 {
            let v = normal_quantile((j as f64 + 0.5) / 999.0);
            assert!(v > last);
            last = v;
        }
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(normal_quantile(1.0), f64::INFINITY);
    }

    #[test]
    fn quantile_validation() {
        assert!(QuantileFunction::new(vec![1.0, 2.0, 2.0, 5.0]).is_ok());
        // dips within the tolerance are numerical noise, not violations
        assert!(QuantileFunction::new(vec![1.0, 1.0 - 5e-13]).is_ok());
        assert!(matches!(
            QuantileFunction::new(vec![1.0, 0.5]),
            Err(UnivariateError::NotMonotone { index: 1, .. })
        ));
        assert!(matches!(
            QuantileFunction::<f64>::new(vec![]),
            Err(UnivariateError::Empty)
        ));
        assert!(matches!(
            QuantileFunction::new(vec![1.0, f64::NAN]),
            Err(UnivariateError::NonFinite)
        ));
    }

    #[test]
    fn gaussian_scale_is_antisymmetric() {
        let q = QuantileFunction::<f64>::gaussian_scale(64, 2.0);
        for j in 0..64 {
            let v = q.values()[j];
            let w = q.values()[63 - j];
            assert!((v + w).abs() <= 1e-12, "asymmetry at {j}");
        }
    }

    #[test]
    fn w2_examples() {
        let a = QuantileFunction::<f64>::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(w2_distance(&a, &a).unwrap(), 0.0);
        let c1 = QuantileFunction::<f64>::constant(16, 1.0);
        let c2 = QuantileFunction::constant(16, 3.5);
        assert!((w2_distance(&c1, &c2).unwrap() - 2.5).abs() <= 1e-15);
        // Gaussian scales 1 vs 3 match the matrix-case distance Π([1],[9]) = 2
        let g1 = QuantileFunction::<f64>::gaussian_scale(2048, 1.0);
        let g3 = QuantileFunction::gaussian_scale(2048, 3.0);
        let d = w2_distance(&g1, &g3).unwrap();
        assert!((d - 2.0).abs() <= 1e-2, "distance {d}");
        assert!(matches!(
            w2_distance(&c1, &a),
            Err(UnivariateError::GridMismatch { .. })
        ));
    }

    fn gaussian_pop(scales: &[f64], weights: &[f64], m: usize) -> UnivariatePopulation<f64> {
        UnivariatePopulation::new(
            scales.iter().map(|&s| QuantileFunction::gaussian_scale(m, s)).collect(),
            weights.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn barycenter_examples() {
        let p = UnivariatePopulation::new(
            vec![QuantileFunction::new(vec![0.0, 1.0, 4.0]).unwrap()],
            vec![1.0],
        )
        .unwrap();
        assert_eq!(uv_barycenter(&p).values(), &[0.0, 1.0, 4.0]);

        let p = UnivariatePopulation::new(
            vec![QuantileFunction::constant(8, 0.0), QuantileFunction::constant(8, 2.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(uv_barycenter(&p).values(), &[1.0; 8]);

        // Gaussian mixing is exact on the shared grid
        let p = gaussian_pop(&[1.0, 3.0], &[0.5, 0.5], 2048);
        let bary = uv_barycenter(&p);
        let two = QuantileFunction::gaussian_scale(2048, 2.0);
        assert!(w2_distance(&bary, &two).unwrap() <= 1e-10);
    }

    #[test]
    fn barycenter_minimizes_the_frechet_functional() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let p = gaussian_pop(&[0.5, 1.0, 2.5], &[0.3, 0.3, 0.4], 256);
        let bary = uv_barycenter(&p);
        let frechet = |q: &QuantileFunction<f64>| -> f64 {
            p.atoms()
                .iter()
                .zip(p.weights())
                .map(|(a, &w)| {
                    let d = w2_distance(q, a).unwrap();
                    w * d * d
                })
                .sum()
        };
        let base = frechet(&bary);
        for _ in 0..32 {
            let mut vals: Vec<f64> = bary
                .values()
                .iter()
                .map(|&v| v + rng.gen_range(-0.05..0.05))
                .collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let cand = QuantileFunction::new(vals).unwrap();
            assert!(frechet(&cand) >= base - 1e-12);
        }
    }

    #[test]
    fn rate_vanishes_at_the_barycenter() {
        let p = gaussian_pop(&[1.0, 3.0], &[0.5, 0.5], 512);
        let bary = uv_barycenter(&p);
        let res = uv_rate_function(&p, &bary).unwrap();
        assert!(res.feasible && res.converged);
        assert!(res.rate.abs() <= 1e-9, "rate {}", res.rate);
        assert!(res.gap <= 1e-9);
    }

    #[test]
    fn constant_atoms_match_the_scalar_oracle() {
        let p = UnivariatePopulation::new(
            vec![QuantileFunction::constant(128, 1.0), QuantileFunction::constant(128, 3.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let res = uv_rate_function(&p, &QuantileFunction::constant(128, 1.5)).unwrap();
        assert!(res.feasible && res.converged);
        let exact = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((res.rate - exact).abs() <= 1e-8, "rate {}", res.rate);
        assert!((res.weights[0] - 0.75).abs() <= 1e-6);
        assert!((res.weights[1] - 0.25).abs() <= 1e-6);
        assert!(res.moment_residual <= 1e-9 * 2.5);
    }

    #[test]
    fn out_of_hull_targets_are_infeasible() {
        // constant 5 is in the span of constants but outside the hull [1, 3]
        let p = UnivariatePopulation::new(
            vec![QuantileFunction::<f64>::constant(64, 1.0), QuantileFunction::constant(64, 3.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let res = uv_rate_function(&p, &QuantileFunction::constant(64, 5.0)).unwrap();
        assert!(!res.feasible);
        assert!(res.rate.is_infinite());
        assert!(res.converged);
        // a constant target is not even in the span of Gaussian quantiles
        let p = gaussian_pop(&[1.0, 2.0], &[0.5, 0.5], 64);
        let res = uv_rate_function(&p, &QuantileFunction::constant(64, 1.0)).unwrap();
        assert!(!res.feasible);
        assert_eq!(res.iterations, 0, "span pre-check should fire");
    }

    #[test]
    fn flat_rate_matches_the_matrix_rate() {
        // Gaussian scales {1, 3} correspond to the 1×1 matrices {[1], [9]}
        let p = gaussian_pop(&[1.0, 3.0], &[0.5, 0.5], 2048);
        let pop = crate::population::DiscretePopulation::from_scalars(&[1.0, 9.0], &[0.5, 0.5])
            .unwrap();
        for &s in &[1.5, 2.0, 2.5] {
            let target = QuantileFunction::gaussian_scale(2048, s);
            let flat = uv_rate_function(&p, &target).unwrap();
            assert!(flat.feasible, "scale {s} should be inside the hull");
            let anchor = crate::spd::CovMatrix::from_row_major(1, &[s * s]).unwrap();
            let matrix = crate::tilting::rate_function(&pop, &anchor).unwrap();
            assert!(
                (flat.rate - matrix).abs() <= 1e-3,
                "scale {s}: flat {} vs matrix {matrix}",
                flat.rate
            );
        }
    }

    #[test]
    fn population_validation() {
        let q = QuantileFunction::constant(8, 1.0);
        assert!(matches!(
            UnivariatePopulation::<f64>::new(vec![], vec![]),
            Err(UnivariateError::Empty)
        ));
        assert!(matches!(
            UnivariatePopulation::new(vec![q.clone()], vec![0.5, 0.5]),
            Err(UnivariateError::LengthMismatch { .. })
        ));
        assert!(matches!(
            UnivariatePopulation::new(
                vec![q.clone(), QuantileFunction::constant(4, 2.0)],
                vec![0.5, 0.5]
            ),
            Err(UnivariateError::GridMismatch { .. })
        ));
        assert!(matches!(
            UnivariatePopulation::new(vec![q.clone()], vec![-0.1]),
            Err(UnivariateError::NegativeWeight { .. })
        ));
        assert!(matches!(
            UnivariatePopulation::new(vec![q], vec![0.9]),
            Err(UnivariateError::WeightSum { .. })
        ));
    }

    #[test]
    fn point_mass_rate() {
        let p = UnivariatePopulation::new(
            vec![QuantileFunction::<f64>::gaussian_scale(64, 2.0)],
            vec![1.0],
        )
        .unwrap();
        let at_atom = uv_rate_function(&p, &QuantileFunction::gaussian_scale(64, 2.0)).unwrap();
        assert!(at_atom.feasible && at_atom.rate.abs() <= 1e-12);
        let off = uv_rate_function(&p, &QuantileFunction::gaussian_scale(64, 2.5)).unwrap();
        assert!(!off.feasible && off.rate.is_infinite());
    }
}
