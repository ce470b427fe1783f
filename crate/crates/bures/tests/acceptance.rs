//! Acceptance gate: ten end-to-end checks of the numerical contracts, each
//! printing one `criterion N: PASS` line (run with `--nocapture` to see them;
//! the harness prints the FAIL side on its own). Oracles here are derived
//! independently of the library code paths they check.

use std::time::Instant;

use bures::barycenter::{barycenter, barycenter_fixed_point};
use bures::monte_carlo::{exact_scalar_tail, rate_slope};
use bures::optimizer::rate_profile;
use bures::population::DiscretePopulation;
use bures::rate_gradient::rate_gradient;
use bures::spd::{CovMatrix, GeodesicParam, TangentVector};
use bures::tilting::{
    rate_function, relative_entropy, solve_dual, solve_dual_with, tilt_interpolation_path,
    DualConfig,
};
use bures::univariate::{uv_rate_function, QuantileFunction, UnivariatePopulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Well-conditioned random SPD matrix: normalized Gram matrix plus a ridge.
fn random_spd(dim: usize, ridge: f64, rng: &mut ChaCha8Rng) -> CovMatrix<f64> {
    let a: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += a[k * dim + i] * a[k * dim + j];
            }
            g[i * dim + j] = s / dim as f64 + if i == j { ridge } else { 0.0 };
        }
    }
    CovMatrix::from_row_major(dim, &g).unwrap()
}

/// Random point in the interior of the simplex, bounded away from its faces.
fn random_weights(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|w| w / sum).collect()
}

fn random_population(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> DiscretePopulation<f64> {
    let atoms = (0..k).map(|_| random_spd(dim, 0.3, rng)).collect();
    DiscretePopulation::new(atoms, random_weights(k, rng)).unwrap()
}

/// Barycenter of a random interior reweighting: always an anchor where the
/// rate function is finite, for any atom count and dimension. Solved tighter
/// than the default so that anchors sit on the reachable moment surface to
/// well below the dual tolerances used here.
fn feasible_anchor(p: &DiscretePopulation<f64>, rng: &mut ChaCha8Rng) -> CovMatrix<f64> {
    let q = random_weights(p.len(), rng);
    let reweighted = DiscretePopulation::new(p.atoms().to_vec(), q).unwrap();
    let sol = barycenter_fixed_point(&reweighted, None, 1e-12, 1000).unwrap();
    assert!(sol.converged, "anchor barycenter residual {}", sol.residual);
    sol.barycenter
}

fn scale_cov(s: &CovMatrix<f64>, c: f64) -> CovMatrix<f64> {
    let d = s.dim();
    let data: Vec<f64> = (0..d * d).map(|idx| c * s.mat()[(idx / d, idx % d)]).collect();
    CovMatrix::from_row_major(d, &data).unwrap()
}

#[test]
fn criterion_01_duality_between_rate_and_entropy() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0usize;
    for case in 0..50usize {
        let dim = 1 + case % 3;
        let k = 2 + case % 4;
        let p = random_population(dim, k, &mut rng);
        for _ in 0..5 {
            let m = feasible_anchor(&p, &mut rng);
            // the value/entropy identity holds up to ‖A‖_M·residual, so the
            // 1e-8 band needs a residual well below the default
            let cfg = DualConfig { tol: 1e-11, ..DualConfig::default() };
            let dual = solve_dual_with(&p, &m, &cfg).unwrap();
            assert!(dual.feasible(), "case {case}: dual residual {}", dual.residual);

            // the tilted population's barycenter recovers the anchor
            let tilted =
                DiscretePopulation::new(p.atoms().to_vec(), dual.tilted_weights.clone()).unwrap();
            let sol = barycenter(&tilted).unwrap();
            assert!(sol.converged);
            let drift = sol.barycenter.bw_distance(&m).unwrap();
            assert!(
                drift <= 1e-7 * (1.0 + m.pi_norm()),
                "case {case}: tilted barycenter drift {drift:e}"
            );

            // the dual value is the relative entropy of its own tilt
            let h = relative_entropy(&dual.tilted_weights, p.weights()).unwrap();
            assert!(
                (dual.value - h).abs() <= 1e-8 * (1.0 + dual.value),
                "case {case}: value {} vs entropy {h}",
                dual.value
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 250);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    println!(
        "criterion 1: PASS — 250 anchors across 50 populations, duality gap ≤ 1e-8, \
         tilt barycenter drift ≤ 1e-7, in {elapsed:.1?}"
    );
}

#[test]
fn criterion_02_scalar_two_point_oracle() {
    let p: DiscretePopulation<f64> =
        DiscretePopulation::from_scalars(&[1.0, 9.0], &[0.5, 0.5]).unwrap();

    let sol = barycenter(&p).unwrap();
    assert!(sol.converged);
    assert!(
        (sol.barycenter.mat()[(0, 0)] - 4.0).abs() <= 1e-12,
        "barycenter {}",
        sol.barycenter.mat()[(0, 0)]
    );

    let anchor = CovMatrix::from_row_major(1, &[2.25]).unwrap();
    let dual = solve_dual(&p, &anchor).unwrap();
    assert!(dual.feasible());
    assert!((dual.value - 0.130812).abs() <= 1e-6, "rate {}", dual.value);
    let a = dual.optimizer.mat()[(0, 0)];
    assert!((a + 0.366204).abs() <= 1e-5, "tilt {a}");
    assert!((dual.tilted_weights[0] - 0.75).abs() <= 1e-7);
    assert!((dual.tilted_weights[1] - 0.25).abs() <= 1e-7);

    let outside = CovMatrix::from_row_major(1, &[16.0]).unwrap();
    let dual = solve_dual(&p, &outside).unwrap();
    assert!(!dual.feasible());
    assert!(rate_function(&p, &outside).unwrap().is_infinite());

    println!(
        "criterion 2: PASS — barycenter [4], rate 0.130812, tilt -0.366204, \
         weights (3/4, 1/4), anchor [16] infeasible"
    );
}

/// `sup_θ [θ·s − log Σ wᵢ e^{θ·xᵢ}]` by Newton on the mean of the tilted
/// distribution; requires `s` strictly inside the hull of the `xᵢ`.
fn legendre_oracle(xs: &[f64], ws: &[f64], s: f64) -> f64 {
    let moments = |theta: f64| {
        let hi = xs.iter().map(|x| theta * x).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = ws.iter().zip(xs).map(|(w, x)| w * (theta * x - hi).exp()).sum();
        let m1: f64 =
            ws.iter().zip(xs).map(|(w, x)| w * x * (theta * x - hi).exp()).sum::<f64>() / z;
        let m2: f64 =
            ws.iter().zip(xs).map(|(w, x)| w * x * x * (theta * x - hi).exp()).sum::<f64>() / z;
        (hi + z.ln(), m1, (m2 - m1 * m1).max(1e-300))
    };
    let mut theta = 0.0;
    for _ in 0..200 {
        let (_, mean, var) = moments(theta);
        let step = ((s - mean) / var).clamp(-10.0, 10.0);
        theta += step;
        if step.abs() <= 1e-14 * (1.0 + theta.abs()) {
            break;
        }
    }
    let (k, mean, _) = moments(theta);
    assert!((mean - s).abs() <= 1e-10, "oracle stalled: mean {mean} target {s}");
    theta * s - k
}

#[test]
fn criterion_03_geodesic_family_reduces_to_one_dimension() {
    // Atoms cᵢ·S₀ lie on one geodesic; the whole problem is isometric to the
    // scalar population on the √cᵢ, so the rate along the geodesic must agree
    // with the one-dimensional Legendre transform at √c(t).
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cases: [(usize, &[f64], &[f64], f64, f64); 2] = [
        (2, &[0.49, 1.0, 2.25, 4.84], &[0.3, 0.25, 0.25, 0.2], 0.8, 3.6),
        (3, &[0.64, 1.44, 4.0], &[0.4, 0.35, 0.25], 0.9, 3.0),
    ];
    let mut worst = 0.0f64;
    for (dim, mults, weights, a, b) in cases {
        let s0 = random_spd(dim, 0.4, &mut rng);
        let atoms: Vec<_> = mults.iter().map(|&c| scale_cov(&s0, c)).collect();
        let p = DiscretePopulation::new(atoms, weights.to_vec()).unwrap();
        let xs: Vec<f64> = mults.iter().map(|c| c.sqrt()).collect();
        let geo = GeodesicParam::new(&scale_cov(&s0, a), &scale_cov(&s0, b)).unwrap();
        for i in 1..=9 {
            let t = 0.1 * i as f64;
            let point = geo.point(t).unwrap();
            let matrix_rate = rate_function(&p, &point).unwrap();
            let root = (1.0 - t) * a.sqrt() + t * b.sqrt();
            let oracle = legendre_oracle(&xs, weights, root);
            let gap = (matrix_rate - oracle).abs();
            assert!(gap <= 1e-6, "dim {dim} t {t}: matrix {matrix_rate} vs oracle {oracle}");
            worst = worst.max(gap);
        }
    }
    println!(
        "criterion 3: PASS — 18 geodesic points across 2 families agree with the \
         1-D Legendre oracle, worst gap {worst:.2e}"
    );
}

#[test]
fn criterion_04_envelope_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_rel = 0.0f64;
    for case in 0..20usize {
        let (dim, k) = if case < 12 { (2, 5) } else { (3, 8) };
        let p = random_population(dim, k, &mut rng);
        let m = feasible_anchor(&p, &mut rng);
        let dual = solve_dual(&p, &m).unwrap();
        assert!(dual.feasible());
        let g = rate_gradient(&p, &m, &dual).unwrap();

        // central differences over the symmetric basis
        let h = 1e-4;
        let mut fd = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let bump = |sign: f64| {
                    let mut data: Vec<f64> = (0..dim * dim)
                        .map(|idx| m.mat()[(idx / dim, idx % dim)])
                        .collect();
                    data[i * dim + j] += sign * h;
                    if i != j {
                        data[j * dim + i] += sign * h;
                    }
                    let shifted = CovMatrix::from_row_major(dim, &data).unwrap();
                    rate_function(&p, &shifted).unwrap()
                };
                let slope = (bump(1.0) - bump(-1.0)) / (2.0 * h);
                // the basis direction pairs to G_ii on the diagonal, 2·G_ij off it
                if i == j {
                    fd[i * dim + i] = slope;
                } else {
                    fd[i * dim + j] = slope / 2.0;
                    fd[j * dim + i] = slope / 2.0;
                }
            }
        }
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for idx in 0..dim * dim {
            let gij = g.mat()[(idx / dim, idx % dim)];
            diff2 += (fd[idx] - gij) * (fd[idx] - gij);
            norm2 += gij * gij;
        }
        let rel = diff2.sqrt() / norm2.sqrt().max(1e-3);
        assert!(rel <= 1e-3, "case {case}: fd mismatch {rel:e}");
        worst_rel = worst_rel.max(rel);
    }

    // the gradient vanishes at the barycenter
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    let p = random_population(2, 5, &mut rng);
    let m_star = barycenter(&p).unwrap().barycenter;
    let dual = solve_dual(&p, &m_star).unwrap();
    let g = rate_gradient(&p, &m_star, &dual).unwrap();
    let gnorm = g.spectral_norm().unwrap();
    assert!(gnorm <= 1e-7, "gradient at the barycenter: {gnorm:e}");

    // scalar pinned value: dI/dm at m = 2.25 equals −ln3/6
    let p = DiscretePopulation::from_scalars(&[1.0, 9.0], &[0.5, 0.5]).unwrap();
    let anchor = CovMatrix::from_row_major(1, &[2.25]).unwrap();
    let dual = solve_dual(&p, &anchor).unwrap();
    let g = rate_gradient(&p, &anchor, &dual).unwrap().mat()[(0, 0)];
    let expect = -3.0f64.ln() / 6.0;
    assert!((g - expect).abs() <= 1e-5, "scalar gradient {g} vs {expect}");

    println!(
        "criterion 4: PASS — 20 finite-difference checks (worst rel err {worst_rel:.2e}), \
         ‖∇‖ ≤ 1e-7 at the barycenter, scalar slope −ln3/6"
    );
}

#[test]
fn criterion_05_tail_decay_matches_the_rate() {
    let started = Instant::now();
    let p = DiscretePopulation::from_scalars(&[1.0, 9.0], &[0.5, 0.5]).unwrap();
    let target = 0.082276;

    // exact binomial tail at n = 2000
    let tail = exact_scalar_tail(&p, 0.4, 2000).unwrap();
    let exact_rate = -tail.ln() / 2000.0;
    let exact_rel = (exact_rate - target).abs() / target;
    assert!(exact_rel <= 0.02, "exact rate {exact_rate} is {exact_rel:.3} off");

    // Monte Carlo decay fit across sample sizes
    let report = rate_slope(&p, 0.4, &[40, 80, 120, 160, 200], 200_000, 20260815).unwrap();
    assert_eq!(report.failures, 0);
    let slope = report.slope.expect("enough hits at small n for a fit");
    let mc_rel = (slope - target).abs() / target;
    assert!(mc_rel <= 0.15, "MC slope {slope} is {mc_rel:.3} off");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    println!(
        "criterion 5: PASS — exact n=2000 rate {exact_rate:.6} ({:.2}% off), \
         MC slope {slope:.4} ({:.1}% off) in {elapsed:.1?}",
        100.0 * exact_rel,
        100.0 * mc_rel
    );
}

#[test]
fn criterion_06_radial_profile_values_and_monotonicity() {
    let p: DiscretePopulation<f64> =
        DiscretePopulation::from_scalars(&[1.0, 9.0], &[0.5, 0.5]).unwrap();
    let center = barycenter(&p).unwrap().barycenter;
    let prof = rate_profile(&p, &center, &[0.4, 0.5]).unwrap();
    assert!((prof.values[0] - 0.082276).abs() <= 1e-3, "i_P(0.4) = {}", prof.values[0]);
    assert!((prof.values[1] - 0.130812).abs() <= 1e-3, "i_P(0.5) = {}", prof.values[1]);
    assert!(prof.values[0] < prof.values[1]);

    // random 2x2 population: nondecreasing profile over reachable radii
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let p2 = random_population(2, 5, &mut rng);
    let c2 = barycenter(&p2).unwrap().barycenter;
    let mut reach = 0.0f64;
    for _ in 0..20 {
        let m = feasible_anchor(&p2, &mut rng);
        reach = reach.max(m.bw_distance(&c2).unwrap());
    }
    assert!(reach > 0.0);
    let radii: Vec<f64> = [0.15, 0.3, 0.45, 0.6].iter().map(|f| f * reach).collect();
    let prof2 = rate_profile(&p2, &c2, &radii).unwrap();
    assert!(prof2.values[0].is_finite());
    for w in prof2.values.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "profile decreased: {} -> {}", w[0], w[1]);
    }

    println!(
        "criterion 6: PASS — scalar profile (0.082276, 0.130812) ± 1e-3 strictly \
         increasing; random 2x2 profile nondecreasing over 4 radii"
    );
}

#[test]
fn criterion_07_sub_gaussian_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut checked = 0usize;
    for case in 0..20usize {
        let dim = 1 + case % 3;
        let k = 2 + case % 4;
        let p = random_population(dim, k, &mut rng);
        let stats = p.pi_norm_stats();
        assert!(stats.sigma_sq > 0.0);
        for _ in 0..3 {
            let m = feasible_anchor(&p, &mut rng);
            let value = rate_function(&p, &m).unwrap();
            let shift = m.pi_norm() - stats.mu;
            let reference = (shift * shift - stats.mu * stats.mu) / (2.0 * stats.sigma_sq);
            assert!(
                value >= reference - 1e-8,
                "case {case}: rate {value} below the tail bound {reference}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 60);
    println!(
        "criterion 7: PASS — 60 feasible anchors across 20 populations dominate \
         the sub-Gaussian reference within 1e-8"
    );
}

#[test]
fn criterion_08_convexity_along_mixture_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for case in 0..10usize {
        let dim = 1 + case % 3;
        let k = 3 + case % 3;
        let p = random_population(dim, k, &mut rng);
        let m0 = feasible_anchor(&p, &mut rng);
        let m1 = feasible_anchor(&p, &mut rng);
        let i0 = rate_function(&p, &m0).unwrap();
        let i1 = rate_function(&p, &m1).unwrap();
        for i in 1..=9 {
            let t = 0.1 * i as f64;
            let point = tilt_interpolation_path(&p, &m0, &m1, t).unwrap();
            let it = rate_function(&p, &point).unwrap();
            let chord = (1.0 - t) * i0 + t * i1;
            assert!(
                it <= chord + 1e-6,
                "case {case} t {t}: rate {it} above the chord {chord}"
            );
        }
    }
    println!(
        "criterion 8: PASS — 90 interpolation points on 10 pairs stay below the \
         chord within 1e-6"
    );
}

#[test]
fn criterion_09_quantile_embedding_matches_matrix_rates() {
    let m = 2048;
    let cases: [(&[f64], &[f64], &[f64]); 2] = [
        (&[1.0, 3.0], &[0.5, 0.5], &[1.5, 2.2]),
        (&[0.8, 1.5, 2.7], &[0.3, 0.4, 0.3], &[1.2, 1.9]),
    ];
    let mut worst = 0.0f64;
    for (sigmas, weights, targets) in cases {
        let atoms: Vec<_> =
            sigmas.iter().map(|&s| QuantileFunction::gaussian_scale(m, s)).collect();
        let uv = UnivariatePopulation::new(atoms, weights.to_vec()).unwrap();
        let variances: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
        let mat = DiscretePopulation::from_scalars(&variances, weights).unwrap();
        for &sigma in targets {
            let target = QuantileFunction::gaussian_scale(m, sigma);
            let uv_result = uv_rate_function(&uv, &target).unwrap();
            assert!(uv_result.feasible && uv_result.converged);
            let anchor = CovMatrix::from_row_major(1, &[sigma * sigma]).unwrap();
            let matrix_rate = rate_function(&mat, &anchor).unwrap();
            let gap = (uv_result.rate - matrix_rate).abs();
            assert!(gap <= 1e-3, "sigma {sigma}: uv {} vs matrix {matrix_rate}", uv_result.rate);
            worst = worst.max(gap);
        }
    }

    // pinned cross-check against the scalar oracle value
    let atoms: Vec<QuantileFunction<f64>> = vec![
        QuantileFunction::gaussian_scale(m, 1.0),
        QuantileFunction::gaussian_scale(m, 3.0),
    ];
    let uv = UnivariatePopulation::new(atoms, vec![0.5, 0.5]).unwrap();
    let target = QuantileFunction::gaussian_scale(m, 1.5);
    let rate = uv_rate_function(&uv, &target).unwrap().rate;
    assert!((rate - 0.130812).abs() <= 1e-3, "pinned rate {rate}");

    println!(
        "criterion 9: PASS — Gaussian-scale rates agree with the 1x1 matrix \
         solver on 4 targets (worst gap {worst:.2e}) and the pinned oracle"
    );
}

#[test]
fn criterion_10_core_geometry_randomized() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..10_000usize {
        let dim = 1 + case % 3;
        let a = random_spd(dim, 0.25, &mut rng);
        let b = random_spd(dim, 0.25, &mut rng);
        let c = random_spd(dim, 0.25, &mut rng);
        let scale = (a.pi_norm() + b.pi_norm() + c.pi_norm()).max(1.0);

        // metric axioms; the self-distance floor absorbs √eps cancellation
        let dab = a.bw_distance(&b).unwrap();
        assert!(dab > 0.0, "case {case}: distinct matrices at distance zero");
        assert!((dab - b.bw_distance(&a).unwrap()).abs() <= 1e-9 * scale);
        assert!(a.bw_distance(&a).unwrap() <= 1e-7 * scale);
        let dac = a.bw_distance(&c).unwrap();
        let dbc = b.bw_distance(&c).unwrap();
        assert!(dac <= dab + dbc + 1e-9 * scale, "case {case}: triangle violated");

        // the distance equals the anchor norm of the log image
        let l = a.log_map(&b).unwrap();
        let n2 = a.m_inner(&l, &l).unwrap();
        assert!(
            (n2 - dab * dab).abs() <= 1e-8 * (1.0 + dab * dab),
            "case {case}: log-map norm {n2} vs squared distance {}",
            dab * dab
        );

        // trace pairing bound: tr(A·t_A^B) ≤ Π(A,0)·Π(B,0)
        let eye = TangentVector::from_row_major(
            dim,
            &(0..dim * dim)
                .map(|idx| if idx / dim == idx % dim { 1.0 } else { 0.0 })
                .collect::<Vec<f64>>(),
        )
        .unwrap();
        let tr_at = a.m_inner(&l, &eye).unwrap() + a.trace();
        assert!(
            tr_at <= a.pi_norm() * b.pi_norm() + 1e-9 * scale * scale,
            "case {case}: trace pairing {tr_at} above the product bound"
        );

        // integrand bound: |tr(S·A·(t_A^B − I))| ≤ ‖S‖₂·Π(A,0)·Π(A,B)
        let mut sym = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = rng.gen_range(-1.0..1.0);
                sym[i * dim + j] = v;
                sym[j * dim + i] = v;
            }
        }
        let s = TangentVector::from_row_major(dim, &sym).unwrap();
        let lhs = a.m_inner(&s, &l).unwrap().abs();
        let rhs = s.spectral_norm().unwrap() * a.pi_norm() * dab;
        assert!(lhs <= rhs + 1e-9 * scale * scale, "case {case}: pairing {lhs} above {rhs}");

        // log/exp round trip, entrywise
        let back = a.exp_map(&l).unwrap();
        let gap = back.mat().sub(b.mat()).max_abs();
        assert!(
            gap <= 1e-8 * (1.0 + b.mat().max_abs()),
            "case {case}: round trip off by {gap:e}"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 10: PASS — 10000 randomized geometry cases (axioms, norm \
         equivalence, trace bounds, round trips) in {elapsed:.1?}"
    );
}
