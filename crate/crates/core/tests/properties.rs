//! Cross-module properties of the estimators and the clustering pipeline.

use std::f64::consts::PI;

use modalmatrix::density::amise;
use modalmatrix::rng::{stream, StreamRng};
use modalmatrix::{
    amise_bandwidth, cluster, fit, fowlkes_mallows, generate, ms_step, Dataset, EstimatorConfig, GenConfig,
    MatrixObs, MeanShiftConfig, Partition, Setting,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn normal_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> MatrixObs {
    MatrixObs::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect(),
    )
    .unwrap()
}

fn two_groups(rng: &mut StreamRng, n: usize, rows: usize, cols: usize) -> Dataset {
    let obs = (0..n)
        .map(|i| {
            let shift = if i % 2 == 0 { 0.0 } else { 6.0 };
            let x = normal_matrix(rng, rows, cols);
            MatrixObs::new(rows, cols, x.as_slice().iter().map(|v| v + shift).collect()).unwrap()
        })
        .collect();
    Dataset::new(obs).unwrap()
}

fn matmul(a: &[f64], b: &[f64], n: usize, m: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i * p + j] += a[i * m + k] * b[k * p + j];
            }
        }
    }
    out
}

fn fd_grad_log(est: &modalmatrix::FittedEstimator<'_>, y: &MatrixObs, eps: f64) -> Vec<f64> {
    (0..y.dim())
        .map(|i| {
            let mut up = y.as_slice().to_vec();
            let mut dn = up.clone();
            up[i] += eps;
            dn[i] -= eps;
            let f = |v: Vec<f64>| {
                est.log_density_at(&MatrixObs::new(y.rows(), y.cols(), v).unwrap())
                    .unwrap()
            };
            (f(up) - f(dn)) / (2.0 * eps)
        })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

#[test]
fn separable_step_is_preconditioned_gradient() {
    let mut rng = stream(21);
    let data = two_groups(&mut rng, 30, 2, 3);
    let u = vec![1.5, 0.4, 0.4, 0.8];
    let v = vec![1.0, 0.2, 0.0, 0.2, 2.0, 0.3, 0.0, 0.3, 0.7];
    let config = EstimatorConfig::separable(
        MatrixObs::new(2, 2, u.clone()).unwrap(),
        MatrixObs::new(3, 3, v.clone()).unwrap(),
    );
    let est = fit(&config, &data).unwrap();
    for _ in 0..20 {
        let y = data
            .get(rng.random_range(0..30))
            .add(&normal_matrix(&mut rng, 2, 3))
            .unwrap();
        let shift = ms_step(&est, &y).unwrap().sub(&y).unwrap();
        // grad log f = U^-1 M V^-1 up to a positive factor, so U grad V is parallel to M
        let g = fd_grad_log(&est, &y, 1e-5);
        let ugv = matmul(&matmul(&u, &g, 2, 2, 3), &v, 2, 3, 3);
        let c = cosine(shift.as_slice(), &ugv);
        assert!(c > 1.0 - 1e-6, "cosine {c}");
    }
}

#[test]
fn clustering_is_permutation_invariant() {
    let mut rng = stream(22);
    let data = two_groups(&mut rng, 60, 2, 2);
    let mut perm: Vec<usize> = (0..60).collect();
    perm.shuffle(&mut rng);
    let permuted = Dataset::new(perm.iter().map(|&i| data.get(i).clone()).collect()).unwrap();
    let ms = MeanShiftConfig::default();
    for config in [
        EstimatorConfig::fixed(0.8),
        EstimatorConfig::balloon(8),
        EstimatorConfig::sample_point(8, 0.6),
    ] {
        let a = cluster(&data, &config, &ms).unwrap();
        let b = cluster(&permuted, &config, &ms).unwrap();
        let a_perm: Vec<usize> = perm.iter().map(|&i| a.labels[i]).collect();
        let fm = fowlkes_mallows(&Partition::from(a_perm), &Partition::from(b.labels.clone())).unwrap();
        assert_eq!(fm, 1.0, "{config:?}");
        assert_eq!(a.n_clusters(), b.n_clusters());
    }
}

#[test]
fn clustering_is_translation_equivariant() {
    let mut rng = stream(23);
    let data = two_groups(&mut rng, 50, 3, 2);
    let c = normal_matrix(&mut rng, 3, 2).scale(5.0);
    let moved = Dataset::new(data.iter().map(|x| x.add(&c).unwrap()).collect()).unwrap();
    let ms = MeanShiftConfig::default();
    let tight = MeanShiftConfig {
        tol: 1e-13,
        max_iter: 20_000,
        ..ms
    };
    for config in [
        EstimatorConfig::fixed(0.9),
        EstimatorConfig::balloon(7),
        EstimatorConfig::sample_point(7, 0.5),
    ] {
        let a = cluster(&data, &config, &ms).unwrap();
        let b = cluster(&moved, &config, &ms).unwrap();
        assert_eq!(a.labels, b.labels, "{config:?}");
        // modes are located only to the ascent tolerance; compare them tightly converged
        let a = cluster(&data, &config, &tight).unwrap();
        let b = cluster(&moved, &config, &tight).unwrap();
        assert_eq!(a.labels, b.labels, "{config:?}");
        for (ma, mb) in a.modes.iter().zip(&b.modes) {
            let diff = mb.sub(ma).unwrap().sub(&c).unwrap();
            assert!(diff.frobenius_norm() < 1e-8, "{config:?}: {diff:?}");
        }
    }
}

/// Exact MISE of a Gaussian-kernel KDE for a standard normal target.
fn exact_mise(n: usize, h: f64) -> f64 {
    let n = n as f64;
    (1.0 / (n * h) + (1.0 - 1.0 / n) / (1.0 + h * h).sqrt() - 2.0 * 2f64.sqrt() / (2.0 + h * h).sqrt() + 1.0)
        / (2.0 * PI.sqrt())
}

#[test]
fn mise_monte_carlo_matches_exact_and_amise_converges() {
    let (n, reps) = (50, 200);
    let rk = 1.0 / (2.0 * PI.sqrt());
    let rlap = 3.0 / (8.0 * PI.sqrt());
    let h = amise_bandwidth(n, 1, rk, 1.0, rlap).unwrap();
    let mut rng = stream(24);
    let step = 0.01;
    let grid: Vec<f64> = (0..=1600).map(|i| -8.0 + i as f64 * step).collect();
    let mut total = 0.0;
    for _ in 0..reps {
        let values: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let data = Dataset::from_scalars(&values).unwrap();
        let est = fit(&EstimatorConfig::fixed(h), &data).unwrap();
        let ise: f64 = grid
            .iter()
            .map(|&x| {
                let truth = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
                (est.density_at(&MatrixObs::scalar(x)).unwrap() - truth).powi(2)
            })
            .sum::<f64>()
            * step;
        total += ise;
    }
    let empirical = total / reps as f64;
    let exact = exact_mise(n, h);
    assert!(
        (empirical / exact - 1.0).abs() < 0.25,
        "empirical {empirical} exact {exact}"
    );
    // The asymptotic form overstates the finite-sample risk at N=50 and
    // closes the gap as N grows.
    let ratio = |n: usize| {
        let h = amise_bandwidth(n, 1, rk, 1.0, rlap).unwrap();
        exact_mise(n, h) / amise(h, n, 1, rk, 1.0, rlap)
    };
    let ratios: Vec<f64> = [50, 1_000, 100_000, 10_000_000]
        .iter()
        .map(|&n| ratio(n))
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    assert!((ratios[3] - 1.0).abs() < 0.05, "{ratios:?}");
}

#[test]
fn balanced_preset_end_to_end() {
    let cfg = GenConfig::from_setting(Setting::TwoBalanced, 5, 5, 200, 1.0, 1.0, 77).unwrap();
    let g = generate(&cfg).unwrap();
    let k = modalmatrix::choose_k(modalmatrix::KRule::Five, 200);
    let res = cluster(&g.data, &EstimatorConfig::balloon(k), &MeanShiftConfig::default()).unwrap();
    let fm = fowlkes_mallows(&Partition::from(res.labels), &Partition::from(g.labels)).unwrap();
    assert!(fm >= 0.95, "FM {fm}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fixed_ascent_never_decreases_density(seed in 0u64..10_000, h in 0.3f64..2.0, d in 1usize..=25) {
        let mut rng = stream(seed);
        let data = two_groups(&mut rng, 25, 1, d);
        let est = fit(&EstimatorConfig::fixed(h), &data).unwrap();
        let mut y = normal_matrix(&mut rng, 1, d).scale(3.0);
        let mut current = est.log_density_at(&y).unwrap();
        for _ in 0..30 {
            y = ms_step(&est, &y).unwrap();
            let next = est.log_density_at(&y).unwrap();
            prop_assert!(next >= current - 1e-10, "{current} -> {next}");
            current = next;
        }
    }

    #[test]
    fn translation_shifts_density_surface(seed in 0u64..10_000, shift in -50.0f64..50.0) {
        let mut rng = stream(seed);
        let data = two_groups(&mut rng, 12, 2, 2);
        let c = MatrixObs::filled(2, 2, shift);
        let moved = Dataset::new(data.iter().map(|x| x.add(&c).unwrap()).collect()).unwrap();
        let q = normal_matrix(&mut rng, 2, 2);
        for config in [EstimatorConfig::fixed(0.7), EstimatorConfig::sample_point(3, 0.9), EstimatorConfig::balloon(4)] {
            let a = fit(&config, &data).unwrap().log_density_at(&q).unwrap();
            let b = fit(&config, &moved).unwrap().log_density_at(&q.add(&c).unwrap()).unwrap();
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
