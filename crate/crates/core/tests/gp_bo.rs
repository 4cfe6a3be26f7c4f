use esnlab_core::hpo::{bayesian_optimize, gp_fit, BoConfig, Dimension, GpSurrogate, Matern52, Point, SearchSpace};
use esnlab_core::seed;
use proptest::prelude::*;
use rand::Rng;
use std::convert::Infallible;

fn matern(r: f64, l: f64, s2: f64) -> f64 {
    let a = 5f64.sqrt() * r / l;
    s2 * (1.0 + a + a * a / 3.0) * (-a).exp()
}

const KERNEL: Matern52 = Matern52 {
    length_scales: [0.4, 0.4],
    signal_var: 1.7,
};

#[test]
fn one_point_posterior_is_closed_form() {
    let x1 = [0.2, 0.3];
    let y1 = 0.8;
    let gp = GpSurrogate::with_kernel(&[x1], &[y1], KERNEL, false).unwrap();
    let s = KERNEL.signal_var + gp.jitter();
    for q in [[0.2, 0.3], [0.5, 0.5], [0.9, 0.1], [0.25, 0.35]] {
        let r = ((q[0] - x1[0]).powi(2) + (q[1] - x1[1]).powi(2)).sqrt();
        let k = matern(r, 0.4, 1.7);
        let mean = k * y1 / s;
        let var = 1.7 - k * k / s;
        let (m, sd) = gp.posterior(&q);
        assert!((m - mean).abs() < 1e-10, "mean at {q:?}");
        assert!((sd - var.max(0.0).sqrt()).abs() < 1e-10, "sd at {q:?}");
    }
}

#[test]
fn two_point_posterior_is_closed_form() {
    let (x1, x2) = ([0.1, 0.1], [0.6, 0.4]);
    let (y1, y2) = (-0.3, 1.1);
    let gp = GpSurrogate::with_kernel(&[x1, x2], &[y1, y2], KERNEL, false).unwrap();
    let d = |a: Point, b: Point| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let a = 1.7 + gp.jitter();
    let b = matern(d(x1, x2), 0.4, 1.7);
    let det = a * a - b * b;
    // inverse of [[a, b], [b, a]]
    let inv = [[a / det, -b / det], [-b / det, a / det]];
    for q in [[0.3, 0.2], [0.0, 1.0], [0.6, 0.4]] {
        let k = [matern(d(q, x1), 0.4, 1.7), matern(d(q, x2), 0.4, 1.7)];
        let w = [inv[0][0] * k[0] + inv[0][1] * k[1], inv[1][0] * k[0] + inv[1][1] * k[1]];
        let mean = w[0] * y1 + w[1] * y2;
        let var = 1.7 - (w[0] * k[0] + w[1] * k[1]);
        let (m, sd) = gp.posterior(&q);
        assert!((m - mean).abs() < 1e-10, "mean at {q:?}: {m} vs {mean}");
        assert!((sd - var.max(0.0).sqrt()).abs() < 1e-10, "sd at {q:?}");
    }
}

#[test]
fn standardization_is_undone_in_predictions() {
    let x = [[0.1, 0.9], [0.5, 0.5], [0.8, 0.2]];
    let y = [100.0, 102.0, 99.0];
    let gp = GpSurrogate::with_kernel(&x, &y, KERNEL, true).unwrap();
    for (p, v) in x.iter().zip(y) {
        assert!((gp.posterior(p).0 - v).abs() < 1e-6);
    }
    // far from the data the mean reverts to the sample mean
    let far = GpSurrogate::with_kernel(&x, &y, Matern52 { length_scales: [0.01, 0.01], ..KERNEL }, true).unwrap();
    assert!((far.mean(&[0.3, 0.3]) - 301.0 / 3.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_posterior_interpolates(seed in 0u64..1000, n in 2usize..30) {
        let mut rng = seed::rng(seed);
        let mut x: Vec<Point> = Vec::new();
        while x.len() < n {
            let p = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            if x.iter().all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) > 0.05) {
                x.push(p);
            }
        }
        let y: Vec<f64> = x.iter().map(|p| (4.0 * p[0]).sin() * (3.0 * p[1]).cos() + p[0]).collect();
        let gp = gp_fit(&x, &y, seed).unwrap();
        for (p, v) in x.iter().zip(&y) {
            let (m, sd) = gp.posterior(p);
            prop_assert!((m - v).abs() < 1e-6, "residual {}", (m - v).abs());
            prop_assert!(sd < 1e-3);
        }
    }
}

fn planted(seed: u64) -> (SearchSpace, Point) {
    let space = SearchSpace::new([Dimension::linear(0.5, 5.0), Dimension::linear(0.1, 1.0)]).unwrap();
    let mut rng = seed::rng(seed::derive(seed, 99, 0));
    (space, [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
}

#[test]
fn bo_finds_planted_quadratic_minimum() {
    let runs = 10;
    let mut hits = 0;
    for s in 0..runs {
        let (space, target) = planted(s);
        let f = |p: Point| {
            let z = space.to_unit(p);
            Ok::<_, Infallible>((z[0] - target[0]).powi(2) + 2.0 * (z[1] - target[1]).powi(2))
        };
        let r = bayesian_optimize(f, &space, &BoConfig::default(), s).unwrap();
        assert_eq!(r.trace.len(), 49);
        let z = space.to_unit(r.best_point);
        if (z[0] - target[0]).hypot(z[1] - target[1]) <= 0.05 * 2f64.sqrt() {
            hits += 1;
        }
    }
    assert!(hits >= runs - 1, "{hits}/{runs} runs within 5% of the diagonal");
}

#[test]
fn bo_is_reproducible_for_a_seed() {
    let (space, target) = planted(5);
    let f = |p: Point| Ok::<_, Infallible>((space.to_unit(p)[0] - target[0]).abs() + space.to_unit(p)[1]);
    let cfg = BoConfig {
        n_acquire: 6,
        lattice: 30,
        ..BoConfig::default()
    };
    let a = bayesian_optimize(f, &space, &cfg, 8).unwrap();
    let b = bayesian_optimize(f, &space, &cfg, 8).unwrap();
    assert_eq!(a, b);
}
