mod common;

use battmon::estimators::{gauss_hermite_rule, ExtendedKalmanFilter, Gaussian, LinearModel};
use battmon::Filter;
use common::crosscheck::{ekf_gap, qkf_gap, scalar_pf_gap};
use common::normal_moment;
use nalgebra::{Matrix1, Vector1};

#[test]
fn ekf_equals_reference_kalman_filter() {
    let gap = ekf_gap(100);
    assert!(gap <= 1e-10, "{gap:e}");
}

#[test]
fn qkf_equals_reference_kalman_filter() {
    let gap = qkf_gap(100);
    assert!(gap <= 1e-8, "{gap:e}");
}

#[test]
fn static_scalar_variance_is_harmonic() {
    // Constant state, unit noise: after k measurements the variance is 1/(k+1).
    let model = LinearModel::<1, 1> {
        a: Matrix1::new(1.0),
        b: Vector1::new(0.0),
        c: Matrix1::new(1.0),
    };
    let mut ekf = ExtendedKalmanFilter::new(
        model,
        Gaussian::new(Vector1::new(0.0), Matrix1::new(1.0)),
        Matrix1::new(0.0),
        Matrix1::new(1.0),
    );
    let mut sum = 0.0;
    for k in 1..=50 {
        let z = (k as f64).sin();
        sum += z;
        let out = ekf.step(0.0, &Vector1::new(z)).unwrap();
        let p = out.cov.unwrap()[(0, 0)];
        assert!((p - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
        // The mean is the running average with the prior counted as one sample at 0.
        assert!((out.state[0] - sum / (k as f64 + 1.0)).abs() < 1e-13);
    }
}

#[test]
fn gauss_hermite_matches_normal_moments() {
    for m in [3, 5] {
        let rule = gauss_hermite_rule(m, 1).unwrap();
        assert_eq!(rule.len(), m);
        for p in 0..(2 * m as u32) {
            let q: f64 = (0..rule.len())
                .map(|l| rule.weights[l] * rule.point(l)[0].powi(p as i32))
                .sum();
            let exact = normal_moment(p);
            assert!(
                (q - exact).abs() <= 1e-10 * exact.max(1.0),
                "m={m} p={p}: {q} vs {exact}"
            );
        }
    }
}

#[test]
fn tensor_rule_integrates_cross_moments() {
    let rule = gauss_hermite_rule(3, 4).unwrap();
    assert_eq!(rule.len(), 81);
    // E[x0^2 x1^2 x2^4] = 1 * 1 * 3, E[x0 x3^3] = 0.
    let a: f64 = (0..81)
        .map(|l| {
            let x = rule.point(l);
            rule.weights[l] * x[0].powi(2) * x[1].powi(2) * x[2].powi(4)
        })
        .sum();
    let b: f64 = (0..81)
        .map(|l| {
            let x = rule.point(l);
            rule.weights[l] * x[0] * x[3].powi(3)
        })
        .sum();
    assert!((a - 3.0).abs() < 1e-12);
    assert!(b.abs() < 1e-12);
}

#[test]
fn particle_filter_tracks_kalman_mean() {
    for seed in [1, 2, 3] {
        let gap = scalar_pf_gap(10_000, 500, seed);
        assert!(gap <= 0.1, "seed {seed}: {gap}");
    }
}

#[test]
fn particle_filter_is_seeded() {
    assert_eq!(scalar_pf_gap(200, 50, 9), scalar_pf_gap(200, 50, 9));
    assert_ne!(scalar_pf_gap(200, 50, 9), scalar_pf_gap(200, 50, 10));
}

#[test]
fn unsupported_orders_are_rejected() {
    assert!(gauss_hermite_rule(4, 2).is_err());
    assert!(gauss_hermite_rule(3, 0).is_err());
}
