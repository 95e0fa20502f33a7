//! Drivers that run library filters side by side with the oracles.

use battmon::estimators::{
    gauss_hermite_rule, ExtendedKalmanFilter, Gaussian, LinearModel, ParticleFilter, QuadratureKalmanFilter,
    QuadratureRule,
};
use battmon::Filter;
use nalgebra::{DMatrix, DVector, Matrix1, SMatrix, SVector, Vector1};

use super::{linear_measurements, linear_system, ReferenceKf, TestRng};

fn fixed<const R: usize, const C: usize>(m: &DMatrix<f64>) -> SMatrix<f64, R, C> {
    SMatrix::from_fn(|i, j| m[(i, j)])
}

fn fixed_vec<const N: usize>(v: &DVector<f64>) -> SVector<f64, N> {
    SVector::from_fn(|i, _| v[i])
}

fn model_of(kf: &ReferenceKf) -> LinearModel<4, 2> {
    LinearModel {
        a: fixed(&kf.a),
        b: fixed_vec(&kf.b),
        c: fixed(&kf.c),
    }
}

fn initial_of(kf: &ReferenceKf) -> Gaussian<4> {
    Gaussian::new(fixed_vec(&kf.x), fixed(&kf.p))
}

/// Worst absolute difference in mean and covariance against the reference
/// filter over `steps` steps.
pub fn worst_gap(filter: &mut dyn Filter<4, 2>, steps: usize) -> f64 {
    let mut reference = linear_system();
    let mut worst: f64 = 0.0;
    for (u, z) in linear_measurements(steps, 42) {
        let out = filter.step(u, &fixed_vec(&z)).unwrap();
        reference.step(u, &z);
        let dx = (out.state - fixed_vec::<4>(&reference.x)).amax();
        let dp = (out.cov.unwrap() - fixed::<4, 4>(&reference.p)).amax();
        worst = worst.max(dx).max(dp);
    }
    worst
}

pub fn ekf_gap(steps: usize) -> f64 {
    let sys = linear_system();
    let mut ekf = ExtendedKalmanFilter::new(model_of(&sys), initial_of(&sys), fixed(&sys.q), fixed(&sys.r));
    worst_gap(&mut ekf, steps)
}

pub fn qkf_gap(steps: usize) -> f64 {
    let sys = linear_system();
    let rule = QuadratureRule::from_set(&gauss_hermite_rule(3, 4).unwrap()).unwrap();
    let mut qkf = QuadratureKalmanFilter::new(model_of(&sys), rule, initial_of(&sys), fixed(&sys.q), fixed(&sys.r));
    worst_gap(&mut qkf, steps)
}

/// Time-averaged `|pf - kf| / sigma_kf` on a scalar linear-Gaussian system.
pub fn scalar_pf_gap(particles: usize, steps: usize, seed: u64) -> f64 {
    let (a, q, r) = (0.9, 0.5, 1.0);
    let model = LinearModel::<1, 1> {
        a: Matrix1::new(a),
        b: Vector1::new(1.0),
        c: Matrix1::new(1.0),
    };
    let init = Gaussian::new(Vector1::new(0.0), Matrix1::new(1.0));
    let mut pf = ParticleFilter::new(model, &init, particles, &Matrix1::new(q), &Matrix1::new(r), 0.5, seed).unwrap();
    let mut kf = ReferenceKf {
        a: DMatrix::from_element(1, 1, a),
        b: DVector::from_element(1, 1.0),
        c: DMatrix::from_element(1, 1, 1.0),
        q: DMatrix::from_element(1, 1, q),
        r: DMatrix::from_element(1, 1, r),
        x: DVector::from_element(1, 0.0),
        p: DMatrix::from_element(1, 1, 1.0),
    };
    let mut rng = TestRng(seed ^ 0xABCD);
    let mut x = 0.0;
    let mut total = 0.0;
    for k in 0..steps {
        let u = 0.3 * (k as f64 * 0.1).sin();
        x = a * x + u + q.sqrt() * rng.normal();
        let z = x + r.sqrt() * rng.normal();
        let out = pf.step(u, &Vector1::new(z)).unwrap();
        kf.step(u, &DVector::from_element(1, z));
        total += (out.state[0] - kf.x[0]).abs() / kf.p[(0, 0)].sqrt();
    }
    total / steps as f64
}
