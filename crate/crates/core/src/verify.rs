//! Quick self-checks on small instances, for the `verify` subcommand.

use crate::battery::{jacobian, process_model, Resistances};
use crate::config::HarnessConfig;
use crate::estimators::{
    ekf_predict, ekf_update, gauss_hermite_rule, qkf_measurement_update, qkf_time_update, Gaussian, LinearModel,
    QuadratureRule,
};
use crate::linalg::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use crate::metrics::{rmse, RmseFormula};
use crate::rng::NoiseRng;
use crate::scenario::simulate_truth;
use crate::state::StateVector;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run_all() -> Vec<Check> {
    vec![
        jacobian_matches_differences(),
        gauss_hermite_moments(),
        quadrature_matches_kalman(),
        rmse_formulas(),
        truth_is_reproducible(),
    ]
}

fn jacobian_matches_differences() -> Check {
    let resist = Resistances {
        r_e: 0.012,
        r_c: 0.008,
        r_t: 0.015,
    };
    let mut rng = NoiseRng::from_seed(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = StateVector::new(
            3.0 + rng.uniform(),
            3.0 + rng.uniform(),
            0.01 + 0.1 * rng.uniform(),
            0.05 + 0.2 * rng.uniform(),
        );
        let i_s = 40.0 * rng.uniform() - 20.0;
        let Ok(j) = jacobian(&x, i_s, &resist, 0.01) else {
            return check("jacobian", false, "jacobian rejected a valid state".into());
        };
        for col in 0..4 {
            let h = 1e-6 * x.to_vector()[col].abs().max(1e-3);
            let mut up = x.to_vector();
            let mut down = x.to_vector();
            up[col] += h;
            down[col] -= h;
            let fu = process_model(&StateVector::from_vector(&up), i_s, &resist, 0.01).map(|s| s.to_vector());
            let fd = process_model(&StateVector::from_vector(&down), i_s, &resist, 0.01).map(|s| s.to_vector());
            let (Ok(fu), Ok(fd)) = (fu, fd) else {
                return check("jacobian", false, "process model rejected a perturbed state".into());
            };
            let fdiff = (fu - fd) / (2.0 * h);
            for row in 0..4 {
                let err = (j[(row, col)] - fdiff[row]).abs() / j[(row, col)].abs().max(1.0);
                worst = worst.max(err);
            }
        }
    }
    check("jacobian", worst < 1e-5, format!("max relative error {worst:.2e}"))
}

fn gauss_hermite_moments() -> Check {
    let rule = match gauss_hermite_rule(3, 1) {
        Ok(r) => r,
        Err(e) => return check("gauss-hermite", false, e.to_string()),
    };
    let exact = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0];
    let mut worst: f64 = 0.0;
    for (p, m) in exact.iter().enumerate() {
        let q: f64 = (0..rule.len())
            .map(|l| rule.weights[l] * rule.point(l)[0].powi(p as i32))
            .sum();
        worst = worst.max((q - m).abs());
    }
    let count = gauss_hermite_rule(3, 4).map(|r| r.len()).unwrap_or(0);
    check(
        "gauss-hermite",
        worst < 1e-12 && count == 81,
        format!("moment error {worst:.2e}, {count} points in 4-d"),
    )
}

fn quadrature_matches_kalman() -> Check {
    let model = LinearModel::<4, 2> {
        a: Matrix4::new(
            0.95, 0.05, 0.0, 0.0, 0.02, 0.9, 0.01, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ),
        b: Vector4::new(0.1, 0.05, 0.0, 0.0),
        c: Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
    };
    let rule = match gauss_hermite_rule(3, 4).and_then(|s| QuadratureRule::<4>::from_set(&s)) {
        Ok(r) => r,
        Err(e) => return check("qkf-vs-kf", false, e.to_string()),
    };
    let q = Matrix4::identity() * 0.01;
    let r = Matrix2::identity() * 0.1;
    let mut a = Gaussian::new(Vector4::new(1.0, 0.5, 0.2, 0.1), Matrix4::identity());
    let mut b = a;
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let z = Vector2::new((k as f64 * 0.1).sin(), (k as f64 * 0.07).cos());
        let step = qkf_time_update(&a, 1.0, &rule, &model, &q)
            .and_then(|p| qkf_measurement_update(&p, &z, &rule, &model, &r))
            .map(|(g, _)| g);
        let reference = ekf_predict(&b, 1.0, &model, &q)
            .and_then(|p| ekf_update(&p, &z, &model, &r))
            .map(|(g, _)| g);
        let (Ok(na), Ok(nb)) = (step, reference) else {
            return check("qkf-vs-kf", false, "update failed".into());
        };
        a = na;
        b = nb;
        worst = worst.max((a.mean - b.mean).amax()).max((a.cov - b.cov).amax());
    }
    check("qkf-vs-kf", worst < 1e-8, format!("max difference {worst:.2e}"))
}

fn rmse_formulas() -> Check {
    let truth = [0.0; 4];
    let est = [2.0; 4];
    let paper = rmse(&truth, &est, RmseFormula::Paper).unwrap_or(f64::NAN);
    let conv = rmse(&truth, &est, RmseFormula::Conventional).unwrap_or(f64::NAN);
    check(
        "rmse",
        paper == 1.0 && conv == 2.0,
        format!("paper {paper}, conventional {conv}"),
    )
}

fn truth_is_reproducible() -> Check {
    let mut cfg = HarnessConfig::paper_default();
    cfg.scenario.duration = 2.0;
    let a = cfg.scenario(7).and_then(|s| simulate_truth(&s));
    let b = cfg.scenario(7).and_then(|s| simulate_truth(&s));
    match (a, b) {
        (Ok(a), Ok(b)) => check("truth-determinism", a == b, format!("{} samples", a.len())),
        (Err(e), _) | (_, Err(e)) => check("truth-determinism", false, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
