//! The four estimators behind one contract: construct from an initial belief,
//! then `step(input, measurement)` once per sample.

mod config;
pub mod ekf;
pub mod model;
pub mod pf;
pub mod qkf;
pub mod quadrature;
pub mod svsf;

use std::fmt;
use std::time::Instant;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{build_battery_estimator, EstimatorConfig, P0Choice};
pub use ekf::{ekf_predict, ekf_update, ExtendedKalmanFilter};
pub use model::{BatteryModel, ExtendedMeasurement, ExtendedObservation, LinearModel, StateSpaceModel};
pub use pf::{effective_sample_size, pf_step, systematic_resample, ParticleFilter, ParticleSet, PfNoise, PfStepReport};
pub use qkf::{qkf_measurement_update, qkf_time_update, QuadratureKalmanFilter, QuadratureRule};
pub use quadrature::{gauss_hermite_rule, QuadraturePointSet};
pub use svsf::{svsf_step, SmoothVariableStructureFilter, SvsfConfig, SvsfState};

/// Estimates whose max-norm exceeds this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ekf,
    Pf,
    Qkf,
    Svsf,
}

impl Variant {
    /// Fixed order, also the final tie-break when ranking.
    pub const ALL: [Variant; 4] = [Variant::Ekf, Variant::Pf, Variant::Qkf, Variant::Svsf];

    pub fn key(&self) -> &'static str {
        match self {
            Variant::Ekf => "ekf",
            Variant::Pf => "pf",
            Variant::Qkf => "qkf",
            Variant::Svsf => "svsf",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Variant::Ekf => "EKF",
            Variant::Pf => "PF",
            Variant::Qkf => "QKF",
            Variant::Svsf => "SVSF",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ekf" => Ok(Variant::Ekf),
            "pf" => Ok(Variant::Pf),
            "qkf" => Ok(Variant::Qkf),
            "svsf" => Ok(Variant::Svsf),
            other => Err(Error::config(format!(
                "unknown filter '{other}' (expected ekf, pf, qkf, svsf)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean and covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian<const N: usize> {
    pub mean: SVector<f64, N>,
    pub cov: SMatrix<f64, N, N>,
}

impl<const N: usize> Gaussian<N> {
    pub fn new(mean: SVector<f64, N>, cov: SMatrix<f64, N, N>) -> Self {
        Self { mean, cov }
    }
}

/// What a filter reports after one predict/update cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutput<const N: usize, const M: usize> {
    pub state: SVector<f64, N>,
    pub cov: Option<SMatrix<f64, N, N>>,
    pub innovation: SVector<f64, M>,
    /// The particle weights all vanished and were reset to uniform.
    pub weight_collapse: bool,
}

pub trait Filter<const N: usize, const M: usize>: Send {
    fn variant(&self) -> Variant;
    fn state(&self) -> SVector<f64, N>;
    fn covariance(&self) -> Option<SMatrix<f64, N, N>>;
    /// Predict with `input` (applied over the elapsed sample), then correct with `z`.
    fn step(&mut self, input: f64, z: &SVector<f64, M>) -> Result<StepOutput<N, M>>;
}

/// Per-step estimate as logged by the harness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<const N: usize, const M: usize> {
    pub state: SVector<f64, N>,
    pub cov: Option<SMatrix<f64, N, N>>,
    pub innovation: SVector<f64, M>,
    pub wall_time_ns: u64,
    pub diverged: bool,
    pub weight_collapse: bool,
}

fn is_sane<const N: usize>(x: &SVector<f64, N>) -> bool {
    x.iter().all(|v| v.is_finite()) && x.amax() <= DIVERGENCE_NORM
}

/// Wraps a filter with timing and divergence handling.
///
/// Once a step fails or produces a non-finite or oversized estimate the runner
/// latches the diverged flag, freezes the last good estimate and keeps
/// reporting it, so a run always yields one estimate per sample.
pub struct EstimatorRunner<const N: usize, const M: usize> {
    filter: Box<dyn Filter<N, M>>,
    last: Estimate<N, M>,
    diverged_reason: Option<String>,
}

impl<const N: usize, const M: usize> EstimatorRunner<N, M> {
    pub fn new(filter: Box<dyn Filter<N, M>>) -> Self {
        let last = Estimate {
            state: filter.state(),
            cov: filter.covariance(),
            innovation: SVector::zeros(),
            wall_time_ns: 0,
            diverged: false,
            weight_collapse: false,
        };
        Self {
            filter,
            last,
            diverged_reason: None,
        }
    }

    pub fn variant(&self) -> Variant {
        self.filter.variant()
    }

    pub fn initial_estimate(&self) -> Estimate<N, M> {
        self.last
    }

    pub fn diverged_reason(&self) -> Option<&str> {
        self.diverged_reason.as_deref()
    }

    /// One uniform predict+update step.
    pub fn step(&mut self, input: f64, z: &SVector<f64, M>) -> Estimate<N, M> {
        if self.diverged_reason.is_some() {
            return Estimate {
                wall_time_ns: 0,
                weight_collapse: false,
                ..self.last
            };
        }
        let start = Instant::now();
        let result = self.filter.step(input, z);
        let wall_time_ns = start.elapsed().as_nanos() as u64;

        let failure = match &result {
            Ok(out) if is_sane(&out.state) => None,
            Ok(_) => Some(Error::Diverged.to_string()),
            Err(e) => Some(e.to_string()),
        };
        match (result, failure) {
            (Ok(out), None) => {
                self.last = Estimate {
                    state: out.state,
                    cov: out.cov,
                    innovation: out.innovation,
                    wall_time_ns,
                    diverged: false,
                    weight_collapse: out.weight_collapse,
                };
            }
            (_, Some(reason)) => {
                self.diverged_reason = Some(reason);
                self.last.diverged = true;
                self.last.wall_time_ns = wall_time_ns;
                self.last.weight_collapse = false;
            }
            (Err(_), None) => unreachable!(),
        }
        self.last
    }
}
