//! State and parameter estimation for a two-capacitor battery model.
//!
//! Four estimators (EKF, particle filter, quadrature Kalman filter, SVSF) run
//! on a shared truth trajectory and are compared by RMSE and wall time.

pub mod battery;
pub mod config;
pub mod error;
pub mod estimators;
pub mod export;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod profiles;
pub mod rng;
pub mod scenario;
pub mod state;
pub mod verify;

pub use battery::{BatteryParams, Resistances};
pub use config::HarnessConfig;
pub use error::{Error, Result};
pub use estimators::{Filter, Variant};
pub use harness::{run_benchmark, RunResult};
pub use metrics::{rank_filters, rmse, RankTable, RmseFormula, RmseTable};
pub use scenario::{simulate_truth, Case, Scenario, TruthRecord};
pub use state::{Measurement, NoiseSpec, StateVector};
