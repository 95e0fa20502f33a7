//! Harness configuration file (TOML).
//!
//! The parsed struct is also what gets echoed next to the results, so a run
//! can be reproduced from its own output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::battery::BatteryParams;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, P0Choice, Variant};
use crate::linalg::{Matrix2, Matrix4, Vector4};
use crate::profiles::CurrentProfile;
use crate::scenario::{Case, FaultPair, MismatchSpec, Scenario};
use crate::state::{NoiseSpec, StateVector};

/// The shipped default configuration.
pub const PAPER_DEFAULT: &str = include_str!("../configs/paper_default.toml");

/// A square matrix given as a scalar (times identity), a diagonal, or rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn resolve<const N: usize>(&self, what: &str) -> Result<nalgebra::SMatrix<f64, N, N>> {
        let mut m = nalgebra::SMatrix::<f64, N, N>::zeros();
        match self {
            MatrixSpec::Scalar(s) => m.fill_diagonal(*s),
            MatrixSpec::Diagonal(d) => {
                if d.len() != N {
                    return Err(Error::config(format!(
                        "{what}: expected {N} diagonal entries, got {}",
                        d.len()
                    )));
                }
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] = *v;
                }
            }
            MatrixSpec::Full(rows) => {
                if rows.len() != N || rows.iter().any(|r| r.len() != N) {
                    return Err(Error::config(format!("{what}: expected a {N}x{N} matrix")));
                }
                for (i, row) in rows.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        m[(i, j)] = *v;
                    }
                }
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{what}: entries must be finite")));
        }
        Ok(m)
    }
}

/// A vector given as one value for every entry, or as a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    List(Vec<f64>),
}

impl VectorSpec {
    fn resolve(&self, what: &str) -> Result<Vector4> {
        match self {
            VectorSpec::Scalar(s) => Ok(Vector4::repeat(*s)),
            VectorSpec::List(v) if v.len() == 4 => Ok(Vector4::from_column_slice(v)),
            VectorSpec::List(v) => Err(Error::config(format!("{what}: expected 4 entries, got {}", v.len()))),
        }
    }
}

/// `"paper"`, `"identity"` or an explicit matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum P0Spec {
    Named(String),
    Matrix(MatrixSpec),
}

impl P0Spec {
    fn resolve(&self, what: &str) -> Result<P0Choice> {
        match self {
            P0Spec::Named(n) if n == "paper" => Ok(P0Choice::Paper),
            P0Spec::Named(n) if n == "identity" => Ok(P0Choice::Identity),
            P0Spec::Named(n) => Err(Error::config(format!(
                "{what}: unknown p0 '{n}' (expected \"paper\", \"identity\" or a matrix)"
            ))),
            P0Spec::Matrix(m) => Ok(P0Choice::Custom(m.resolve::<4>(what)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    pub r_e: f64,
    pub r_c: f64,
    pub r_t: f64,
    pub c_b: f64,
    pub c_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Truth process noise. Only the voltage block is used.
    #[serde(default = "zero_matrix")]
    pub process: MatrixSpec,
    #[serde(default = "zero_matrix")]
    pub measurement: MatrixSpec,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            process: zero_matrix(),
            measurement: zero_matrix(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchSection {
    #[serde(default = "default_resistance_bias")]
    pub resistance_bias: [f64; 3],
    #[serde(default = "default_capacitance_bias")]
    pub capacitance_bias: [f64; 2],
}

impl Default for MismatchSection {
    fn default() -> Self {
        Self {
            resistance_bias: default_resistance_bias(),
            capacitance_bias: default_capacitance_bias(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_t_s")]
    pub t_s: f64,
    pub initial_voltages: [f64; 2],
    pub battery: BatterySection,
    pub current: CurrentProfile,
    #[serde(default)]
    pub faults: FaultPair,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub mismatch: MismatchSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkfSection {
    #[serde(default = "paper_p0")]
    pub p0: P0Spec,
}

impl Default for EkfSection {
    fn default() -> Self {
        Self { p0: paper_p0() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfSection {
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_resample_threshold")]
    pub resample_threshold: f64,
    #[serde(default = "identity_p0")]
    pub p0: P0Spec,
}

impl Default for PfSection {
    fn default() -> Self {
        Self {
            particles: default_particles(),
            resample_threshold: default_resample_threshold(),
            p0: identity_p0(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QkfSection {
    #[serde(default = "default_points")]
    pub points_per_dim: usize,
    #[serde(default = "identity_p0")]
    pub p0: P0Spec,
}

impl Default for QkfSection {
    fn default() -> Self {
        Self {
            points_per_dim: default_points(),
            p0: identity_p0(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvsfSection {
    #[serde(default = "default_gamma")]
    pub gamma: VectorSpec,
    #[serde(default = "default_psi")]
    pub psi: VectorSpec,
    /// Skip a reciprocal-capacitance pseudo-measurement when its drive voltage
    /// is at most this many volts.
    #[serde(default = "default_min_drive")]
    pub pseudo_min_drive: f64,
    #[serde(default = "default_error_bound")]
    pub error_bound: f64,
    #[serde(default = "default_dwell")]
    pub dwell_steps: usize,
}

impl Default for SvsfSection {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            psi: default_psi(),
            pseudo_min_drive: default_min_drive(),
            error_bound: default_error_bound(),
            dwell_steps: default_dwell(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default = "identity_matrix")]
    pub q: MatrixSpec,
    #[serde(default = "identity_matrix")]
    pub r: MatrixSpec,
    /// Added to the true initial voltages to form every filter's initial guess.
    #[serde(default)]
    pub initial_voltage_offset: [f64; 2],
    #[serde(default)]
    pub ekf: EkfSection,
    #[serde(default)]
    pub pf: PfSection,
    #[serde(default)]
    pub qkf: QkfSection,
    #[serde(default)]
    pub svsf: SvsfSection,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            q: identity_matrix(),
            r: identity_matrix(),
            initial_voltage_offset: [0.0; 2],
            ekf: EkfSection::default(),
            pf: PfSection::default(),
            qkf: QkfSection::default(),
            svsf: SvsfSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub monte_carlo_runs: usize,
    #[serde(default = "all_cases")]
    pub cases: Vec<Case>,
    #[serde(default = "all_filters")]
    pub filters: Vec<Variant>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Run the filters of one case on separate threads. Timing is less
    /// meaningful when they compete for cores.
    #[serde(default)]
    pub parallel: bool,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub estimators: EstimatorSection,
}

impl HarnessConfig {
    pub fn paper_default() -> Self {
        Self::from_toml_str(PAPER_DEFAULT, Path::new("<paper_default>")).expect("shipped config parses")
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|source| Error::ConfigParse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.monte_carlo_runs == 0 {
            return Err(Error::config("monte_carlo_runs must be positive"));
        }
        if self.cases.is_empty() || self.filters.is_empty() {
            return Err(Error::config("at least one case and one filter are required"));
        }
        let scenario = self.scenario(0)?;
        scenario.validate()?;
        let initial = StateVector::from_capacitances(0.0, 0.0, 1.0, 1.0);
        for v in Variant::ALL {
            self.estimator_config(v, initial, 0)?.validate()?;
        }
        Ok(())
    }

    /// The scenario with the given truth-noise seed. The mismatch is disabled;
    /// use [`HarnessConfig::scenario_for`] to apply a case.
    pub fn scenario(&self, truth_seed: u64) -> Result<Scenario> {
        let s = &self.scenario;
        let b = &s.battery;
        Ok(Scenario {
            duration: s.duration,
            t_s: s.t_s,
            current: s.current.clone(),
            true_params: BatteryParams {
                r_e: b.r_e,
                r_c: b.r_c,
                r_t: b.r_t,
                c_b: b.c_b,
                c_c: b.c_c,
                t_s: s.t_s,
            },
            faults: s.faults.clone(),
            noise: NoiseSpec {
                process_cov: s.noise.process.resolve::<4>("scenario.noise.process")?,
                measurement_cov: s.noise.measurement.resolve::<2>("scenario.noise.measurement")?,
                seed: truth_seed,
            },
            mismatch: MismatchSpec {
                enabled: false,
                resistance_bias: s.mismatch.resistance_bias,
                capacitance_bias: s.mismatch.capacitance_bias,
            },
            initial_true_state: (s.initial_voltages[0], s.initial_voltages[1]),
        })
    }

    pub fn scenario_for(&self, case: Case, truth_seed: u64) -> Result<Scenario> {
        let mut s = self.scenario(truth_seed)?;
        s.mismatch.enabled = case == Case::WithModelError;
        Ok(s)
    }

    /// Settings for one filter, starting from `initial_state`.
    pub fn estimator_config(&self, variant: Variant, initial_state: StateVector, seed: u64) -> Result<EstimatorConfig> {
        let e = &self.estimators;
        let p0 = match variant {
            Variant::Ekf => e.ekf.p0.resolve("estimators.ekf.p0")?,
            Variant::Pf => e.pf.p0.resolve("estimators.pf.p0")?,
            Variant::Qkf => e.qkf.p0.resolve("estimators.qkf.p0")?,
            Variant::Svsf => P0Choice::Identity,
        };
        let q: Matrix4 = e.q.resolve("estimators.q")?;
        let r: Matrix2 = e.r.resolve("estimators.r")?;
        Ok(EstimatorConfig {
            variant,
            initial_state,
            initial_cov: p0.matrix(),
            q,
            r,
            pf_particle_count: e.pf.particles,
            pf_resample_threshold: e.pf.resample_threshold,
            qkf_points_per_dim: e.qkf.points_per_dim,
            svsf_gamma: e.svsf.gamma.resolve("estimators.svsf.gamma")?,
            svsf_psi: e.svsf.psi.resolve("estimators.svsf.psi")?,
            svsf_pseudo_min_drive: e.svsf.pseudo_min_drive,
            svsf_error_bound: e.svsf.error_bound,
            svsf_dwell_steps: e.svsf.dwell_steps,
            seed,
        })
    }
}

fn zero_matrix() -> MatrixSpec {
    MatrixSpec::Scalar(0.0)
}
fn identity_matrix() -> MatrixSpec {
    MatrixSpec::Scalar(1.0)
}
fn paper_p0() -> P0Spec {
    P0Spec::Named("paper".into())
}
fn identity_p0() -> P0Spec {
    P0Spec::Named("identity".into())
}
fn default_resistance_bias() -> [f64; 3] {
    [1.2; 3]
}
fn default_capacitance_bias() -> [f64; 2] {
    [2.0; 2]
}
fn default_duration() -> f64 {
    60.0
}
fn default_t_s() -> f64 {
    0.01
}
fn default_particles() -> usize {
    500
}
fn default_resample_threshold() -> f64 {
    0.5
}
fn default_points() -> usize {
    3
}
fn default_gamma() -> VectorSpec {
    VectorSpec::Scalar(0.4)
}
fn default_psi() -> VectorSpec {
    VectorSpec::List(vec![1e-3, 1e-3, 1e-2, 1e-2])
}
fn default_min_drive() -> f64 {
    1e-3
}
fn default_error_bound() -> f64 {
    1e3
}
fn default_dwell() -> usize {
    50
}
fn one() -> usize {
    1
}
fn all_cases() -> Vec<Case> {
    Case::ALL.to_vec()
}
fn all_filters() -> Vec<Variant> {
    Variant::ALL.to_vec()
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_default_parses_and_roundtrips() {
        let cfg = HarnessConfig::paper_default();
        assert_eq!(cfg.estimators.pf.particles, 500);
        assert_eq!(cfg.estimators.qkf.points_per_dim, 3);
        assert_eq!(cfg.scenario.t_s, 0.01);
        let again = HarnessConfig::from_toml_str(&cfg.to_toml(), Path::new("echo")).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn matrix_forms() {
        let s: Matrix2 = MatrixSpec::Scalar(2.0).resolve::<2>("m").unwrap();
        assert_eq!(s, Matrix2::identity() * 2.0);
        let d: Matrix2 = MatrixSpec::Diagonal(vec![1.0, 3.0]).resolve::<2>("m").unwrap();
        assert_eq!(d, Matrix2::new(1.0, 0.0, 0.0, 3.0));
        let f: Matrix2 = MatrixSpec::Full(vec![vec![1.0, 2.0], vec![2.0, 5.0]])
            .resolve::<2>("m")
            .unwrap();
        assert_eq!(f[(1, 0)], 2.0);
        assert!(MatrixSpec::Diagonal(vec![1.0]).resolve::<2>("m").is_err());
    }

    #[test]
    fn p0_choices() {
        assert_eq!(P0Spec::Named("paper".into()).resolve("p0").unwrap(), P0Choice::Paper);
        assert!(P0Spec::Named("bogus".into()).resolve("p0").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{PAPER_DEFAULT}\nbogus = 1\n");
        assert!(matches!(
            HarnessConfig::from_toml_str(&text, Path::new("x")),
            Err(Error::ConfigParse { .. })
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = HarnessConfig::paper_default();
        cfg.estimators.qkf.points_per_dim = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = HarnessConfig::paper_default();
        cfg.monte_carlo_runs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = HarnessConfig::paper_default();
        cfg.scenario.battery.c_b = -1.0;
        assert!(cfg.validate().is_err());
    }
}
