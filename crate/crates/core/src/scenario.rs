//! Truth trajectories, noise injection and the filter-side model for the two
//! benchmark cases.

use serde::{Deserialize, Serialize};

use crate::battery::{discrete_step, output_voltage, BatteryParams, Resistances};
use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vector2};
use crate::profiles::{evaluate_fault, CurrentProfile, FaultProfile};
use crate::rng::{GaussianSampler, NoiseRng};
use crate::state::NoiseSpec;

/// Upper bound on the number of samples in one scenario.
pub const MAX_STEPS: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Filters use the true resistances and initial capacitances.
    NoiseOnly,
    /// Filters use biased resistances and offset initial capacitances.
    WithModelError,
}

impl Case {
    pub const ALL: [Case; 2] = [Case::NoiseOnly, Case::WithModelError];

    pub fn key(&self) -> &'static str {
        match self {
            Case::NoiseOnly => "noise",
            Case::WithModelError => "mismatch",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Case::NoiseOnly => "case1_noise_only",
            Case::WithModelError => "case2_noise_and_model_error",
        }
    }
}

/// Multiplicative model errors applied to the filter's view of the battery.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MismatchSpec {
    pub enabled: bool,
    /// Factors on `(r_e, r_c, r_t)`.
    pub resistance_bias: [f64; 3],
    /// Factors on the filter's initial `(c_b, c_c)`.
    pub capacitance_bias: [f64; 2],
}

impl MismatchSpec {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            resistance_bias: [1.0; 3],
            capacitance_bias: [1.0; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .resistance_bias
            .iter()
            .chain(&self.capacitance_bias)
            .any(|b| !(*b > 0.0 && b.is_finite()))
        {
            return Err(Error::config("mismatch biases must be positive"));
        }
        Ok(())
    }
}

/// Capacitor fault trajectories. `None` keeps the nominal value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultPair {
    pub c_b: Option<FaultProfile>,
    pub c_c: Option<FaultProfile>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub duration: f64,
    pub t_s: f64,
    pub current: CurrentProfile,
    /// Nominal plant; `c_b`/`c_c` are used where no fault profile is given.
    pub true_params: BatteryParams,
    pub faults: FaultPair,
    /// Truth noise. Its seed drives the truth stream.
    pub noise: NoiseSpec,
    pub mismatch: MismatchSpec,
    pub initial_true_state: (f64, f64),
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        self.noise.seed
    }

    pub fn step_count(&self) -> usize {
        // guard against 60 / 0.01 = 6000.000000000001
        let ratio = self.duration / self.t_s;
        (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("scenario duration must be positive"));
        }
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return Err(Error::config("scenario sampling time must be positive"));
        }
        if self.duration / self.t_s > MAX_STEPS {
            return Err(Error::config(format!(
                "scenario has {} steps, more than the {MAX_STEPS} limit",
                self.duration / self.t_s
            )));
        }
        // nominal values seed the filters even when a fault profile drives the plant
        self.true_params.validate()?;
        self.params_at(0.0).validate()?;
        self.current.validate()?;
        for profile in [&self.faults.c_b, &self.faults.c_c].into_iter().flatten() {
            profile.validate()?;
        }
        self.mismatch.validate()?;
        let sym2 = |m: &Matrix2| (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
        if !sym2(&self.noise.measurement_cov) || !sym2(&self.voltage_process_cov()) {
            return Err(Error::config("noise covariances must be symmetric"));
        }
        Ok(())
    }

    /// True capacitances at time `t`.
    pub fn capacitances_at(&self, t: f64) -> (f64, f64) {
        let c_b = self
            .faults
            .c_b
            .as_ref()
            .map_or(self.true_params.c_b, |p| evaluate_fault(p, t));
        let c_c = self
            .faults
            .c_c
            .as_ref()
            .map_or(self.true_params.c_c, |p| evaluate_fault(p, t));
        (c_b, c_c)
    }

    /// True plant at time `t`, with this scenario's sampling time.
    pub fn params_at(&self, t: f64) -> BatteryParams {
        let (c_b, c_c) = self.capacitances_at(t);
        BatteryParams {
            t_s: self.t_s,
            ..self.true_params.with_capacitances(c_b, c_c)
        }
    }

    fn voltage_process_cov(&self) -> Matrix2 {
        self.noise.process_cov.fixed_view::<2, 2>(0, 0).into_owned()
    }
}

/// Per-sample truth. Index `k` is time `k * t_s`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruthRecord {
    pub t: Vec<f64>,
    pub i_s: Vec<f64>,
    pub v_cb: Vec<f64>,
    pub v_cc: Vec<f64>,
    pub c_b: Vec<f64>,
    pub c_c: Vec<f64>,
    pub v_o: Vec<f64>,
    pub z: Vec<Vector2>,
}

impl TruthRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Simulate the plant with the Euler map, time-varying true capacitances,
/// process noise on the voltages only, and noisy voltage measurements.
///
/// Draw order per sample is fixed (measurement noise, then process noise), so
/// a seed reproduces the record exactly.
pub fn simulate_truth(s: &Scenario) -> Result<TruthRecord> {
    s.validate()?;
    let n = s.step_count();
    let mut rng = NoiseRng::from_seed(s.seed());
    let process = GaussianSampler::new(&s.voltage_process_cov())?;
    let measurement = GaussianSampler::new(&s.noise.measurement_cov)?;

    let mut rec = TruthRecord {
        t: Vec::with_capacity(n),
        i_s: Vec::with_capacity(n),
        v_cb: Vec::with_capacity(n),
        v_cc: Vec::with_capacity(n),
        c_b: Vec::with_capacity(n),
        c_c: Vec::with_capacity(n),
        v_o: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
    };
    let (mut v_cb, mut v_cc) = s.initial_true_state;
    for k in 0..n {
        let t = k as f64 * s.t_s;
        let params = s.params_at(t);
        params.validate()?;
        let i_s = s.current.at(t);
        let z = Vector2::new(v_cb, v_cc) + measurement.sample(&mut rng);

        rec.t.push(t);
        rec.i_s.push(i_s);
        rec.v_cb.push(v_cb);
        rec.v_cc.push(v_cc);
        rec.c_b.push(params.c_b);
        rec.c_c.push(params.c_c);
        rec.v_o.push(output_voltage(&params, v_cb, v_cc, i_s));
        rec.z.push(z);

        let w = process.sample(&mut rng);
        let (nb, nc) = discrete_step(&params, (v_cb, v_cc), i_s);
        v_cb = nb + w[0];
        v_cc = nc + w[1];
    }
    Ok(rec)
}

/// The battery as the filters believe it to be.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterModel {
    pub resist: Resistances,
    pub t_s: f64,
    pub initial_c_b: f64,
    pub initial_c_c: f64,
}

/// Filter-side model. Without mismatch the filter gets the true resistances
/// and the true initial capacitances; with mismatch both are scaled by the
/// configured biases. The fault profile is never revealed.
pub fn filter_model_for(s: &Scenario) -> FilterModel {
    let (c_b, c_c) = s.capacitances_at(0.0);
    let r = s.true_params.resistances();
    let m = if s.mismatch.enabled {
        s.mismatch
    } else {
        MismatchSpec::disabled()
    };
    FilterModel {
        resist: Resistances {
            r_e: r.r_e * m.resistance_bias[0],
            r_c: r.r_c * m.resistance_bias[1],
            r_t: r.r_t * m.resistance_bias[2],
        },
        t_s: s.t_s,
        initial_c_b: c_b * m.capacitance_bias[0],
        initial_c_c: c_c * m.capacitance_bias[1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix4;
    use crate::profiles::Interpolation;

    fn quiet() -> Scenario {
        Scenario {
            duration: 1.0,
            t_s: 0.01,
            current: CurrentProfile::constant(0.0),
            true_params: BatteryParams {
                r_e: 0.012,
                r_c: 0.008,
                r_t: 0.015,
                c_b: 40.0,
                c_c: 8.0,
                t_s: 0.01,
            },
            faults: FaultPair::default(),
            noise: NoiseSpec::silent(5),
            mismatch: MismatchSpec::disabled(),
            initial_true_state: (3.6, 3.6),
        }
    }

    #[test]
    fn step_count_rounds_sensibly() {
        let mut s = quiet();
        s.duration = 60.0;
        assert_eq!(s.step_count(), 6000);
        s.duration = 0.015;
        assert_eq!(s.step_count(), 2);
    }

    #[test]
    fn equilibrium_is_constant() {
        let rec = simulate_truth(&quiet()).unwrap();
        assert_eq!(rec.len(), 100);
        assert!(rec.v_cb.iter().chain(&rec.v_cc).all(|v| *v == 3.6));
        assert!(rec.z.iter().all(|z| z[0] == 3.6 && z[1] == 3.6));
    }

    #[test]
    fn noise_free_record_is_repeated_discrete_step() {
        let mut s = quiet();
        s.current = CurrentProfile::constant(4.0);
        s.initial_true_state = (3.5, 3.7);
        let rec = simulate_truth(&s).unwrap();
        let p = s.params_at(0.0);
        let mut x = (3.5, 3.7);
        for k in 0..rec.len() {
            assert_eq!((rec.v_cb[k], rec.v_cc[k]), x);
            assert_eq!(rec.z[k], Vector2::new(x.0, x.1));
            x = discrete_step(&p, x, 4.0);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let mut s = quiet();
        s.noise.measurement_cov = Matrix2::identity() * 1e-6;
        s.noise.process_cov = Matrix4::identity() * 1e-8;
        assert_eq!(simulate_truth(&s).unwrap(), simulate_truth(&s).unwrap());
        let mut other = s.clone();
        other.noise.seed = 6;
        assert_ne!(simulate_truth(&s).unwrap().z, simulate_truth(&other).unwrap().z);
    }

    #[test]
    fn faults_drive_true_capacitance() {
        let mut s = quiet();
        s.faults.c_b = Some(FaultProfile {
            breakpoints: vec![(0.0, 40.0), (0.5, 30.0)],
            mode: Interpolation::Step,
        });
        let rec = simulate_truth(&s).unwrap();
        assert_eq!(rec.c_b[49], 40.0);
        assert_eq!(rec.c_b[50], 30.0);
        assert!(rec.c_c.iter().all(|c| *c == 8.0));
    }

    #[test]
    fn filter_model_without_and_with_mismatch() {
        let mut s = quiet();
        let m = filter_model_for(&s);
        assert_eq!(m.resist, s.true_params.resistances());
        assert_eq!(m.initial_c_b, 40.0);

        s.mismatch = MismatchSpec {
            enabled: true,
            resistance_bias: [1.2, 1.0, 1.0],
            capacitance_bias: [2.0, 2.0],
        };
        let m = filter_model_for(&s);
        assert!((m.resist.r_e - 1.2 * 0.012).abs() < 1e-15);
        assert_eq!(m.resist.r_c, 0.008);
        assert_eq!(m.initial_c_b, 80.0);
        assert_eq!(m.initial_c_c, 16.0);
    }

    #[test]
    fn rejects_oversized_scenarios() {
        let mut s = quiet();
        s.duration = 1e6;
        s.t_s = 1e-3;
        assert!(s.validate().is_err());
    }
}
