//! Time profiles driving a scenario: supplied current and capacitor faults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Step,
    Ramp,
}

/// Piecewise capacitance trajectory given by `(t_start, farads)` breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultProfile {
    pub breakpoints: Vec<(f64, f64)>,
    pub mode: Interpolation,
}

impl FaultProfile {
    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, value)],
            mode: Interpolation::Step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() {
            return Err(Error::config("fault profile needs at least one breakpoint"));
        }
        for pair in self.breakpoints.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::config(format!(
                    "fault breakpoints must be strictly increasing in time ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some(&(t, v)) = self.breakpoints.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config(format!(
                "fault value at t = {t} must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

/// Capacitance at time `t`. Before the first breakpoint the first value holds;
/// after the last, the last value holds.
pub fn evaluate_fault(profile: &FaultProfile, t: f64) -> f64 {
    let bp = &profile.breakpoints;
    // index of the last breakpoint with t_start <= t
    let idx = bp.partition_point(|&(start, _)| start <= t);
    if idx == 0 {
        return bp[0].1;
    }
    let (t0, v0) = bp[idx - 1];
    match profile.mode {
        Interpolation::Step => v0,
        Interpolation::Ramp => match bp.get(idx) {
            Some(&(t1, v1)) => v0 + (v1 - v0) * (t - t0) / (t1 - t0),
            None => v0,
        },
    }
}

/// One segment of a repeating current pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentSegment {
    pub duration: f64,
    pub amps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Supplied current `I_S(t)`. Positive current charges the capacitors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurrentProfile {
    /// Zero-order hold through `(t, amps)` samples.
    Samples { points: Vec<(f64, f64)> },
    /// Offset plus a repeating step pattern plus sinusoids.
    Generator {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        pattern: Vec<CurrentSegment>,
        #[serde(default)]
        sinusoids: Vec<Sinusoid>,
    },
}

impl CurrentProfile {
    pub fn constant(amps: f64) -> Self {
        CurrentProfile::Generator {
            offset: amps,
            pattern: Vec::new(),
            sinusoids: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CurrentProfile::Samples { points } => {
                if points.is_empty() {
                    return Err(Error::config("current samples must not be empty"));
                }
                if points.windows(2).any(|p| !(p[1].0 > p[0].0)) {
                    return Err(Error::config("current sample times must be strictly increasing"));
                }
                if points.iter().any(|(t, i)| !t.is_finite() || !i.is_finite()) {
                    return Err(Error::config("current samples must be finite"));
                }
            }
            CurrentProfile::Generator {
                offset,
                pattern,
                sinusoids,
            } => {
                if !offset.is_finite() {
                    return Err(Error::config("current offset must be finite"));
                }
                if pattern.iter().any(|s| !(s.duration > 0.0) || !s.amps.is_finite()) {
                    return Err(Error::config(
                        "current pattern segments need positive duration and finite amps",
                    ));
                }
                if sinusoids.iter().any(|s| !(s.period > 0.0) || !s.amplitude.is_finite()) {
                    return Err(Error::config("sinusoids need positive period and finite amplitude"));
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            CurrentProfile::Samples { points } => {
                let idx = points.partition_point(|&(start, _)| start <= t);
                points[idx.saturating_sub(1)].1
            }
            CurrentProfile::Generator {
                offset,
                pattern,
                sinusoids,
            } => {
                let mut i = *offset;
                let period: f64 = pattern.iter().map(|s| s.duration).sum();
                if period > 0.0 {
                    let mut phase = t.rem_euclid(period);
                    for seg in pattern {
                        if phase < seg.duration {
                            i += seg.amps;
                            break;
                        }
                        phase -= seg.duration;
                    }
                }
                for s in sinusoids {
                    i += s.amplitude * (std::f64::consts::TAU * t / s.period + s.phase).sin();
                }
                i
            }
        }
    }
}
