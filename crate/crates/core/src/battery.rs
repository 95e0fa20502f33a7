//! RC equivalent-circuit battery: bulk capacitor `C_b`, surface capacitor `C_c`,
//! end resistor `R_e`, capacitor resistor `R_c` and terminal resistor `R_t`.
//!
//! The voltage dynamics are
//!
//! ```text
//! dV_Cb/dt = (I_S R_c + V_Cc - V_Cb) / (C_b (R_e + R_c))
//! dV_Cc/dt = (I_S R_e + V_Cb - V_Cc) / (C_c (R_e + R_c))
//! ```
//!
//! discretized by forward Euler with sampling time `T_s`. For joint state and
//! parameter estimation the capacitances enter as `w = 1/C` and follow a
//! zero-drift random walk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix4, Vector4};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub r_e: f64,
    pub r_c: f64,
    pub r_t: f64,
    pub c_b: f64,
    pub c_c: f64,
    pub t_s: f64,
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("r_e", self.r_e),
            ("r_c", self.r_c),
            ("r_t", self.r_t),
            ("c_b", self.c_b),
            ("c_c", self.c_c),
            ("t_s", self.t_s),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "battery parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn resistances(&self) -> Resistances {
        Resistances {
            r_e: self.r_e,
            r_c: self.r_c,
            r_t: self.r_t,
        }
    }

    pub fn with_capacitances(mut self, c_b: f64, c_c: f64) -> Self {
        self.c_b = c_b;
        self.c_c = c_c;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resistances {
    pub r_e: f64,
    pub r_c: f64,
    pub r_t: f64,
}

impl Resistances {
    fn loop_sum(&self) -> f64 {
        self.r_e + self.r_c
    }
}

/// Continuous-time capacitor voltage rates `(dV_Cb/dt, dV_Cc/dt)`.
pub fn continuous_derivatives(params: &BatteryParams, v_cb: f64, v_cc: f64, i_s: f64) -> (f64, f64) {
    let r = params.r_e + params.r_c;
    let dv_cb = i_s * params.r_c / (params.c_b * r) + v_cc / (params.c_b * r) - v_cb / (params.c_b * r);
    let dv_cc = i_s * params.r_e / (params.c_c * r) + v_cb / (params.c_c * r) - v_cc / (params.c_c * r);
    (dv_cb, dv_cc)
}

/// One forward-Euler step of the capacitor voltages in transition-matrix form.
pub fn discrete_step(params: &BatteryParams, state: (f64, f64), i_s: f64) -> (f64, f64) {
    let (v_cb, v_cc) = state;
    let r = params.r_e + params.r_c;
    let a = params.t_s / (params.c_b * r);
    let b = params.t_s / (params.c_c * r);
    let next_cb = (1.0 - a) * v_cb + a * v_cc + a * params.r_c * i_s;
    let next_cc = b * v_cb + (1.0 - b) * v_cc + b * params.r_e * i_s;
    (next_cb, next_cc)
}

/// Terminal voltage.
pub fn output_voltage(params: &BatteryParams, v_cb: f64, v_cc: f64, i_s: f64) -> f64 {
    let r = params.r_e + params.r_c;
    (params.r_c * v_cb + params.r_e * v_cc) / r + (params.r_t + params.r_e * params.r_c / r) * i_s
}

/// Joint state/parameter transition on the raw vector `[V_Cb, V_Cc, W_Cb, W_Cc]`.
///
/// No positivity check; filters call this on sample points that may wander
/// outside the physical region.
pub(crate) fn propagate(x: &Vector4, i_s: f64, resist: &Resistances, t_s: f64) -> Vector4 {
    let g = t_s / resist.loop_sum();
    let (v_cb, v_cc, w_cb, w_cc) = (x[0], x[1], x[2], x[3]);
    Vector4::new(
        v_cb + g * w_cb * (v_cc - v_cb + resist.r_c * i_s),
        v_cc + g * w_cc * (v_cb - v_cc + resist.r_e * i_s),
        w_cb,
        w_cc,
    )
}

pub(crate) fn propagate_jacobian(x: &Vector4, i_s: f64, resist: &Resistances, t_s: f64) -> Matrix4 {
    let g = t_s / resist.loop_sum();
    let (v_cb, v_cc, w_cb, w_cc) = (x[0], x[1], x[2], x[3]);
    #[rustfmt::skip]
    let phi = Matrix4::new(
        1.0 - g * w_cb, g * w_cb,       g * (v_cc - v_cb + resist.r_c * i_s), 0.0,
        g * w_cc,       1.0 - g * w_cc, 0.0,                                  g * (v_cb - v_cc + resist.r_e * i_s),
        0.0,            0.0,            1.0,                                  0.0,
        0.0,            0.0,            0.0,                                  1.0,
    );
    phi
}

fn check_parameters(state: &StateVector) -> Result<()> {
    if state.w_cb > 0.0 && state.w_cc > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateParameter(format!(
            "reciprocal capacitances must be positive (w_cb = {}, w_cc = {})",
            state.w_cb, state.w_cc
        )))
    }
}

/// Joint state/parameter process model: voltages per the Euler map with
/// `C = 1/w`, parameters held constant.
pub fn process_model(state: &StateVector, i_s: f64, resist: &Resistances, t_s: f64) -> Result<StateVector> {
    check_parameters(state)?;
    Ok(StateVector::from_vector(&propagate(
        &state.to_vector(),
        i_s,
        resist,
        t_s,
    )))
}

/// Jacobian of [`process_model`] with respect to `[V_Cb, V_Cc, W_Cb, W_Cc]`.
pub fn jacobian(state: &StateVector, i_s: f64, resist: &Resistances, t_s: f64) -> Result<Matrix4> {
    check_parameters(state)?;
    Ok(propagate_jacobian(&state.to_vector(), i_s, resist, t_s))
}
