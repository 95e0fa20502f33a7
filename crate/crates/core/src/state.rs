use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix2, Matrix4, Vector2, Vector4};

/// Estimation state of the RC battery.
///
/// Capacitances are carried as reciprocals (`w = 1/C`) so that the voltage
/// propagation is bilinear in the state. Callers that want farads use
/// [`StateVector::c_b`] / [`StateVector::c_c`] or [`StateVector::to_physical`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub v_cb: f64,
    pub v_cc: f64,
    pub w_cb: f64,
    pub w_cc: f64,
}

pub type CovarianceMatrix = Matrix4;

impl StateVector {
    pub fn new(v_cb: f64, v_cc: f64, w_cb: f64, w_cc: f64) -> Self {
        Self { v_cb, v_cc, w_cb, w_cc }
    }

    pub fn from_capacitances(v_cb: f64, v_cc: f64, c_b: f64, c_c: f64) -> Self {
        Self::new(v_cb, v_cc, c_b.recip(), c_c.recip())
    }

    /// `[V_Cb, V_Cc, C_b, C_c]`.
    pub fn from_physical(x: [f64; 4]) -> Self {
        Self::from_capacitances(x[0], x[1], x[2], x[3])
    }

    pub fn to_physical(&self) -> [f64; 4] {
        [self.v_cb, self.v_cc, self.c_b(), self.c_c()]
    }

    pub fn c_b(&self) -> f64 {
        self.w_cb.recip()
    }

    pub fn c_c(&self) -> f64 {
        self.w_cc.recip()
    }

    pub fn is_physical(&self) -> bool {
        self.w_cb > 0.0 && self.w_cc > 0.0 && self.w_cb.is_finite() && self.w_cc.is_finite()
    }

    pub fn to_vector(&self) -> Vector4 {
        Vector4::new(self.v_cb, self.v_cc, self.w_cb, self.w_cc)
    }

    pub fn from_vector(x: &Vector4) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    /// Observed `[V_Cb, V_Cc]`.
    pub z: Vector2,
    pub t: f64,
}

/// Noise covariances and the seed of the stream that realizes them.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub process_cov: Matrix4,
    pub measurement_cov: Matrix2,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn silent(seed: u64) -> Self {
        Self {
            process_cov: Matrix4::zeros(),
            measurement_cov: Matrix2::zeros(),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn physical_roundtrip_simple() {
        let s = StateVector::from_physical([3.7, 3.6, 2000.0, 50.0]);
        assert_eq!(s.w_cb, 1.0 / 2000.0);
        assert!(s.is_physical());
        assert!(!StateVector::new(1.0, 1.0, -1.0, 1.0).is_physical());
    }

    proptest! {
        #[test]
        fn physical_ordering_is_a_bijection(
            v in -10.0f64..10.0, u in -10.0f64..10.0,
            cb in 1e-3f64..1e6, cc in 1e-3f64..1e6,
        ) {
            let back = StateVector::from_physical([v, u, cb, cc]).to_physical();
            prop_assert_eq!(back[0], v);
            prop_assert_eq!(back[1], u);
            prop_assert!((back[2] - cb).abs() <= 4.0 * f64::EPSILON * cb);
            prop_assert!((back[3] - cc).abs() <= 4.0 * f64::EPSILON * cc);
        }
    }
}
