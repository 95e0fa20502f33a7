//! Models the filters run against.

use nalgebra::{SMatrix, SVector};

use crate::battery::{propagate, propagate_jacobian, Resistances};
use crate::linalg::{Matrix2x4, Matrix4, Vector2, Vector4};

/// Discrete-time model `x' = f(x, u)`, `z = h(x)` with a scalar input.
pub trait StateSpaceModel<const N: usize, const M: usize> {
    fn transition(&self, x: &SVector<f64, N>, input: f64) -> SVector<f64, N>;
    fn transition_jacobian(&self, x: &SVector<f64, N>, input: f64) -> SMatrix<f64, N, N>;
    fn observe(&self, x: &SVector<f64, N>) -> SVector<f64, M>;
    fn observation_jacobian(&self, x: &SVector<f64, N>) -> SMatrix<f64, M, N>;
}

/// Measurement vector lifted to full state dimension, as the SVSF gain needs
/// an invertible output map. Channels that cannot be formed at a given step
/// are marked unavailable and receive no correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedMeasurement<const N: usize> {
    pub values: SVector<f64, N>,
    pub available: [bool; N],
}

pub trait ExtendedObservation<const N: usize, const M: usize>: StateSpaceModel<N, M> {
    /// Square output map `C` of the lifted measurement.
    fn extended_output_matrix(&self) -> SMatrix<f64, N, N>;

    /// Lift the current measurement, given the previous one and the input
    /// applied between them.
    fn extended_measurement(
        &self,
        z: &SVector<f64, M>,
        previous: Option<&SVector<f64, M>>,
        input: f64,
    ) -> ExtendedMeasurement<N>;
}

/// `x' = A x + B u`, `z = C x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel<const N: usize, const M: usize> {
    pub a: SMatrix<f64, N, N>,
    pub b: SVector<f64, N>,
    pub c: SMatrix<f64, M, N>,
}

impl<const N: usize, const M: usize> StateSpaceModel<N, M> for LinearModel<N, M> {
    fn transition(&self, x: &SVector<f64, N>, input: f64) -> SVector<f64, N> {
        self.a * x + self.b * input
    }

    fn transition_jacobian(&self, _x: &SVector<f64, N>, _input: f64) -> SMatrix<f64, N, N> {
        self.a
    }

    fn observe(&self, x: &SVector<f64, N>) -> SVector<f64, M> {
        self.c * x
    }

    fn observation_jacobian(&self, _x: &SVector<f64, N>) -> SMatrix<f64, M, N> {
        self.c
    }
}

impl<const N: usize> ExtendedObservation<N, N> for LinearModel<N, N> {
    fn extended_output_matrix(&self) -> SMatrix<f64, N, N> {
        self.c
    }

    fn extended_measurement(
        &self,
        z: &SVector<f64, N>,
        _previous: Option<&SVector<f64, N>>,
        _input: f64,
    ) -> ExtendedMeasurement<N> {
        ExtendedMeasurement {
            values: *z,
            available: [true; N],
        }
    }
}

/// The battery as seen by a filter: assumed resistances, sampling time and
/// the measurement map `z = [V_Cb, V_Cc]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatteryModel {
    pub resist: Resistances,
    pub t_s: f64,
    /// Smallest `|V_other - V_self + R I|` (volts) for which a reciprocal
    /// capacitance pseudo-measurement is formed.
    pub pseudo_min_drive: f64,
}

impl BatteryModel {
    pub fn new(resist: Resistances, t_s: f64) -> Self {
        Self {
            resist,
            t_s,
            pseudo_min_drive: 0.0,
        }
    }

    pub fn with_pseudo_min_drive(mut self, volts: f64) -> Self {
        self.pseudo_min_drive = volts;
        self
    }

    fn gain(&self) -> f64 {
        self.t_s / (self.resist.r_e + self.resist.r_c)
    }
}

impl StateSpaceModel<4, 2> for BatteryModel {
    fn transition(&self, x: &Vector4, input: f64) -> Vector4 {
        propagate(x, input, &self.resist, self.t_s)
    }

    fn transition_jacobian(&self, x: &Vector4, input: f64) -> Matrix4 {
        propagate_jacobian(x, input, &self.resist, self.t_s)
    }

    fn observe(&self, x: &Vector4) -> Vector2 {
        Vector2::new(x[0], x[1])
    }

    fn observation_jacobian(&self, _x: &Vector4) -> Matrix2x4 {
        Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    }
}

impl ExtendedObservation<4, 2> for BatteryModel {
    fn extended_output_matrix(&self) -> Matrix4 {
        Matrix4::identity()
    }

    /// Voltages pass through. Each reciprocal capacitance is recovered by
    /// solving its row of the Euler map for `w` using the delayed
    /// measurements: `w_b = (z1 - z1_prev) / (g (z2_prev - z1_prev + R_c I))`
    /// and symmetrically for `w_c`.
    fn extended_measurement(&self, z: &Vector2, previous: Option<&Vector2>, input: f64) -> ExtendedMeasurement<4> {
        let mut values = Vector4::new(z[0], z[1], 0.0, 0.0);
        let mut available = [true, true, false, false];
        if let Some(prev) = previous {
            let g = self.gain();
            let drive_b = prev[1] - prev[0] + self.resist.r_c * input;
            let drive_c = prev[0] - prev[1] + self.resist.r_e * input;
            let floor = self.pseudo_min_drive.max(f64::MIN_POSITIVE);
            if drive_b.abs() > floor {
                values[2] = (z[0] - prev[0]) / (g * drive_b);
                available[2] = values[2].is_finite();
            }
            if drive_c.abs() > floor {
                values[3] = (z[1] - prev[1]) / (g * drive_c);
                available[3] = values[3].is_finite();
            }
        }
        ExtendedMeasurement { values, available }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateVector;

    fn model() -> BatteryModel {
        BatteryModel::new(
            Resistances {
                r_e: 0.012,
                r_c: 0.008,
                r_t: 0.015,
            },
            0.01,
        )
    }

    #[test]
    fn pseudo_measurement_inverts_noise_free_step() {
        let m = model();
        let x = StateVector::from_capacitances(3.5, 3.8, 40.0, 8.0).to_vector();
        let next = m.transition(&x, 6.0);
        let ext = m.extended_measurement(&m.observe(&next), Some(&m.observe(&x)), 6.0);
        assert_eq!(ext.available, [true; 4]);
        assert!((ext.values[2] - x[2]).abs() < 1e-10);
        assert!((ext.values[3] - x[3]).abs() < 1e-10);
    }

    #[test]
    fn pseudo_channels_need_history_and_drive() {
        let m = model().with_pseudo_min_drive(0.01);
        let z = Vector2::new(3.5, 3.5);
        assert_eq!(
            m.extended_measurement(&z, None, 1.0).available,
            [true, true, false, false]
        );
        // no voltage difference and no current: nothing to invert
        assert_eq!(
            m.extended_measurement(&z, Some(&z), 0.0).available,
            [true, true, false, false]
        );
    }
}
