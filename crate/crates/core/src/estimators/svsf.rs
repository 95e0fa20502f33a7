//! Smooth variable structure filter.
//!
//! Predict with the model, then apply the switching gain
//!
//! ```text
//! K = C^+ ((|e_prior| + gamma o |e_post_prev|) o sat(e_prior / psi))
//! ```
//!
//! where `e_prior = z - C x_prior`, `e_post_prev` is the a posteriori output
//! error kept from the previous step and `sat` clamps each component to
//! `[-1, 1]`. Inside the boundary layer `psi` the correction is proportional;
//! outside it switches at full magnitude. The output map `C` must be square,
//! so measurements are lifted through [`ExtendedObservation`].

use nalgebra::{SMatrix, SVector};

use super::model::ExtendedObservation;
use super::{Filter, StepOutput, Variant};
use crate::error::{Error, Result};
use crate::linalg::{is_finite, pseudo_inverse};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvsfConfig<const N: usize> {
    /// Memory of the previous a posteriori error, each in `[0, 1)`.
    pub gamma: SVector<f64, N>,
    /// Boundary layer widths, each positive.
    pub psi: SVector<f64, N>,
    /// An a priori error component above this magnitude counts toward divergence.
    pub error_bound: f64,
    /// Consecutive over-bound steps before the filter is declared diverged.
    pub dwell_steps: usize,
}

impl<const N: usize> SvsfConfig<N> {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.iter().any(|g| !(0.0..1.0).contains(g)) {
            return Err(Error::config(format!(
                "svsf gamma entries must lie in [0, 1), got {}",
                self.gamma.transpose()
            )));
        }
        if self.psi.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::config(format!(
                "svsf psi entries must be positive, got {}",
                self.psi.transpose()
            )));
        }
        if !(self.error_bound > 0.0) || self.dwell_steps == 0 {
            return Err(Error::config("svsf divergence bound and dwell must be positive"));
        }
        Ok(())
    }
}

/// Everything the SVSF carries between steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvsfState<const N: usize, const M: usize> {
    pub estimate: SVector<f64, N>,
    /// A posteriori output error of the previous step (lifted coordinates).
    pub posterior_error: SVector<f64, N>,
    /// Previous raw measurement, for the delayed pseudo-measurements.
    pub previous_measurement: Option<SVector<f64, M>>,
    /// Consecutive steps with an a priori error above the configured bound.
    pub over_bound_steps: usize,
}

impl<const N: usize, const M: usize> SvsfState<N, M> {
    pub fn new(estimate: SVector<f64, N>) -> Self {
        Self {
            estimate,
            posterior_error: SVector::zeros(),
            previous_measurement: None,
            over_bound_steps: 0,
        }
    }
}

fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// One SVSF step. Returns the new state and the innovation on the raw measurement.
pub fn svsf_step<const N: usize, const M: usize, Mdl>(
    state: &SvsfState<N, M>,
    z: &SVector<f64, M>,
    input: f64,
    model: &Mdl,
    config: &SvsfConfig<N>,
) -> Result<(SvsfState<N, M>, SVector<f64, M>)>
where
    Mdl: ExtendedObservation<N, M> + ?Sized,
{
    let c = model.extended_output_matrix();
    step_with_map(state, z, input, model, config, &c, &pseudo_inverse(&c))
}

fn step_with_map<const N: usize, const M: usize, Mdl>(
    state: &SvsfState<N, M>,
    z: &SVector<f64, M>,
    input: f64,
    model: &Mdl,
    config: &SvsfConfig<N>,
    c: &SMatrix<f64, N, N>,
    c_pinv: &SMatrix<f64, N, N>,
) -> Result<(SvsfState<N, M>, SVector<f64, M>)>
where
    Mdl: ExtendedObservation<N, M> + ?Sized,
{
    let prior = model.transition(&state.estimate, input);
    let lifted = model.extended_measurement(z, state.previous_measurement.as_ref(), input);
    let predicted = c * prior;

    let mut prior_error = SVector::<f64, N>::zeros();
    let mut correction = SVector::<f64, N>::zeros();
    for i in 0..N {
        if !lifted.available[i] {
            continue;
        }
        let e = lifted.values[i] - predicted[i];
        prior_error[i] = e;
        let magnitude = e.abs() + config.gamma[i] * state.posterior_error[i].abs();
        correction[i] = magnitude * sat(e / config.psi[i]);
    }
    let gain = c_pinv * correction;
    let estimate = prior + gain;

    let refreshed = c * estimate;
    let mut posterior_error = SVector::<f64, N>::zeros();
    for i in 0..N {
        if lifted.available[i] {
            posterior_error[i] = lifted.values[i] - refreshed[i];
        }
    }

    if !is_finite(&estimate) {
        return Err(Error::Diverged);
    }
    let over_bound = prior_error.amax() > config.error_bound;
    let over_bound_steps = if over_bound { state.over_bound_steps + 1 } else { 0 };
    if over_bound_steps >= config.dwell_steps {
        return Err(Error::Diverged);
    }

    let innovation = z - model.observe(&prior);
    Ok((
        SvsfState {
            estimate,
            posterior_error,
            previous_measurement: Some(*z),
            over_bound_steps,
        },
        innovation,
    ))
}

#[derive(Clone, Debug)]
pub struct SmoothVariableStructureFilter<Mdl, const N: usize, const M: usize> {
    model: Mdl,
    config: SvsfConfig<N>,
    state: SvsfState<N, M>,
    output_map: SMatrix<f64, N, N>,
    output_map_pinv: SMatrix<f64, N, N>,
}

impl<Mdl, const N: usize, const M: usize> SmoothVariableStructureFilter<Mdl, N, M>
where
    Mdl: ExtendedObservation<N, M>,
{
    pub fn new(model: Mdl, initial: SVector<f64, N>, config: SvsfConfig<N>) -> Result<Self> {
        config.validate()?;
        let output_map = model.extended_output_matrix();
        Ok(Self {
            model,
            config,
            state: SvsfState::new(initial),
            output_map_pinv: pseudo_inverse(&output_map),
            output_map,
        })
    }

    pub fn svsf_state(&self) -> &SvsfState<N, M> {
        &self.state
    }
}

impl<Mdl, const N: usize, const M: usize> Filter<N, M> for SmoothVariableStructureFilter<Mdl, N, M>
where
    Mdl: ExtendedObservation<N, M> + Send,
{
    fn variant(&self) -> Variant {
        Variant::Svsf
    }

    fn state(&self) -> SVector<f64, N> {
        self.state.estimate
    }

    fn covariance(&self) -> Option<SMatrix<f64, N, N>> {
        None
    }

    fn step(&mut self, input: f64, z: &SVector<f64, M>) -> Result<StepOutput<N, M>> {
        let (next, innovation) = step_with_map(
            &self.state,
            z,
            input,
            &self.model,
            &self.config,
            &self.output_map,
            &self.output_map_pinv,
        )?;
        self.state = next;
        Ok(StepOutput {
            state: next.estimate,
            cov: None,
            innovation,
            weight_collapse: false,
        })
    }
}
