//! Extended Kalman filter. On a linear model this is the plain Kalman filter.

use nalgebra::{SMatrix, SVector};

use super::model::StateSpaceModel;
use super::{Filter, Gaussian, StepOutput, Variant};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, inverse_with_condition, is_finite, symmetrize};

/// Innovation covariances worse conditioned than this are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Time update: `x- = f(x, u)`, `P- = F P F^T + Q` with `F` the Jacobian at the posterior.
pub fn ekf_predict<const N: usize, const M: usize, Mdl>(
    belief: &Gaussian<N>,
    input: f64,
    model: &Mdl,
    q: &SMatrix<f64, N, N>,
) -> Result<Gaussian<N>>
where
    Mdl: StateSpaceModel<N, M> + ?Sized,
{
    let phi = model.transition_jacobian(&belief.mean, input);
    let mean = model.transition(&belief.mean, input);
    let cov = symmetrize(&(phi * belief.cov * phi.transpose() + q));
    if !is_finite(&mean) || !is_finite(&cov) {
        return Err(Error::Diverged);
    }
    Ok(Gaussian { mean, cov })
}

/// Measurement update. Returns the posterior and the innovation `z - h(x-)`.
pub fn ekf_update<const N: usize, const M: usize, Mdl>(
    prior: &Gaussian<N>,
    z: &SVector<f64, M>,
    model: &Mdl,
    r: &SMatrix<f64, M, M>,
) -> Result<(Gaussian<N>, SVector<f64, M>)>
where
    Mdl: StateSpaceModel<N, M> + ?Sized,
{
    let c = model.observation_jacobian(&prior.mean);
    let s = c * prior.cov * c.transpose() + r;
    let (s_inv, _) = inverse_with_condition(&s)
        .filter(|(_, cond)| *cond <= MAX_INNOVATION_CONDITION)
        .ok_or_else(|| Error::SingularInnovation(condition_number(&s)))?;
    let gain = prior.cov * c.transpose() * s_inv;
    let innovation = z - model.observe(&prior.mean);
    let mean = prior.mean + gain * innovation;
    let cov = symmetrize(&((SMatrix::<f64, N, N>::identity() - gain * c) * prior.cov));
    if !is_finite(&mean) || !is_finite(&cov) {
        return Err(Error::Diverged);
    }
    Ok((Gaussian { mean, cov }, innovation))
}

#[derive(Clone, Debug)]
pub struct ExtendedKalmanFilter<Mdl, const N: usize, const M: usize> {
    model: Mdl,
    belief: Gaussian<N>,
    q: SMatrix<f64, N, N>,
    r: SMatrix<f64, M, M>,
}

impl<Mdl, const N: usize, const M: usize> ExtendedKalmanFilter<Mdl, N, M>
where
    Mdl: StateSpaceModel<N, M>,
{
    pub fn new(model: Mdl, initial: Gaussian<N>, q: SMatrix<f64, N, N>, r: SMatrix<f64, M, M>) -> Self {
        Self {
            model,
            belief: initial,
            q,
            r,
        }
    }

    pub fn belief(&self) -> &Gaussian<N> {
        &self.belief
    }
}

impl<Mdl, const N: usize, const M: usize> Filter<N, M> for ExtendedKalmanFilter<Mdl, N, M>
where
    Mdl: StateSpaceModel<N, M> + Send,
{
    fn variant(&self) -> Variant {
        Variant::Ekf
    }

    fn state(&self) -> SVector<f64, N> {
        self.belief.mean
    }

    fn covariance(&self) -> Option<SMatrix<f64, N, N>> {
        Some(self.belief.cov)
    }

    fn step(&mut self, input: f64, z: &SVector<f64, M>) -> Result<StepOutput<N, M>> {
        let prior = ekf_predict(&self.belief, input, &self.model, &self.q)?;
        let (posterior, innovation) = ekf_update(&prior, z, &self.model, &self.r)?;
        self.belief = posterior;
        Ok(StepOutput {
            state: posterior.mean,
            cov: Some(posterior.cov),
            innovation,
            weight_collapse: false,
        })
    }
}
