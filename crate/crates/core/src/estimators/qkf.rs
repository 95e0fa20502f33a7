//! Quadrature Kalman filter: Gaussian belief propagated through the
//! nonlinear model at Gauss-Hermite points.

use nalgebra::{SMatrix, SVector};

use super::model::StateSpaceModel;
use super::quadrature::QuadraturePointSet;
use super::{Filter, Gaussian, StepOutput, Variant};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, condition_number, inverse_with_condition, is_finite, symmetrize};

use super::ekf::MAX_INNOVATION_CONDITION;

/// A [`QuadraturePointSet`] unpacked into fixed-size vectors.
#[derive(Clone, Debug)]
pub struct QuadratureRule<const N: usize> {
    points: Vec<SVector<f64, N>>,
    weights: Vec<f64>,
}

impl<const N: usize> QuadratureRule<N> {
    pub fn from_set(set: &QuadraturePointSet) -> Result<Self> {
        if set.dim != N {
            return Err(Error::config(format!(
                "quadrature rule has dimension {} but the state has {N}",
                set.dim
            )));
        }
        Ok(Self {
            points: (0..set.len()).map(|l| set.point_vector::<N>(l)).collect(),
            weights: set.weights.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Points `sqrt(P) xi_l + mean` for the belief.
    fn spread(&self, belief: &Gaussian<N>) -> Result<Vec<SVector<f64, N>>> {
        let root = cholesky_factor(&belief.cov)?;
        Ok(self.points.iter().map(|xi| root * xi + belief.mean).collect())
    }
}

/// Time update: factorize, place points, propagate through `f`, then take the
/// weighted mean and covariance of the propagated points plus `Q`.
pub fn qkf_time_update<const N: usize, const M: usize, Mdl>(
    belief: &Gaussian<N>,
    input: f64,
    rule: &QuadratureRule<N>,
    model: &Mdl,
    q: &SMatrix<f64, N, N>,
) -> Result<Gaussian<N>>
where
    Mdl: StateSpaceModel<N, M> + ?Sized,
{
    let propagated: Vec<SVector<f64, N>> = rule
        .spread(belief)?
        .iter()
        .map(|x| model.transition(x, input))
        .collect();

    let mut mean = SVector::<f64, N>::zeros();
    for (x, w) in propagated.iter().zip(&rule.weights) {
        mean += x * *w;
    }
    // sum w X X^T - m m^T, accumulated about the mean (same value, less cancellation)
    let mut cov = *q;
    for (x, w) in propagated.iter().zip(&rule.weights) {
        let d = x - mean;
        cov += d * d.transpose() * *w;
    }
    let cov = symmetrize(&cov);
    if !is_finite(&mean) || !is_finite(&cov) {
        return Err(Error::Diverged);
    }
    Ok(Gaussian { mean, cov })
}

/// Measurement update: points from the prior, predicted measurement,
/// innovation and cross covariances, gain and posterior.
pub fn qkf_measurement_update<const N: usize, const M: usize, Mdl>(
    prior: &Gaussian<N>,
    z: &SVector<f64, M>,
    rule: &QuadratureRule<N>,
    model: &Mdl,
    r: &SMatrix<f64, M, M>,
) -> Result<(Gaussian<N>, SVector<f64, M>)>
where
    Mdl: StateSpaceModel<N, M> + ?Sized,
{
    let states = rule.spread(prior)?;
    let outputs: Vec<SVector<f64, M>> = states.iter().map(|x| model.observe(x)).collect();

    let mut z_hat = SVector::<f64, M>::zeros();
    for (zl, w) in outputs.iter().zip(&rule.weights) {
        z_hat += zl * *w;
    }
    let mut p_zz = *r;
    let mut p_xz = SMatrix::<f64, N, M>::zeros();
    for ((xl, zl), w) in states.iter().zip(&outputs).zip(&rule.weights) {
        let dz = zl - z_hat;
        p_zz += dz * dz.transpose() * *w;
        p_xz += (xl - prior.mean) * dz.transpose() * *w;
    }
    let p_zz = symmetrize(&p_zz);

    let (p_zz_inv, _) = inverse_with_condition(&p_zz)
        .filter(|(_, cond)| *cond <= MAX_INNOVATION_CONDITION)
        .ok_or_else(|| Error::SingularInnovation(condition_number(&p_zz)))?;
    let gain = p_xz * p_zz_inv;
    let innovation = z - z_hat;
    let mean = prior.mean + gain * innovation;
    let cov = symmetrize(&(prior.cov - gain * p_zz * gain.transpose()));
    if !is_finite(&mean) || !is_finite(&cov) {
        return Err(Error::Diverged);
    }
    Ok((Gaussian { mean, cov }, innovation))
}

#[derive(Clone, Debug)]
pub struct QuadratureKalmanFilter<Mdl, const N: usize, const M: usize> {
    model: Mdl,
    rule: QuadratureRule<N>,
    belief: Gaussian<N>,
    q: SMatrix<f64, N, N>,
    r: SMatrix<f64, M, M>,
}

impl<Mdl, const N: usize, const M: usize> QuadratureKalmanFilter<Mdl, N, M>
where
    Mdl: StateSpaceModel<N, M>,
{
    pub fn new(
        model: Mdl,
        rule: QuadratureRule<N>,
        initial: Gaussian<N>,
        q: SMatrix<f64, N, N>,
        r: SMatrix<f64, M, M>,
    ) -> Self {
        Self {
            model,
            rule,
            belief: initial,
            q,
            r,
        }
    }

    pub fn belief(&self) -> &Gaussian<N> {
        &self.belief
    }
}

impl<Mdl, const N: usize, const M: usize> Filter<N, M> for QuadratureKalmanFilter<Mdl, N, M>
where
    Mdl: StateSpaceModel<N, M> + Send,
{
    fn variant(&self) -> Variant {
        Variant::Qkf
    }

    fn state(&self) -> SVector<f64, N> {
        self.belief.mean
    }

    fn covariance(&self) -> Option<SMatrix<f64, N, N>> {
        Some(self.belief.cov)
    }

    fn step(&mut self, input: f64, z: &SVector<f64, M>) -> Result<StepOutput<N, M>> {
        let prior = qkf_time_update(&self.belief, input, &self.rule, &self.model, &self.q)?;
        let (posterior, innovation) = qkf_measurement_update(&prior, z, &self.rule, &self.model, &self.r)?;
        self.belief = posterior;
        Ok(StepOutput {
            state: posterior.mean,
            cov: Some(posterior.cov),
            innovation,
            weight_collapse: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ekf::{ekf_predict, ekf_update};
    use crate::estimators::model::LinearModel;
    use crate::estimators::quadrature::gauss_hermite_rule;
    use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

    fn rule4() -> QuadratureRule<4> {
        QuadratureRule::from_set(&gauss_hermite_rule(3, 4).unwrap()).unwrap()
    }

    fn linear() -> LinearModel<4, 2> {
        LinearModel {
            a: Matrix4::new(
                0.9, 0.1, 0.0, 0.0, //
                0.05, 0.95, 0.02, 0.0, //
                0.0, 0.0, 1.0, 0.01, //
                0.0, 0.0, 0.0, 0.99,
            ),
            b: Vector4::new(0.1, 0.0, 0.02, 0.0),
            c: nalgebra::Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
        }
    }

    fn belief() -> Gaussian<4> {
        let l = Matrix4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.3, 0.8, 0.0, 0.0, //
            -0.2, 0.1, 0.5, 0.0, //
            0.0, 0.4, 0.2, 0.7,
        );
        Gaussian::new(Vector4::new(3.0, 3.2, 0.1, 0.5), l * l.transpose())
    }

    #[test]
    fn linear_time_update_matches_kalman() {
        let q = Matrix4::identity() * 0.01;
        let a = qkf_time_update(&belief(), 2.0, &rule4(), &linear(), &q).unwrap();
        let b = ekf_predict(&belief(), 2.0, &linear(), &q).unwrap();
        assert!((a.mean - b.mean).amax() < 1e-10);
        assert!((a.cov - b.cov).amax() < 1e-10);
    }

    #[test]
    fn linear_measurement_update_matches_kalman() {
        let r = Matrix2::new(0.5, 0.1, 0.1, 0.4);
        let z = Vector2::new(3.4, 2.9);
        let (a, ia) = qkf_measurement_update(&belief(), &z, &rule4(), &linear(), &r).unwrap();
        let (b, ib) = ekf_update(&belief(), &z, &linear(), &r).unwrap();
        assert!((a.mean - b.mean).amax() < 1e-10);
        assert!((a.cov - b.cov).amax() < 1e-10);
        assert!((ia - ib).amax() < 1e-10);
    }

    #[test]
    fn zero_covariance_collapses_points() {
        let g = Gaussian::new(Vector4::new(1.0, 2.0, 3.0, 4.0), Matrix4::zeros());
        let q = Matrix4::identity() * 0.3;
        let prior = qkf_time_update(&g, 1.5, &rule4(), &linear(), &q).unwrap();
        assert!((prior.mean - linear().transition(&g.mean, 1.5)).amax() < 1e-14);
        assert!((prior.cov - q).amax() < 1e-14);
    }

    #[test]
    fn identity_model_without_noise_is_unchanged() {
        let model = LinearModel::<4, 2> {
            a: Matrix4::identity(),
            b: Vector4::zeros(),
            c: linear().c,
        };
        let prior = qkf_time_update(&belief(), 0.0, &rule4(), &model, &Matrix4::zeros()).unwrap();
        assert!((prior.mean - belief().mean).amax() < 1e-14);
        assert!((prior.cov - belief().cov).amax() < 1e-12);
    }

    #[test]
    fn predicted_measurement_gives_zero_correction() {
        let z = Vector2::new(3.0, 3.2);
        let r = Matrix2::identity();
        let (post, innov) = qkf_measurement_update(&belief(), &z, &rule4(), &linear(), &r).unwrap();
        assert!(innov.amax() < 1e-14);
        assert!((post.mean - belief().mean).amax() < 1e-14);
    }

    #[test]
    fn huge_measurement_noise_leaves_prior() {
        let z = Vector2::new(13.0, -3.2);
        let r = Matrix2::identity() * 1e12;
        let (post, _) = qkf_measurement_update(&belief(), &z, &rule4(), &linear(), &r).unwrap();
        assert!((post.mean - belief().mean).amax() < 1e-10);
    }

    #[test]
    fn indefinite_covariance_is_rejected() {
        let mut p = Matrix4::from_element(30.0);
        p.fill_diagonal(1.0);
        let g = Gaussian::new(Vector4::zeros(), p);
        let res = qkf_time_update(&g, 0.0, &rule4(), &linear(), &Matrix4::zeros());
        assert!(matches!(res, Err(Error::NotPositiveSemidefinite { .. })));
    }
}
