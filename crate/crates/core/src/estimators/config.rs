use super::model::BatteryModel;
use super::pf::ParticleFilter;
use super::qkf::{QuadratureKalmanFilter, QuadratureRule};
use super::quadrature::gauss_hermite_rule;
use super::svsf::{SmoothVariableStructureFilter, SvsfConfig};
use super::{ExtendedKalmanFilter, Filter, Gaussian, Variant};
use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Matrix4, Vector4};
use crate::state::StateVector;

/// Initial error covariance choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum P0Choice {
    /// Unit diagonal with 30 off the diagonal. Indefinite; kept for fidelity.
    Paper,
    Identity,
    Custom(Matrix4),
}

impl P0Choice {
    pub fn matrix(&self) -> Matrix4 {
        match self {
            P0Choice::Paper => {
                let mut p = Matrix4::from_element(30.0);
                p.fill_diagonal(1.0);
                p
            }
            P0Choice::Identity => Matrix4::identity(),
            P0Choice::Custom(m) => *m,
        }
    }
}

/// Everything needed to build one estimator for the battery problem.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub variant: Variant,
    pub initial_state: StateVector,
    pub initial_cov: Matrix4,
    pub q: Matrix4,
    pub r: Matrix2,
    pub pf_particle_count: usize,
    /// Resample when `N_eff < pf_resample_threshold * N`.
    pub pf_resample_threshold: f64,
    pub qkf_points_per_dim: usize,
    pub svsf_gamma: Vector4,
    pub svsf_psi: Vector4,
    /// Minimum drive voltage for the reciprocal-capacitance pseudo-measurements.
    pub svsf_pseudo_min_drive: f64,
    pub svsf_error_bound: f64,
    pub svsf_dwell_steps: usize,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let sym = |m: &Matrix4| (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
        if !sym(&self.q) || !sym(&self.initial_cov) {
            return Err(Error::config(format!(
                "{}: q and initial covariance must be symmetric",
                self.variant
            )));
        }
        if (self.r - self.r.transpose()).amax() > 1e-12 * self.r.amax().max(1.0) {
            return Err(Error::config(format!("{}: r must be symmetric", self.variant)));
        }
        if self.pf_particle_count == 0 {
            return Err(Error::config("pf particle count must be positive"));
        }
        if !(0.0..=1.0).contains(&self.pf_resample_threshold) {
            return Err(Error::config("pf resample threshold must lie in [0, 1]"));
        }
        if self.qkf_points_per_dim != 3 && self.qkf_points_per_dim != 5 {
            return Err(Error::UnsupportedOrder(self.qkf_points_per_dim));
        }
        self.svsf_config().validate()
    }

    pub fn svsf_config(&self) -> SvsfConfig<4> {
        SvsfConfig {
            gamma: self.svsf_gamma,
            psi: self.svsf_psi,
            error_bound: self.svsf_error_bound,
            dwell_steps: self.svsf_dwell_steps,
        }
    }
}

/// Construct the configured variant over the battery model.
pub fn build_battery_estimator(cfg: &EstimatorConfig, model: BatteryModel) -> Result<Box<dyn Filter<4, 2>>> {
    cfg.validate()?;
    let initial = Gaussian::new(cfg.initial_state.to_vector(), cfg.initial_cov);
    Ok(match cfg.variant {
        Variant::Ekf => Box::new(ExtendedKalmanFilter::new(model, initial, cfg.q, cfg.r)),
        Variant::Pf => Box::new(ParticleFilter::new(
            model,
            &initial,
            cfg.pf_particle_count,
            &cfg.q,
            &cfg.r,
            cfg.pf_resample_threshold,
            cfg.seed,
        )?),
        Variant::Qkf => {
            let rule = QuadratureRule::from_set(&gauss_hermite_rule(cfg.qkf_points_per_dim, 4)?)?;
            Box::new(QuadratureKalmanFilter::new(model, rule, initial, cfg.q, cfg.r))
        }
        Variant::Svsf => Box::new(SmoothVariableStructureFilter::new(
            model.with_pseudo_min_drive(cfg.svsf_pseudo_min_drive),
            initial.mean,
            cfg.svsf_config(),
        )?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_p0_is_indefinite() {
        let p = P0Choice::Paper.matrix();
        assert_eq!(p[(0, 0)], 1.0);
        assert_eq!(p[(0, 1)], 30.0);
        let eig = p.symmetric_eigenvalues();
        assert!(eig.min() < 0.0);
    }
}
