//! Sequential importance resampling particle filter with the bootstrap
//! proposal (the transition prior), so each weight is multiplied by the
//! measurement likelihood alone. Resampling is systematic and triggered when
//! the effective sample size drops below a fraction of the particle count.

use nalgebra::{SMatrix, SVector};

use super::model::StateSpaceModel;
use super::{Filter, Gaussian, StepOutput, Variant};
use crate::error::{Error, Result};
use crate::rng::{GaussianSampler, NoiseRng};

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet<const N: usize> {
    pub particles: Vec<SVector<f64, N>>,
    pub weights: Vec<f64>,
}

impl<const N: usize> ParticleSet<N> {
    /// Equally weighted draws from `N(mean, cov)`.
    pub fn from_gaussian(init: &Gaussian<N>, count: usize, rng: &mut NoiseRng) -> Result<Self> {
        if count == 0 {
            return Err(Error::config("particle count must be positive"));
        }
        let sampler = GaussianSampler::new(&init.cov)?;
        let particles = (0..count).map(|_| init.mean + sampler.sample(rng)).collect();
        Ok(Self {
            particles,
            weights: vec![1.0 / count as f64; count],
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mean(&self) -> SVector<f64, N> {
        let mut m = SVector::<f64, N>::zeros();
        for (p, w) in self.particles.iter().zip(&self.weights) {
            m += p * *w;
        }
        m
    }

    pub fn covariance(&self, mean: &SVector<f64, N>) -> SMatrix<f64, N, N> {
        let mut c = SMatrix::<f64, N, N>::zeros();
        for (p, w) in self.particles.iter().zip(&self.weights) {
            let d = p - mean;
            c += d * d.transpose() * *w;
        }
        c
    }
}

/// `1 / sum w_i^2` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: one uniform offset `u0` in `[0, 1)`, then evenly
/// spaced pointers `(u0 + i) / N` through the cumulative weights. Returns the
/// selected ancestor index for each output slot.
pub fn systematic_resample(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights.first().copied().unwrap_or(0.0);
    let mut j = 0;
    for i in 0..n {
        let pointer = (u0 + i as f64) / n as f64;
        while pointer >= cumulative && j + 1 < n {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
    out
}

/// Process and measurement noise as the particle filter consumes them.
#[derive(Clone, Debug)]
pub struct PfNoise<const N: usize, const M: usize> {
    process: GaussianSampler<N>,
    measurement_info: SMatrix<f64, M, M>,
}

impl<const N: usize, const M: usize> PfNoise<N, M> {
    pub fn new(q: &SMatrix<f64, N, N>, r: &SMatrix<f64, M, M>) -> Result<Self> {
        let measurement_info = r
            .try_inverse()
            .ok_or_else(|| Error::config("particle filter needs an invertible measurement covariance"))?;
        Ok(Self {
            process: GaussianSampler::new(q)?,
            measurement_info,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfStepReport<const N: usize, const M: usize> {
    pub mean: SVector<f64, N>,
    pub cov: SMatrix<f64, N, N>,
    pub innovation: SVector<f64, M>,
    /// Effective sample size after reweighting, before any resampling.
    pub n_eff: f64,
    pub resampled: bool,
    pub weight_collapse: bool,
}

/// One SIR step: sample from the transition prior, reweight by the Gaussian
/// likelihood, normalize, estimate, and resample if `N_eff < threshold * N`.
///
/// Likelihoods are handled in log space and shifted by their maximum before
/// exponentiating; the shift cancels in the normalization. If every weight is
/// still zero or non-finite the weights are reset to uniform and the step is
/// flagged as a collapse.
pub fn pf_step<const N: usize, const M: usize, Mdl>(
    set: &mut ParticleSet<N>,
    z: &SVector<f64, M>,
    input: f64,
    model: &Mdl,
    noise: &PfNoise<N, M>,
    resample_threshold: f64,
    rng: &mut NoiseRng,
) -> PfStepReport<N, M>
where
    Mdl: StateSpaceModel<N, M> + ?Sized,
{
    let n = set.len();
    let mut log_lik = Vec::with_capacity(n);
    for p in set.particles.iter_mut() {
        *p = model.transition(p, input) + noise.process.sample(rng);
        let e = z - model.observe(p);
        log_lik.push(-0.5 * (e.transpose() * noise.measurement_info * e)[(0, 0)]);
    }

    let max_ll = log_lik
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    if max_ll.is_finite() {
        for (w, ll) in set.weights.iter_mut().zip(&log_lik) {
            let lik = if ll.is_finite() { (ll - max_ll).exp() } else { 0.0 };
            *w *= lik;
            total += *w;
        }
    }
    let weight_collapse = !(total > 0.0 && total.is_finite());
    if weight_collapse {
        set.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
    } else {
        set.weights.iter_mut().for_each(|w| *w /= total);
    }

    let n_eff = effective_sample_size(&set.weights);
    let mean = set.mean();
    let cov = set.covariance(&mean);
    let innovation = z - model.observe(&mean);

    let resampled = n_eff < resample_threshold * n as f64;
    if resampled {
        let picks = systematic_resample(&set.weights, rng.uniform());
        let next: Vec<_> = picks.iter().map(|&i| set.particles[i]).collect();
        set.particles = next;
        set.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
    }

    PfStepReport {
        mean,
        cov,
        innovation,
        n_eff,
        resampled,
        weight_collapse,
    }
}

pub struct ParticleFilter<Mdl, const N: usize, const M: usize> {
    model: Mdl,
    set: ParticleSet<N>,
    noise: PfNoise<N, M>,
    resample_threshold: f64,
    rng: NoiseRng,
    estimate: SVector<f64, N>,
    cov: SMatrix<f64, N, N>,
}

impl<Mdl, const N: usize, const M: usize> ParticleFilter<Mdl, N, M>
where
    Mdl: StateSpaceModel<N, M>,
{
    pub fn new(
        model: Mdl,
        initial: &Gaussian<N>,
        count: usize,
        q: &SMatrix<f64, N, N>,
        r: &SMatrix<f64, M, M>,
        resample_threshold: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&resample_threshold) {
            return Err(Error::config(format!(
                "resample threshold must be a fraction in [0, 1], got {resample_threshold}"
            )));
        }
        let mut rng = NoiseRng::from_seed(seed);
        let set = ParticleSet::from_gaussian(initial, count, &mut rng)?;
        Ok(Self {
            model,
            set,
            noise: PfNoise::new(q, r)?,
            resample_threshold,
            rng,
            estimate: initial.mean,
            cov: initial.cov,
        })
    }

    pub fn particles(&self) -> &ParticleSet<N> {
        &self.set
    }

    /// Step and return the full diagnostic report.
    pub fn step_report(&mut self, input: f64, z: &SVector<f64, M>) -> PfStepReport<N, M> {
        let report = pf_step(
            &mut self.set,
            z,
            input,
            &self.model,
            &self.noise,
            self.resample_threshold,
            &mut self.rng,
        );
        self.estimate = report.mean;
        self.cov = report.cov;
        report
    }
}

impl<Mdl, const N: usize, const M: usize> Filter<N, M> for ParticleFilter<Mdl, N, M>
where
    Mdl: StateSpaceModel<N, M> + Send,
{
    fn variant(&self) -> Variant {
        Variant::Pf
    }

    fn state(&self) -> SVector<f64, N> {
        self.estimate
    }

    fn covariance(&self) -> Option<SMatrix<f64, N, N>> {
        Some(self.cov)
    }

    fn step(&mut self, input: f64, z: &SVector<f64, M>) -> Result<StepOutput<N, M>> {
        let r = self.step_report(input, z);
        Ok(StepOutput {
            state: r.mean,
            cov: Some(r.cov),
            innovation: r.innovation,
            weight_collapse: r.weight_collapse,
        })
    }
}
