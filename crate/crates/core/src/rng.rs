//! Seeded noise generation.
//!
//! The generator is ChaCha8 (a counter-based stream cipher RNG, bit-for-bit
//! reproducible across platforms for a given seed). Gaussian variates use the
//! ziggurat method of `rand_distr::StandardNormal`; multivariate draws are
//! `mean + S z` with `S` the lower Cholesky factor of the covariance.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::cholesky_factor;

/// Single-owner random stream. One per scenario run or per filter instance.
#[derive(Clone, Debug)]
pub struct NoiseRng {
    inner: ChaCha8Rng,
}

impl NoiseRng {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal_vector<const N: usize>(&mut self) -> SVector<f64, N> {
        SVector::<f64, N>::from_fn(|_, _| self.standard_normal())
    }
}

/// Derive an independent stream seed from a base seed, a run index and a stream tag.
///
/// SplitMix64 finalizer over the packed inputs; distinct tags give unrelated streams.
pub fn derive_seed(base: u64, run: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(run.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One draw from `N(mean, cov)`.
pub fn gaussian_sample<const N: usize>(
    rng: &mut NoiseRng,
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
) -> Result<SVector<f64, N>> {
    let factor = cholesky_factor(cov)?;
    Ok(mean + factor * rng.standard_normal_vector::<N>())
}

/// Pre-factored zero-mean Gaussian, for drawing many samples with one covariance.
#[derive(Clone, Debug)]
pub struct GaussianSampler<const N: usize> {
    factor: SMatrix<f64, N, N>,
}

impl<const N: usize> GaussianSampler<N> {
    pub fn new(cov: &SMatrix<f64, N, N>) -> Result<Self> {
        Ok(Self {
            factor: cholesky_factor(cov)?,
        })
    }

    pub fn sample(&self, rng: &mut NoiseRng) -> SVector<f64, N> {
        self.factor * rng.standard_normal_vector::<N>()
    }
}
