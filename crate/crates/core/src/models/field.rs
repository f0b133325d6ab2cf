use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::GridSpec;
use crate::rng::standard_normal;
use crate::{Error, Result};

/// Zero-mean Gaussian process prior with the periodic squared-exponential
/// kernel `k(d) = variance · exp(-2 sin²(π d / P) / length_scale²)`, where `P`
/// is the domain length. On `[0, 2π)` this is `exp(-2 sin²(d/2) / ℓ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFieldPrior {
    pub variance: f64,
    pub length_scale: f64,
}

impl Default for GaussianFieldPrior {
    fn default() -> Self {
        Self {
            variance: 1.0,
            length_scale: 1.0,
        }
    }
}

impl GaussianFieldPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::Config(format!(
                "field prior variance must be positive, got {}",
                self.variance
            )));
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::Config(format!(
                "field prior length scale must be positive, got {}",
                self.length_scale
            )));
        }
        Ok(())
    }

    /// Kernel value at separation `distance` on a circle of circumference `period`.
    pub fn kernel(&self, distance: f64, period: f64) -> f64 {
        let s = (PI * distance / period).sin();
        self.variance * (-2.0 * s * s / (self.length_scale * self.length_scale)).exp()
    }
}

/// Draws from a circulant Gaussian prior through its Fourier eigenbasis.
///
/// The covariance `C_{ml} = k(|m - l| Δx)` is circulant, so it is
/// diagonalized by the discrete cosine/sine modes with eigenvalues
/// `μ_k = Σ_m c_m cos(2π k m / n)`. A draw is
/// `x_m = Σ_k sqrt(μ_k / n) (a_k cos(2π k m / n) + b_k sin(2π k m / n))`
/// with `a_k, b_k` standard normal, whose covariance is exactly `C`.
#[derive(Debug, Clone)]
pub struct GaussianFieldSampler {
    n: usize,
    amplitudes: Vec<f64>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

impl GaussianFieldSampler {
    /// Relative size below which negative eigenvalues are treated as roundoff.
    pub const EIGEN_CLIP_TOLERANCE: f64 = 1e-10;

    pub fn new(prior: &GaussianFieldPrior, grid: &GridSpec) -> Result<Self> {
        prior.validate()?;
        let n = grid.n_points();
        let dx = grid.spacing();
        let period = grid.domain_length();
        let first_row: Vec<f64> = (0..n).map(|m| prior.kernel(m as f64 * dx, period)).collect();

        let mut cos_table = vec![0.0; n * n];
        let mut sin_table = vec![0.0; n * n];
        for k in 0..n {
            for m in 0..n {
                let phase = 2.0 * PI * ((k * m) % n) as f64 / n as f64;
                cos_table[k * n + m] = phase.cos();
                sin_table[k * n + m] = phase.sin();
            }
        }
        let eigen: Vec<f64> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|m| first_row[m] * cos_table[k * n + m])
                    .sum::<f64>()
            })
            .collect();
        let largest = eigen.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let mut amplitudes = Vec::with_capacity(n);
        for (k, &mu) in eigen.iter().enumerate() {
            if mu < -Self::EIGEN_CLIP_TOLERANCE * largest {
                return Err(Error::Numeric(format!(
                    "circulant covariance has negative eigenvalue {mu} at mode {k}"
                )));
            }
            amplitudes.push((mu.max(0.0) / n as f64).sqrt());
        }
        Ok(Self {
            n,
            amplitudes,
            cos_table,
            sin_table,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..n {
            let a = standard_normal(rng) * self.amplitudes[k];
            let b = standard_normal(rng) * self.amplitudes[k];
            let (c, s) = (
                &self.cos_table[k * n..(k + 1) * n],
                &self.sin_table[k * n..(k + 1) * n],
            );
            for m in 0..n {
                out[m] += a * c[m] + b * s[m];
            }
        }
    }
}

/// One draw of the zero-mean periodic Gaussian field on `grid`.
pub fn sample_gaussian_field<R: Rng + ?Sized>(
    prior: &GaussianFieldPrior,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(GaussianFieldSampler::new(prior, grid)?.sample(rng))
}
