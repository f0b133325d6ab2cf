//! Forward models, initial-field sampling, reference simulation and synthetic
//! observations for twin experiments.

mod field;
mod grid;
mod linear;
mod simulate;
mod wave;

pub use field::{sample_gaussian_field, GaussianFieldPrior, GaussianFieldSampler};
pub use grid::{laplacian_periodic, laplacian_periodic_into, GridSpec};
pub use linear::{kalman_bucy_moments, KalmanBucyMoments, LinearGaussianModel};
pub use simulate::{
    euler_maruyama_step, simulate_reference, synthesize_observations, ObservationPath, Trajectory,
};
pub use wave::{wave_drift, TimeScheme, WaveModel, WaveParams, WaveState};

use crate::linalg::Covariance;
use crate::rng::StreamRng;

/// A finite-dimensional SDE `dx = f(x, λ) dt + Q^{1/2} dW` observed through
/// `dy = h(x) dt + R^{1/2} dV`.
pub trait StateModel: Sync {
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    /// Number of entries in the parameter vector `λ`.
    fn param_dim(&self) -> usize;

    /// Evaluates the drift `f(x, λ)` into `out`.
    fn drift(&self, x: &[f64], params: &[f64], out: &mut [f64]);

    /// Deterministic part of one time step. Explicit Euler unless overridden.
    fn advance(&self, x: &[f64], params: &[f64], dt: f64, out: &mut [f64]) {
        self.drift(x, params, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi + *o * dt;
        }
    }

    /// Evaluates the observation operator `h(x)` into `out`.
    fn observe(&self, x: &[f64], out: &mut [f64]);

    /// Adds `scale · Q^{1/2} ξ` to `x` with `ξ` drawn from `rng`.
    fn add_process_noise(&self, x: &mut [f64], scale: f64, rng: &mut StreamRng);

    /// Observation noise covariance `R`.
    fn observation_cov(&self) -> &Covariance;
}
