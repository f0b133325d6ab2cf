//! Stochastic damped wave equation on a periodic grid,
//! `v̇ = c Δu + γ Δv + δ Ẇ`, `u̇ = v`, with `c = exp(λ)`.
//!
//! The flattened state is `[u_0, …, u_{n-1}, v_0, …, v_{n-1}]`. Space-time
//! white noise is discretized as independent per-node increments of
//! amplitude `δ`, with no `1/sqrt(Δx)` rescaling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{GridSpec, StateModel};
use crate::linalg::Covariance;
use crate::rng::{standard_normal, StreamRng};
use crate::{Error, Result};

/// Displacement/velocity pair on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl WaveState {
    pub fn new(u: Vec<f64>, v: Vec<f64>, grid: &GridSpec) -> Result<Self> {
        let s = Self { u, v };
        s.validate(grid)?;
        Ok(s)
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            u: vec![0.0; grid.n_points()],
            v: vec![0.0; grid.n_points()],
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let n = grid.n_points();
        if self.u.len() != n {
            return Err(Error::dim("wave state u", n, self.u.len()));
        }
        if self.v.len() != n {
            return Err(Error::dim("wave state v", n, self.v.len()));
        }
        if self.u.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("wave state has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = self.u.clone();
        x.extend_from_slice(&self.v);
        x
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let n = x.len() / 2;
        Self {
            u: x[..n].to_vec(),
            v: x[n..].to_vec(),
        }
    }

    /// Discrete energy `½ Σ v² Δx + ½ c Σ ((u_{i+1} − u_i)/Δx)² Δx`.
    pub fn energy(&self, velocity: f64, grid: &GridSpec) -> f64 {
        let n = grid.n_points();
        let dx = grid.spacing();
        let kinetic: f64 = self.v.iter().map(|v| v * v).sum::<f64>() * 0.5 * dx;
        let potential: f64 = (0..n)
            .map(|i| {
                let g = (self.u[(i + 1) % n] - self.u[i]) / dx;
                g * g
            })
            .sum::<f64>()
            * 0.5
            * velocity
            * dx;
        kinetic + potential
    }
}

/// Wave parameters: `c = exp(log_velocity)`, damping `γ`, noise amplitude `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub log_velocity: f64,
    pub damping: f64,
    pub noise_amplitude: f64,
}

impl WaveParams {
    pub fn velocity(&self) -> f64 {
        self.log_velocity.exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.log_velocity.is_finite() {
            return Err(Error::Config("log velocity must be finite".into()));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::Config(format!("damping must be nonnegative, got {}", self.damping)));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "noise amplitude must be nonnegative, got {}",
                self.noise_amplitude
            )));
        }
        Ok(())
    }
}

/// Returns `(du/dt, dv/dt) = (v, c Δu + γ Δv)`.
pub fn wave_drift(state: &WaveState, params: &WaveParams, grid: &GridSpec) -> Result<WaveState> {
    state.validate(grid)?;
    let n = grid.n_points();
    let mut out = vec![0.0; 2 * n];
    drift_flat(&state.to_flat(), params.velocity(), params.damping, grid, &mut out);
    Ok(WaveState::from_flat(&out))
}

fn drift_flat(x: &[f64], velocity: f64, damping: f64, grid: &GridSpec, out: &mut [f64]) {
    let n = grid.n_points();
    let (u, v) = x.split_at(n);
    let (du, dv) = out.split_at_mut(n);
    du.copy_from_slice(v);
    let inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
    for i in 0..n {
        let l = (i + n - 1) % n;
        let r = (i + 1) % n;
        let lap_u = (u[r] - 2.0 * u[i] + u[l]) * inv_dx2;
        let lap_v = (v[r] - 2.0 * v[i] + v[l]) * inv_dx2;
        dv[i] = velocity * lap_u + damping * lap_v;
    }
}

/// Deterministic time-stepping of the wave system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    /// `u⁺ = u + v dt`, `v⁺ = v + (cΔu + γΔv) dt`.
    ExplicitEuler,
    /// `v⁺ = v + (cΔu + γΔv) dt`, `u⁺ = u + v⁺ dt`. First order and stable for
    /// `dt < Δx / sqrt(c)`; explicit Euler amplifies the highest grid mode by
    /// `sqrt(1 + 4c dt²/Δx²)` per step.
    #[default]
    SymplecticEuler,
}

/// The wave equation as a [`StateModel`] with parameter vector `[λ]` and
/// observations of `v` at selected nodes.
#[derive(Debug, Clone)]
pub struct WaveModel {
    grid: GridSpec,
    damping: f64,
    noise_amplitude: f64,
    scheme: TimeScheme,
    observed: Vec<usize>,
    obs_cov: Covariance,
}

impl WaveModel {
    /// Observes `v` at every node with noise covariance `obs_variance · I`.
    pub fn new(grid: GridSpec, damping: f64, noise_amplitude: f64, obs_variance: f64) -> Result<Self> {
        let all: Vec<usize> = (0..grid.n_points()).collect();
        Self::with_observed_nodes(grid, damping, noise_amplitude, obs_variance, all)
    }

    pub fn with_observed_nodes(
        grid: GridSpec,
        damping: f64,
        noise_amplitude: f64,
        obs_variance: f64,
        observed: Vec<usize>,
    ) -> Result<Self> {
        WaveParams {
            log_velocity: 0.0,
            damping,
            noise_amplitude,
        }
        .validate()?;
        if observed.is_empty() {
            return Err(Error::Config("at least one node must be observed".into()));
        }
        if let Some(&bad) = observed.iter().find(|&&i| i >= grid.n_points()) {
            return Err(Error::Config(format!("observed node {bad} outside grid")));
        }
        if !(obs_variance > 0.0 && obs_variance.is_finite()) {
            return Err(Error::Config(format!(
                "observation variance must be positive, got {obs_variance}"
            )));
        }
        let obs_cov = Covariance::scaled_identity(observed.len(), obs_variance)?;
        Ok(Self {
            grid,
            damping,
            noise_amplitude,
            scheme: TimeScheme::default(),
            observed,
            obs_cov,
        })
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scheme(&self) -> TimeScheme {
        self.scheme
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn noise_amplitude(&self) -> f64 {
        self.noise_amplitude
    }

    pub fn observed_nodes(&self) -> &[usize] {
        &self.observed
    }
}

impl StateModel for WaveModel {
    fn state_dim(&self) -> usize {
        2 * self.grid.n_points()
    }

    fn obs_dim(&self) -> usize {
        self.observed.len()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], params: &[f64], out: &mut [f64]) {
        drift_flat(x, params[0].exp(), self.damping, &self.grid, out);
    }

    fn advance(&self, x: &[f64], params: &[f64], dt: f64, out: &mut [f64]) {
        self.drift(x, params, out);
        let n = self.grid.n_points();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi + *o * dt;
        }
        if self.scheme == TimeScheme::SymplecticEuler {
            let (u_new, v_new) = out.split_at_mut(n);
            for (un, (u, vn)) in u_new.iter_mut().zip(x[..n].iter().zip(v_new.iter())) {
                *un = u + vn * dt;
            }
        }
    }

    fn observe(&self, x: &[f64], out: &mut [f64]) {
        let n = self.grid.n_points();
        for (o, &i) in out.iter_mut().zip(&self.observed) {
            *o = x[n + i];
        }
    }

    fn add_process_noise(&self, x: &mut [f64], scale: f64, rng: &mut StreamRng) {
        let n = self.grid.n_points();
        let amp = self.noise_amplitude * scale;
        for v in x[n..].iter_mut() {
            *v += amp * standard_normal(rng);
        }
    }

    fn observation_cov(&self) -> &Covariance {
        &self.obs_cov
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(log_velocity: f64, damping: f64) -> WaveParams {
        WaveParams {
            log_velocity,
            damping,
            noise_amplitude: 0.0,
        }
    }

    #[test]
    fn equilibrium_and_free_drift() {
        let g = GridSpec::periodic_2pi(8).unwrap();
        let s = WaveState::new(vec![3.0; 8], vec![0.0; 8], &g).unwrap();
        let d = wave_drift(&s, &params(0.7, 0.1), &g).unwrap();
        assert!(d.u.iter().chain(&d.v).all(|x| *x == 0.0));

        let s = WaveState::new(vec![0.0; 8], vec![2.5; 8], &g).unwrap();
        let d = wave_drift(&s, &params(0.0, 0.0), &g).unwrap();
        assert_eq!(d.u, vec![2.5; 8]);
        assert!(d.v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn cosine_mode_uses_discrete_eigenvalue() {
        let g = GridSpec::periodic_2pi(32).unwrap();
        let dx = g.spacing();
        let u: Vec<f64> = g.nodes().map(f64::cos).collect();
        let s = WaveState::new(u.clone(), vec![0.0; 32], &g).unwrap();
        let d = wave_drift(&s, &params(0.0, 0.0), &g).unwrap();
        let factor = -(2.0 - 2.0 * dx.cos()) / (dx * dx);
        for (dv, ui) in d.v.iter().zip(&u) {
            assert!((dv - factor * ui).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_state_rejected() {
        let g = GridSpec::periodic_2pi(4).unwrap();
        let s = WaveState {
            u: vec![0.0, f64::NAN, 0.0, 0.0],
            v: vec![0.0; 4],
        };
        assert!(matches!(wave_drift(&s, &params(0.0, 0.0), &g), Err(Error::Numeric(_))));
    }

    #[test]
    fn symplectic_step_uses_updated_velocity() {
        let g = GridSpec::periodic_2pi(16).unwrap();
        let m = WaveModel::new(g, 0.0, 0.0, 1.0).unwrap();
        let u: Vec<f64> = g.nodes().map(f64::sin).collect();
        let x: Vec<f64> = u.iter().copied().chain(core::iter::repeat_n(0.0, 16)).collect();
        let mut out = vec![0.0; 32];
        m.advance(&x, &[0.0], 0.1, &mut out);
        for i in 0..16 {
            assert!((out[i] - (x[i] + 0.1 * out[16 + i])).abs() < 1e-15);
        }
        let explicit = m.clone().with_scheme(TimeScheme::ExplicitEuler);
        explicit.advance(&x, &[0.0], 0.1, &mut out);
        assert_eq!(&out[..16], &x[..16]);
    }

    #[test]
    fn observes_selected_velocity_nodes() {
        let g = GridSpec::new(4, 1.0).unwrap();
        let m = WaveModel::with_observed_nodes(g, 0.0, 0.0, 1.0, vec![1, 3]).unwrap();
        let mut y = [0.0; 2];
        m.observe(&[0.0, 0.0, 0.0, 0.0, 10.0, 11.0, 12.0, 13.0], &mut y);
        assert_eq!(y, [11.0, 13.0]);
        assert!(WaveModel::with_observed_nodes(g, 0.0, 0.0, 1.0, vec![4]).is_err());
    }
}
