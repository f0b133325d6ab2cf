use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use super::StateModel;
use crate::rng::{fill_standard_normal, stream, Purpose, StreamRng};
use crate::{Error, Result};

/// Observation increments `Δy_n` on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPath {
    increments: Vec<Vec<f64>>,
    dt: f64,
}

impl ObservationPath {
    pub fn new(increments: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("observation step must be positive, got {dt}")));
        }
        if let Some(first) = increments.first() {
            let d = first.len();
            if let Some(bad) = increments.iter().find(|r| r.len() != d) {
                return Err(Error::dim("observation increment", d, bad.len()));
            }
        }
        if increments.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("observation path has non-finite entries".into()));
        }
        Ok(Self { increments, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.increments.first().map_or(0, Vec::len)
    }

    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    /// Truncates to the first `n` increments.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            increments: self.increments[..n.min(self.increments.len())].to_vec(),
            dt: self.dt,
        }
    }
}

/// Reference states `x(t_n)`, `n = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |n| n as f64 * self.dt)
    }
}

/// One explicit Euler-Maruyama step
/// `x⁺ = x + f(x) dt + a ⊙ sqrt(dt) ξ`, one standard normal per component.
///
/// `noise_amplitude` holds the per-component amplitude `a`; zero entries
/// still consume their draw so the stream layout does not depend on it.
pub fn euler_maruyama_step<F>(
    state: &[f64],
    drift: F,
    noise_amplitude: &[f64],
    dt: f64,
    rng: &mut StreamRng,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if noise_amplitude.len() != state.len() {
        return Err(Error::dim("noise amplitude", state.len(), noise_amplitude.len()));
    }
    let mut f = vec![0.0; state.len()];
    drift(state, &mut f);
    let mut xi = vec![0.0; state.len()];
    fill_standard_normal(rng, &mut xi);
    let sq = dt.sqrt();
    Ok(state
        .iter()
        .zip(&f)
        .zip(noise_amplitude.iter().zip(&xi))
        .map(|((x, fx), (a, z))| x + fx * dt + a * sq * z)
        .collect())
}

/// Number of steps `T/dt`, requiring `dt` to divide `T` up to roundoff.
pub(crate) fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("final time must be positive, got {t_end}")));
    }
    let n = (t_end / dt).round();
    if n < 1.0 || (n * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::Config(format!("time step {dt} does not divide final time {t_end}")));
    }
    Ok(n as usize)
}

/// Integrates the model from `x0` over `[0, t_end]` with the model's time
/// step plus additive noise `sqrt(dt) Q^{1/2} ξ`, drawing from the
/// `Purpose::Truth` stream of `seed`.
pub fn simulate_reference<M: StateModel + ?Sized>(
    model: &M,
    params: &[f64],
    x0: &[f64],
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    if x0.len() != model.state_dim() {
        return Err(Error::dim("initial state", model.state_dim(), x0.len()));
    }
    if params.len() != model.param_dim() {
        return Err(Error::dim("parameters", model.param_dim(), params.len()));
    }
    let n_steps = step_count(t_end, dt)?;
    let mut rng = stream(seed, Purpose::Truth, 0);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x0.to_vec());
    let sq = dt.sqrt();
    for n in 0..n_steps {
        let mut next = vec![0.0; x0.len()];
        model.advance(&states[n], params, dt, &mut next);
        model.add_process_noise(&mut next, sq, &mut rng);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("reference trajectory non-finite at step {}", n + 1)));
        }
        states.push(next);
    }
    Ok(Trajectory { states, dt })
}

/// `Δy_n = h(x(t_n)) dt + sqrt(dt) R^{1/2} ξ_n` for `n = 0..n_steps`.
pub fn synthesize_observations<M: StateModel + ?Sized>(
    model: &M,
    trajectory: &Trajectory,
    rng: &mut StreamRng,
) -> Result<ObservationPath> {
    let nx = model.state_dim();
    let ny = model.obs_dim();
    let r = model.observation_cov();
    let dt = trajectory.dt;
    let sq = dt.sqrt();
    let mut increments = Vec::with_capacity(trajectory.n_steps());
    let mut h = vec![0.0; ny];
    let mut xi = DVector::zeros(ny);
    for x in &trajectory.states[..trajectory.n_steps()] {
        if x.len() != nx {
            return Err(Error::dim("trajectory state", nx, x.len()));
        }
        model.observe(x, &mut h);
        fill_standard_normal(rng, xi.as_mut_slice());
        let noise = r.sqrt_mul(&xi);
        increments.push(h.iter().zip(noise.iter()).map(|(hv, e)| hv * dt + sq * e).collect());
    }
    ObservationPath::new(increments, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GridSpec, LinearGaussianModel, WaveModel, WaveState};

    #[test]
    fn euler_step_identity_and_decay() {
        let mut rng = stream(0, Purpose::Truth, 0);
        let x = euler_maruyama_step(&[1.0, -2.0], |_, f| f.fill(0.0), &[0.0, 0.0], 0.01, &mut rng).unwrap();
        assert_eq!(x, vec![1.0, -2.0]);
        let x = euler_maruyama_step(
            &[1.0],
            |x, f| f[0] = -x[0],
            &[0.0],
            0.01,
            &mut rng,
        )
        .unwrap();
        assert!((x[0] - 0.99).abs() < 1e-15);
        assert!(euler_maruyama_step(&[1.0], |_, f| f[0] = 0.0, &[0.0], 0.0, &mut rng).is_err());
    }

    #[test]
    fn euler_increment_variance() {
        let (amp, dt, n) = (0.3, 0.01, 100_000);
        let mut rng = stream(11, Purpose::Truth, 0);
        let incs: Vec<f64> = (0..n)
            .map(|_| euler_maruyama_step(&[0.0], |_, f| f[0] = 0.0, &[amp], dt, &mut rng).unwrap()[0])
            .collect();
        let mean = incs.iter().sum::<f64>() / n as f64;
        let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = amp * amp * dt;
        // standard error of a Gaussian sample variance: σ² sqrt(2/(n-1))
        let se = target * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target}");
    }

    #[test]
    fn single_step_and_determinism() {
        let g = GridSpec::periodic_2pi(10).unwrap();
        let m = WaveModel::new(g, 0.001, 0.02, 1e-4).unwrap();
        let x0 = vec![0.1; 20];
        let t = simulate_reference(&m, &[0.0], &x0, 0.01, 0.01, 5).unwrap();
        assert_eq!(t.states.len(), 2);
        let a = simulate_reference(&m, &[0.0], &x0, 1.0, 0.01, 5).unwrap();
        let b = simulate_reference(&m, &[0.0], &x0, 1.0, 0.01, 5).unwrap();
        assert_eq!(a, b);
        assert!(simulate_reference(&m, &[0.0], &x0, 1.0, 0.3, 5).is_err());
    }

    #[test]
    fn observations_noise_free_limit_and_default_noise_level() {
        let g = GridSpec::periodic_2pi(8).unwrap();
        let tiny = WaveModel::new(g, 0.0, 0.0, 1e-300).unwrap();
        let v: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let x: Vec<f64> = core::iter::repeat_n(0.0, 8).chain(v.iter().copied()).collect();
        let traj = Trajectory {
            states: vec![x.clone(), x],
            dt: 0.01,
        };
        let mut rng = stream(1, Purpose::ObservationNoise, 0);
        let path = synthesize_observations(&tiny, &traj, &mut rng).unwrap();
        assert_eq!(path.n_steps(), 1);
        for (dy, vi) in path.increments()[0].iter().zip(&v) {
            assert_eq!(*dy, vi * 0.01);
        }

        // zero trajectory: increments are pure noise with variance R dt
        let model = WaveModel::new(g, 0.0, 0.0, 1e-4).unwrap();
        let zeros = Trajectory {
            states: vec![vec![0.0; 16]; 20_001],
            dt: 0.01,
        };
        let path = synthesize_observations(&model, &zeros, &mut rng).unwrap();
        let all: Vec<f64> = path.increments().iter().flatten().copied().collect();
        let n = all.len() as f64;
        let var = all.iter().map(|x| x * x).sum::<f64>() / n;
        let target = 1e-4 * 0.01;
        assert!((target.sqrt() - 1e-3).abs() < 1e-18);
        assert!((var - target).abs() < 3.0 * target * (2.0 / n).sqrt(), "{var}");
    }

    #[test]
    fn linear_model_reference_is_seeded() {
        let m = LinearGaussianModel::scalar(-0.5, 1.0, 0.02, 0.1).unwrap();
        let a = simulate_reference(&m, &[], &[1.0], 2.0, 0.01, 9).unwrap();
        assert_eq!(a.states.len(), 201);
        let b = simulate_reference(&m, &[], &[1.0], 2.0, 0.01, 10).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn wave_state_flat_roundtrip() {
        let g = GridSpec::new(3, 1.0).unwrap();
        let s = WaveState::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], &g).unwrap();
        assert_eq!(WaveState::from_flat(&s.to_flat()), s);
    }
}
