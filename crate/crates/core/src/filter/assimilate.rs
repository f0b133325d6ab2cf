use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use super::config::FilterConfig;
use super::enkbf::enkbf_step;
use super::etpf::{etpf_resample, ResampleReport};
use super::mixture::ParticleMixture;
use super::weights::{effective_sample_size, update_log_weights};
use crate::linalg::{column_mean, Covariance};
use crate::models::{ObservationPath, StateModel};
use crate::rng::StreamRng;
use crate::{Error, Result};

/// Filter output after one observation interval.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step number; the record describes time `step · dt`.
    pub step: usize,
    pub time: f64,
    /// `λ̄ = Σᵢ wⁱ λⁱ` at the end of the step.
    pub parameter_mean: Vec<f64>,
    /// `Σᵢ wⁱ exp(λⁱ)`; for a log-velocity parameter this is the velocity
    /// estimate `c̄`.
    pub exp_parameter_mean: Vec<f64>,
    pub block_state_means: Vec<DVector<f64>>,
    /// `Σᵢ wⁱ x̄ⁱ`.
    pub state_mean: DVector<f64>,
    /// ESS after the weight update, before any resampling.
    pub ess: f64,
    pub resampled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub steps: Vec<StepRecord>,
    /// Weights at the start and at the end of every step (`n_steps + 1` rows).
    pub weight_history: Vec<Vec<f64>>,
    /// The normalized log-weights behind `weight_history`, row for row.
    pub log_weight_history: Vec<Vec<f64>>,
    pub final_mixture: ParticleMixture,
}

impl RunRecord {
    pub fn resample_steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter(|s| s.resampled).map(|s| s.step)
    }
}

struct Summary {
    parameter_mean: Vec<f64>,
    exp_parameter_mean: Vec<f64>,
    block_state_means: Vec<DVector<f64>>,
    state_mean: DVector<f64>,
}

fn mixture_summary(m: &ParticleMixture) -> Summary {
    Summary {
        parameter_mean: m.parameter_mean(),
        exp_parameter_mean: m.exp_parameter_mean(),
        block_state_means: m.block_means(),
        state_mean: m.weighted_state_mean(),
    }
}

/// Runs the two-stage filter over every increment of `observations`.
pub fn assimilate<M: StateModel + ?Sized>(
    model: &M,
    observations: &ObservationPath,
    initial: ParticleMixture,
    config: &FilterConfig,
    seed: u64,
) -> Result<RunRecord> {
    assimilate_with_observer(model, observations, initial, config, seed, |_, _| {})
}

/// As [`assimilate`], calling `observer` after every step with the new record
/// and, on resampling steps, the resampling report.
pub fn assimilate_with_observer<M, F>(
    model: &M,
    observations: &ObservationPath,
    initial: ParticleMixture,
    config: &FilterConfig,
    seed: u64,
    observer: F,
) -> Result<RunRecord>
where
    M: StateModel + ?Sized,
    F: FnMut(&StepRecord, Option<&ResampleReport>),
{
    run(model, observations, initial, config, seed, &mixture_summary, observer)
}

fn run<M, F>(
    model: &M,
    observations: &ObservationPath,
    mut mixture: ParticleMixture,
    config: &FilterConfig,
    seed: u64,
    summarize: &dyn Fn(&ParticleMixture) -> Summary,
    mut observer: F,
) -> Result<RunRecord>
where
    M: StateModel + ?Sized,
    F: FnMut(&StepRecord, Option<&ResampleReport>),
{
    let l = mixture.n_hypotheses();
    config.validate(Some(l))?;
    if (observations.dt() - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::Config(format!(
            "observation interval {} differs from filter dt {}",
            observations.dt(),
            config.dt
        )));
    }
    if observations.obs_dim() != model.obs_dim() {
        return Err(Error::dim("observation dimension", model.obs_dim(), observations.obs_dim()));
    }
    let threshold = config.ess_threshold(l);
    let r = model.observation_cov();
    let start = mixture.time_index();

    let mut steps = Vec::with_capacity(observations.n_steps());
    let mut weight_history = Vec::with_capacity(observations.n_steps() + 1);
    let mut log_weight_history = Vec::with_capacity(observations.n_steps() + 1);
    weight_history.push(mixture.weights().to_vec());
    log_weight_history.push(mixture.log_weights().to_vec());

    for (n, dy) in observations.increments().iter().enumerate() {
        let number = n + 1;
        let index = start + n;
        let h_means = enkbf_step(model, &mut mixture, dy, config, seed, index).map_err(|e| e.at_step(number))?;
        let log_w = update_log_weights(mixture.log_weights(), &h_means, dy, r, config.dt)
            .map_err(|e| e.at_step(number))?;
        mixture.set_log_weights(log_w);
        check_simplex(mixture.weights()).map_err(|e| e.at_step(number))?;
        let ess = effective_sample_size(mixture.weights());

        let report = if l > 1 && ess <= threshold {
            Some(etpf_resample(&mut mixture, config).map_err(|e| e.at_step(number))?)
        } else {
            None
        };

        let s = summarize(&mixture);
        let record = StepRecord {
            step: number,
            time: (index + 1) as f64 * config.dt,
            parameter_mean: s.parameter_mean,
            exp_parameter_mean: s.exp_parameter_mean,
            block_state_means: s.block_state_means,
            state_mean: s.state_mean,
            ess,
            resampled: report.is_some(),
        };
        observer(&record, report.as_ref());
        steps.push(record);
        weight_history.push(mixture.weights().to_vec());
        log_weight_history.push(mixture.log_weights().to_vec());
    }
    Ok(RunRecord {
        steps,
        weight_history,
        log_weight_history,
        final_mixture: mixture,
    })
}

fn check_simplex(w: &[f64]) -> Result<()> {
    let total: f64 = w.iter().sum();
    if w.iter().any(|x| x.is_nan() || *x < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Degeneracy {
            step: None,
            detail: format!("weights left the simplex (sum {total})"),
        });
    }
    Ok(())
}

/// A model with its parameters appended to the state as constant components,
/// `z = (x, λ)`, for the joint-state EnKBF baseline.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedModel<'a, M: ?Sized> {
    base: &'a M,
}

impl<'a, M: StateModel + ?Sized> AugmentedModel<'a, M> {
    pub fn new(base: &'a M) -> Self {
        Self { base }
    }

    fn split(&self) -> usize {
        self.base.state_dim()
    }
}

impl<M: StateModel + ?Sized> StateModel for AugmentedModel<'_, M> {
    fn state_dim(&self) -> usize {
        self.base.state_dim() + self.base.param_dim()
    }

    fn obs_dim(&self) -> usize {
        self.base.obs_dim()
    }

    fn param_dim(&self) -> usize {
        0
    }

    fn drift(&self, z: &[f64], _params: &[f64], out: &mut [f64]) {
        let nx = self.split();
        self.base.drift(&z[..nx], &z[nx..], &mut out[..nx]);
        out[nx..].fill(0.0);
    }

    fn advance(&self, z: &[f64], _params: &[f64], dt: f64, out: &mut [f64]) {
        let nx = self.split();
        self.base.advance(&z[..nx], &z[nx..], dt, &mut out[..nx]);
        out[nx..].copy_from_slice(&z[nx..]);
    }

    fn observe(&self, z: &[f64], out: &mut [f64]) {
        self.base.observe(&z[..self.split()], out);
    }

    fn add_process_noise(&self, z: &mut [f64], scale: f64, rng: &mut StreamRng) {
        let nx = self.split();
        self.base.add_process_noise(&mut z[..nx], scale, rng);
    }

    fn observation_cov(&self) -> &Covariance {
        self.base.observation_cov()
    }
}

/// Baseline: a single EnKBF over the augmented state `(x, λ)`, one member per
/// column of `ensemble` with parameters `parameters[k]`. No weights and no
/// resampling; the parameters are corrected through their cross-covariance
/// with the predicted observations.
pub fn assimilate_joint<M: StateModel + ?Sized>(
    model: &M,
    observations: &ObservationPath,
    parameters: &[Vec<f64>],
    ensemble: &DMatrix<f64>,
    config: &FilterConfig,
    seed: u64,
) -> Result<RunRecord> {
    let (nx, k) = ensemble.shape();
    let np = model.param_dim();
    if nx != model.state_dim() {
        return Err(Error::dim("ensemble state dimension", model.state_dim(), nx));
    }
    if parameters.len() != k {
        return Err(Error::dim("joint ensemble parameters", k, parameters.len()));
    }
    let mut z = DMatrix::zeros(nx + np, k);
    for (j, p) in parameters.iter().enumerate() {
        if p.len() != np {
            return Err(Error::dim("parameter vector", np, p.len()));
        }
        z.view_mut((0, j), (nx, 1)).copy_from(&ensemble.column(j));
        z.view_mut((nx, j), (np, 1)).copy_from_slice(p);
    }
    let augmented = AugmentedModel::new(model);
    let mixture = ParticleMixture::new(vec![vec![]], vec![z])?;
    let summarize = |m: &ParticleMixture| {
        let z = &m.states()[0];
        let lam = z.rows(nx, np).into_owned();
        let exp_mean = column_mean(&lam.map(|v| v.exp()));
        let x_mean = column_mean(&z.rows(0, nx).into_owned());
        Summary {
            parameter_mean: column_mean(&lam).iter().copied().collect(),
            exp_parameter_mean: exp_mean.iter().copied().collect(),
            block_state_means: vec![x_mean.clone()],
            state_mean: x_mean,
        }
    };
    run(&augmented, observations, mixture, config, seed, &summarize, |_, _| {})
}
