//! Twin-experiment pipeline: build the model, simulate a reference run and
//! its observations, draw the prior mixture and run the filter.

use enkf_etpf::filter::{assimilate_joint, assimilate_with_observer, ParticleMixture, ResampleReport, RunRecord, StepRecord};
use enkf_etpf::models::{
    simulate_reference, synthesize_observations, GaussianFieldPrior, GaussianFieldSampler, GridSpec,
    LinearGaussianModel, ObservationPath, StateModel, Trajectory, WaveModel,
};
use enkf_etpf::rng::{standard_normal, stream, Purpose};
use nalgebra::DMatrix;

use crate::config::{Baseline, ExperimentConfig, ModelKind};
use crate::error::CliError;

#[derive(Debug, Clone)]
pub enum Model {
    Wave(WaveModel),
    Linear(LinearGaussianModel),
}

impl Model {
    pub fn build(config: &ExperimentConfig) -> Result<Self, CliError> {
        config.validate()?;
        let m = &config.model;
        Ok(match m.kind {
            ModelKind::Wave => {
                let grid = GridSpec::new(m.n_points, m.domain_length)?;
                Model::Wave(
                    WaveModel::new(grid, m.damping, m.noise_amplitude, m.obs_variance)?.with_scheme(config.time_scheme()),
                )
            }
            ModelKind::Linear => {
                let l = &m.linear;
                Model::Linear(LinearGaussianModel::scalar(l.a, l.h, l.q, l.r)?)
            }
        })
    }

    pub fn as_dyn(&self) -> &dyn StateModel {
        match self {
            Model::Wave(w) => w,
            Model::Linear(l) => l,
        }
    }

    /// Parameters of the reference run.
    pub fn true_parameters(&self, config: &ExperimentConfig) -> Vec<f64> {
        match self {
            Model::Wave(_) => vec![config.model.c_true.ln()],
            Model::Linear(_) => vec![],
        }
    }

    /// Velocity of the reference run, for models that have one.
    pub fn true_velocity(&self, config: &ExperimentConfig) -> Option<f64> {
        match self {
            Model::Wave(_) => Some(config.model.c_true),
            Model::Linear(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwinData {
    pub truth: Trajectory,
    pub observations: ObservationPath,
}

fn field_sampler(config: &ExperimentConfig, model: &WaveModel) -> Result<GaussianFieldSampler, CliError> {
    let prior = GaussianFieldPrior {
        variance: config.prior.field_variance,
        length_scale: config.prior.field_length_scale,
    };
    Ok(GaussianFieldSampler::new(&prior, model.grid())?)
}

/// Reference trajectory on `[0, t_end]` and observation increments along it.
pub fn simulate(config: &ExperimentConfig, model: &Model, seed: u64) -> Result<TwinData, CliError> {
    let dt = config.run.dt;
    let x0 = match model {
        Model::Wave(w) => {
            let sampler = field_sampler(config, w)?;
            let mut rng = stream(seed, Purpose::InitialTruthField, 0);
            let mut x = sampler.sample(&mut rng);
            x.extend(sampler.sample(&mut rng));
            x
        }
        Model::Linear(_) => vec![config.model.linear.x0],
    };
    let t_end = config.n_steps() as f64 * dt;
    let truth = simulate_reference(model.as_dyn(), &model.true_parameters(config), &x0, t_end, dt, seed)?;
    let mut rng = stream(seed, Purpose::ObservationNoise, 0);
    let observations = synthesize_observations(model.as_dyn(), &truth, &mut rng)?;
    Ok(TwinData { truth, observations })
}

/// `count` members drawn from the initial-state prior, as columns.
pub fn prior_ensemble(config: &ExperimentConfig, model: &Model, count: usize, seed: u64) -> Result<DMatrix<f64>, CliError> {
    let nx = model.as_dyn().state_dim();
    let mut ens = DMatrix::zeros(nx, count);
    match model {
        Model::Wave(w) => {
            let sampler = field_sampler(config, w)?;
            let n = sampler.len();
            for (j, mut col) in ens.column_iter_mut().enumerate() {
                let mut rng = stream(seed, Purpose::InitialEnsemble, j as u64);
                let x = col.as_mut_slice();
                sampler.sample_into(&mut rng, &mut x[..n]);
                sampler.sample_into(&mut rng, &mut x[n..]);
            }
        }
        Model::Linear(_) => {
            let l = &config.model.linear;
            let sd = l.initial_variance.sqrt();
            for (j, mut col) in ens.column_iter_mut().enumerate() {
                let mut rng = stream(seed, Purpose::InitialEnsemble, j as u64);
                col[0] = l.initial_mean + sd * standard_normal(&mut rng);
            }
        }
    }
    Ok(ens)
}

/// `count` parameter vectors drawn from the parameter prior.
pub fn prior_parameters(config: &ExperimentConfig, model: &Model, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match model {
        Model::Wave(_) => {
            let mut rng = stream(seed, Purpose::ParameterPrior, 0);
            let (mean, sd) = (config.prior.log_velocity_mean, config.prior.log_velocity_std);
            (0..count).map(|_| vec![mean + sd * standard_normal(&mut rng)]).collect()
        }
        Model::Linear(_) => vec![vec![]; count],
    }
}

/// Initial mixture: `L` parameter draws, each carrying the same `M`-member
/// state ensemble.
pub fn initial_mixture(config: &ExperimentConfig, model: &Model, seed: u64) -> Result<ParticleMixture, CliError> {
    let f = &config.filter;
    let ensemble = prior_ensemble(config, model, f.members, seed)?;
    let params = prior_parameters(config, model, f.hypotheses, seed);
    Ok(ParticleMixture::with_shared_ensemble(params, ensemble)?)
}

/// Runs the configured filter on `observations`. The joint baseline uses
/// `L · M` members, each with its own parameter draw.
pub fn run_filter<F>(
    config: &ExperimentConfig,
    model: &Model,
    observations: &ObservationPath,
    seed: u64,
    observer: F,
) -> Result<RunRecord, CliError>
where
    F: FnMut(&StepRecord, Option<&ResampleReport>),
{
    if observations.obs_dim() != model.as_dyn().obs_dim() {
        return Err(CliError::Config(format!(
            "observations have {} components, model observes {}",
            observations.obs_dim(),
            model.as_dyn().obs_dim()
        )));
    }
    let filter = config.filter_config();
    match config.filter.baseline {
        Baseline::TwoStage => {
            let mixture = initial_mixture(config, model, seed)?;
            Ok(assimilate_with_observer(model.as_dyn(), observations, mixture, &filter, seed, observer)?)
        }
        Baseline::JointEnkbf => {
            let k = config.filter.hypotheses * config.filter.members;
            let ensemble = prior_ensemble(config, model, k, seed)?;
            let params = prior_parameters(config, model, k, seed);
            Ok(assimilate_joint(model.as_dyn(), observations, &params, &ensemble, &filter, seed)?)
        }
    }
}
