//! Subcommand implementations. Every command computes all of its outputs
//! before writing any file.

use std::path::{Path, PathBuf};

use enkf_etpf::filter::RunRecord;
use nalgebra::DMatrix;

use crate::config::{Baseline, ExperimentConfig};
use crate::error::CliError;
use crate::experiment::{run_filter, simulate, Model};
use crate::io::{
    couplings_csv, fmt_f64, observations_csv, read_observations, read_trajectory, run_csv, state_labels,
    trajectory_csv, OutputSet,
};
use crate::metrics::{compute, MetricsReport};

pub const TRUTH_FILE: &str = "truth.csv";
pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const RUN_FILE: &str = "run.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const COUPLINGS_FILE: &str = "couplings.csv";
pub const CONFIG_FILE: &str = "config.toml";

/// Writes the reference trajectory and its observations to `out`.
pub fn cmd_simulate(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let model = Model::build(config)?;
    let twin = simulate(config, &model, config.run.seed)?;
    let wave = matches!(model, Model::Wave(_));
    let labels = state_labels(model.as_dyn().state_dim(), wave);
    let mut files = OutputSet::new();
    files.add(out.join(TRUTH_FILE), trajectory_csv(&twin.truth, &labels));
    files.add(out.join(OBSERVATIONS_FILE), observations_csv(&twin.observations));
    files.add(out.join(CONFIG_FILE), config.to_toml_string().into_bytes());
    let paths = files.paths().map(Path::to_path_buf).collect();
    files.commit()?;
    Ok(paths)
}

#[derive(Debug, Clone, Default)]
pub struct AssimilateInputs {
    /// Observation file; when absent the reference run is simulated.
    pub observations: Option<PathBuf>,
    /// Reference trajectory for state errors, used with `observations`.
    pub truth: Option<PathBuf>,
    pub dump_couplings: bool,
}

#[derive(Debug, Clone)]
pub struct AssimilateOutput {
    pub run: RunRecord,
    pub metrics: MetricsReport,
    pub files: Vec<PathBuf>,
}

/// Runs the filter and writes the per-step table, summary and weight history.
pub fn cmd_assimilate(config: &ExperimentConfig, inputs: &AssimilateInputs, out: &Path) -> Result<AssimilateOutput, CliError> {
    let model = Model::build(config)?;
    let seed = config.run.seed;
    let dt = config.run.dt;
    let (observations, truth) = match &inputs.observations {
        Some(path) => {
            let obs = read_observations(path, model.as_dyn().obs_dim(), dt)?;
            let truth = match &inputs.truth {
                Some(t) => {
                    let traj = read_trajectory(t, model.as_dyn().state_dim(), dt)?;
                    if traj.states.len() < obs.n_steps() + 1 {
                        return Err(CliError::input(
                            t,
                            format!("{} rows cannot cover {} observation steps", traj.states.len(), obs.n_steps()),
                        ));
                    }
                    Some(traj)
                }
                None => None,
            };
            (obs, truth)
        }
        None => {
            let twin = simulate(config, &model, seed)?;
            (twin.observations, Some(twin.truth))
        }
    };

    let mut couplings: Vec<(usize, DMatrix<f64>)> = Vec::new();
    let run = run_filter(config, &model, &observations, seed, |step, report| {
        if let (true, Some(r)) = (inputs.dump_couplings, report) {
            couplings.push((step.step, r.coupling.clone()));
        }
    })?;
    let metrics = compute(&run, truth.as_ref(), model.true_velocity(config));

    let mut files = OutputSet::new();
    files.add(out.join(RUN_FILE), run_csv(&metrics));
    files.add(out.join(SUMMARY_FILE), metrics.summary.to_toml_string().into_bytes());
    if config.filter.baseline == Baseline::TwoStage {
        files.add(out.join(WEIGHTS_FILE), weights_csv(&run));
    }
    if inputs.dump_couplings {
        files.add(out.join(COUPLINGS_FILE), couplings_csv(&couplings));
    }
    files.add(out.join(CONFIG_FILE), config.to_toml_string().into_bytes());
    let paths = files.paths().map(Path::to_path_buf).collect();
    files.commit()?;
    Ok(AssimilateOutput { run, metrics, files: paths })
}

fn weights_csv(run: &RunRecord) -> Vec<u8> {
    let l = run.weight_history.first().map_or(0, Vec::len);
    let mut text = String::from("step");
    for i in 0..l {
        text.push_str(&format!(",w_{i}"));
    }
    text.push('\n');
    for (n, w) in run.weight_history.iter().enumerate() {
        text.push_str(&n.to_string());
        for x in w {
            text.push(',');
            text.push_str(&fmt_f64(*x));
        }
        text.push('\n');
    }
    text.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml_str("[model]\nn_points = 8\n[filter]\nhypotheses = 3\nmembers = 4\n[run]\nt_end = 0.05\n")
            .unwrap()
    }

    #[test]
    fn simulate_then_assimilate_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = small();
        cmd_simulate(&c, dir.path()).unwrap();
        let truth = std::fs::read_to_string(dir.path().join(TRUTH_FILE)).unwrap();
        assert_eq!(truth.lines().count(), 1 + 6);
        let inputs = AssimilateInputs {
            observations: Some(dir.path().join(OBSERVATIONS_FILE)),
            truth: Some(dir.path().join(TRUTH_FILE)),
            dump_couplings: true,
        };
        let out = dir.path().join("run");
        let from_files = cmd_assimilate(&c, &inputs, &out).unwrap();
        let in_memory = cmd_assimilate(&c, &AssimilateInputs::default(), &dir.path().join("mem")).unwrap();
        assert_eq!(from_files.run, in_memory.run);
        assert_eq!(
            std::fs::read(out.join(RUN_FILE)).unwrap(),
            std::fs::read(dir.path().join("mem").join(RUN_FILE)).unwrap()
        );
        assert!(out.join(COUPLINGS_FILE).exists());
        assert_eq!(std::fs::read_to_string(out.join(WEIGHTS_FILE)).unwrap().lines().count(), 1 + 6);
    }

    #[test]
    fn corrupted_observations_fail_without_output() {
        let dir = tempfile::tempdir().unwrap();
        let c = small();
        let obs = dir.path().join("obs.csv");
        std::fs::write(&obs, "t,dy_0\n0.0,1.0\n").unwrap();
        let inputs = AssimilateInputs {
            observations: Some(obs),
            ..Default::default()
        };
        let out = dir.path().join("out");
        let err = cmd_assimilate(&c, &inputs, &out).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists());
    }
}
