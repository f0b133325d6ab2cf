use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use enkf_etpf_cli::commands::{cmd_assimilate, cmd_simulate, AssimilateInputs};
use enkf_etpf_cli::config::{Baseline, InnovationKind, TransportKind};
use enkf_etpf_cli::ot_check::validate_ot;
use enkf_etpf_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "enkf-etpf", version, about = "Twin experiments with a two-stage EnKBF/ETPF parameter filter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    JointEnkbf,
    TwoStage,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnovationArg {
    Det,
    Stoch,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Lp,
    Sinkhorn,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the reference trajectory and its observations.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the filter and write the per-step table and summary.
    Assimilate {
        #[command(flatten)]
        common: Common,
        /// Observation file from `simulate`; simulated in memory when omitted.
        #[arg(long)]
        obs: Option<PathBuf>,
        /// Reference trajectory for state errors (with --obs).
        #[arg(long, requires = "obs")]
        truth: Option<PathBuf>,
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
        #[arg(long, value_enum)]
        innovation: Option<InnovationArg>,
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
        /// Also write every resampling coupling to couplings.csv.
        #[arg(long)]
        dump_couplings: bool,
    },
    /// Check the transport solvers on random instances.
    ValidateOt {
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.run.out_dir.clone());
    Ok((config, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let (config, out) = load(&common)?;
            for path in cmd_simulate(&config, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Assimilate {
            common,
            obs,
            truth,
            baseline,
            innovation,
            transport,
            dump_couplings,
        } => {
            let (mut config, out) = load(&common)?;
            if let Some(b) = baseline {
                config.filter.baseline = match b {
                    BaselineArg::JointEnkbf => Baseline::JointEnkbf,
                    BaselineArg::TwoStage => Baseline::TwoStage,
                };
            }
            if let Some(i) = innovation {
                config.filter.innovation = match i {
                    InnovationArg::Det => InnovationKind::Deterministic,
                    InnovationArg::Stoch => InnovationKind::Stochastic,
                };
            }
            if let Some(t) = transport {
                config.filter.transport = match t {
                    TransportArg::Lp => TransportKind::ExactLp,
                    TransportArg::Sinkhorn => TransportKind::Sinkhorn,
                };
            }
            config.validate()?;
            let inputs = AssimilateInputs {
                observations: obs,
                truth,
                dump_couplings,
            };
            let result = cmd_assimilate(&config, &inputs, &out)?;
            print!("{}", result.metrics.summary.to_toml_string());
            for path in &result.files {
                println!("# wrote {}", path.display());
            }
        }
        Command::ValidateOt { size, trials, seed } => {
            if size == 0 {
                return Err(CliError::Config("size must be at least 1".into()));
            }
            print!("{}", validate_ot(size, trials, seed)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
