//! Experiment configuration, read from TOML. Every field has a default, so an
//! empty file describes the reference wave-equation experiment.

use std::path::{Path, PathBuf};

use enkf_etpf::filter::{DistanceSpace, FilterConfig, GainScheme, Innovation, NoiseCoupling, TransportBackend};
use enkf_etpf::models::TimeScheme;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub prior: PriorSection,
    pub filter: FilterSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Wave,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    #[default]
    SymplecticEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub n_points: usize,
    pub domain_length: f64,
    pub c_true: f64,
    pub damping: f64,
    pub noise_amplitude: f64,
    pub obs_variance: f64,
    pub scheme: Scheme,
    pub linear: LinearSection,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Wave,
            n_points: 100,
            domain_length: 2.0 * std::f64::consts::PI,
            c_true: 1.0,
            damping: 0.001,
            noise_amplitude: 0.02,
            obs_variance: 1e-4,
            scheme: Scheme::default(),
            linear: LinearSection::default(),
        }
    }
}

/// Scalar `dx = a x dt + sqrt(q) dW`, `dy = h x dt + sqrt(r) dV`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSection {
    pub a: f64,
    pub h: f64,
    pub q: f64,
    pub r: f64,
    pub initial_mean: f64,
    pub initial_variance: f64,
    /// Initial state of the reference trajectory.
    pub x0: f64,
}

impl Default for LinearSection {
    fn default() -> Self {
        Self {
            a: -0.5,
            h: 1.0,
            q: 0.02,
            r: 0.1,
            initial_mean: 0.0,
            initial_variance: 1.0,
            x0: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub field_variance: f64,
    pub field_length_scale: f64,
    pub log_velocity_mean: f64,
    /// Standard deviation of the Gaussian prior on `λ = ln c`.
    pub log_velocity_std: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        Self {
            field_variance: 1.0,
            field_length_scale: 1.0,
            log_velocity_mean: 0.0,
            log_velocity_std: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    #[default]
    TwoStage,
    JointEnkbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InnovationKind {
    #[default]
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GainKind {
    ForwardEuler,
    #[default]
    LinearlyImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    #[default]
    Parameters,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    #[default]
    ExactLp,
    Sinkhorn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    Shared,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub hypotheses: usize,
    pub members: usize,
    pub baseline: Baseline,
    pub innovation: InnovationKind,
    pub gain: GainKind,
    pub ess_threshold_fraction: f64,
    pub distance_space: DistanceKind,
    pub barycenter_rearrangement: bool,
    pub transport: TransportKind,
    pub noise_coupling: NoiseKind,
    pub parallel: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            hypotheses: 20,
            members: 100,
            baseline: Baseline::default(),
            innovation: InnovationKind::default(),
            gain: GainKind::default(),
            ess_threshold_fraction: 0.75,
            distance_space: DistanceKind::default(),
            barycenter_rearrangement: false,
            transport: TransportKind::default(),
            noise_coupling: NoiseKind::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: 4.0,
            dt: 0.01,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be nonnegative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        match m.kind {
            ModelKind::Wave => {
                if m.n_points < 3 {
                    return Err(invalid("model.n_points", format!("must be at least 3, got {}", m.n_points)));
                }
                positive("model.domain_length", m.domain_length)?;
                positive("model.c_true", m.c_true)?;
                nonnegative("model.damping", m.damping)?;
                nonnegative("model.noise_amplitude", m.noise_amplitude)?;
                positive("model.obs_variance", m.obs_variance)?;
                positive("prior.field_variance", self.prior.field_variance)?;
                positive("prior.field_length_scale", self.prior.field_length_scale)?;
                if !self.prior.log_velocity_mean.is_finite() {
                    return Err(invalid("prior.log_velocity_mean", "must be finite"));
                }
                nonnegative("prior.log_velocity_std", self.prior.log_velocity_std)?;
            }
            ModelKind::Linear => {
                let l = &m.linear;
                for (name, v) in [("model.linear.a", l.a), ("model.linear.h", l.h), ("model.linear.initial_mean", l.initial_mean), ("model.linear.x0", l.x0)] {
                    if !v.is_finite() {
                        return Err(invalid(name, "must be finite"));
                    }
                }
                nonnegative("model.linear.q", l.q)?;
                positive("model.linear.r", l.r)?;
                nonnegative("model.linear.initial_variance", l.initial_variance)?;
            }
        }
        let f = &self.filter;
        if f.hypotheses == 0 {
            return Err(invalid("filter.hypotheses", "must be at least 1"));
        }
        if f.members < 2 {
            return Err(invalid("filter.members", format!("must be at least 2, got {}", f.members)));
        }
        positive("run.t_end", self.run.t_end)?;
        positive("run.dt", self.run.dt)?;
        self.filter_config()
            .validate(Some(f.hypotheses))
            .map_err(|e| invalid("filter", e))?;
        if self.n_steps() == 0 {
            return Err(invalid("run.t_end", "shorter than one time step"));
        }
        Ok(())
    }

    /// Number of observation intervals in `[0, t_end]`.
    pub fn n_steps(&self) -> usize {
        (self.run.t_end / self.run.dt + 1e-9).floor() as usize
    }

    pub fn filter_config(&self) -> FilterConfig {
        let f = &self.filter;
        FilterConfig {
            innovation: match f.innovation {
                InnovationKind::Deterministic => Innovation::Deterministic,
                InnovationKind::Stochastic => Innovation::Stochastic,
            },
            gain: match f.gain {
                GainKind::ForwardEuler => GainScheme::ForwardEuler,
                GainKind::LinearlyImplicit => GainScheme::LinearlyImplicit,
            },
            ess_threshold_fraction: f.ess_threshold_fraction,
            distance_space: match f.distance_space {
                DistanceKind::Parameters => DistanceSpace::Parameters,
                DistanceKind::Extended => DistanceSpace::Extended,
            },
            use_barycenter_rearrangement: f.barycenter_rearrangement,
            transport: match f.transport {
                TransportKind::ExactLp => TransportBackend::ExactLp,
                TransportKind::Sinkhorn => TransportBackend::Sinkhorn,
            },
            noise_coupling: match f.noise_coupling {
                NoiseKind::Shared => NoiseCoupling::Shared,
                NoiseKind::Independent => NoiseCoupling::Independent,
            },
            parallel: f.parallel,
            dt: self.run.dt,
        }
    }

    pub fn time_scheme(&self) -> TimeScheme {
        match self.model.scheme {
            Scheme::ExplicitEuler => TimeScheme::ExplicitEuler,
            Scheme::SymplecticEuler => TimeScheme::SymplecticEuler,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c.model.n_points, 100);
        assert_eq!(c.model.obs_variance, 1e-4);
        assert_eq!((c.filter.members, c.filter.hypotheses), (100, 20));
        assert_eq!(c.n_steps(), 400);
        assert_eq!(c.filter_config().ess_threshold(20), 15.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::default();
        c.filter.transport = TransportKind::Sinkhorn;
        c.model.kind = ModelKind::Linear;
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_the_field() {
        let err = ExperimentConfig::from_toml_str("[model]\nn_points = 2\n").unwrap_err();
        assert!(err.to_string().contains("model.n_points"), "{err}");
        let err = ExperimentConfig::from_toml_str("[filter]\nmembers = 1\n").unwrap_err();
        assert!(err.to_string().contains("filter.members"), "{err}");
        let err = ExperimentConfig::from_toml_str("[run]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn single_step_run() {
        let c = ExperimentConfig::from_toml_str("[run]\nt_end = 0.01\n").unwrap();
        assert_eq!(c.n_steps(), 1);
    }
}
