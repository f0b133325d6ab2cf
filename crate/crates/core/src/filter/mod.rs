//! The two-stage filter: EnKBF propagation of every hypothesis' state
//! ensemble, importance weights over hypotheses, and ETPF resampling when the
//! effective sample size collapses.

mod assimilate;
mod config;
mod enkbf;
mod etpf;
mod mixture;
mod weights;

pub use assimilate::{assimilate, assimilate_joint, assimilate_with_observer, AugmentedModel, RunRecord, StepRecord};
pub use config::{DistanceSpace, FilterConfig, GainScheme, Innovation, NoiseCoupling, TransportBackend};
pub use enkbf::{empirical_cross_cov, enkbf_step};
pub use etpf::{etpf_resample, ResampleReport};
pub use mixture::ParticleMixture;
pub use weights::{effective_sample_size, normalize_log_weights, probabilities, update_log_weights, update_weights};
