//! Sequential state and parameter estimation for high-dimensional SDEs.
//!
//! The estimator keeps `L` parameter hypotheses, each carrying an ensemble of
//! `M` state samples. State ensembles are propagated with an ensemble
//! Kalman-Bucy filter (parameters held fixed), the hypotheses are reweighted
//! by their observation likelihood, and once the effective sample size drops
//! below a threshold the hypotheses are replaced by an optimal-transport
//! transform of the weighted ensemble (ensemble transform particle filter).
//!
//! The crate is `no_std` (with `alloc`). File formats, configuration and the
//! command line live in the companion `enkf-etpf` crate.
//!
//! - [`models`]: forward models, reference simulation, synthetic observations
//!   and the exact Kalman-Bucy recursion used as a linear-Gaussian oracle.
//! - [`transport`]: cost matrices, an exact transportation simplex, Sinkhorn
//!   scaling, free-support barycenters and permutation extraction.
//! - [`filter`]: the particle mixture, EnKBF step, weight dynamics, ETPF
//!   resampling and the assimilation driver.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod filter;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
