use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use super::weights::probabilities;
use crate::linalg::column_mean;
use crate::{Error, Result};

/// `L` weighted parameter hypotheses, each with an ensemble of `M` states.
///
/// Ensemble `i` is stored as an `N_x × M` matrix whose columns are members.
/// Weights are held as normalized log-weights; the probabilities are derived
/// from them and may underflow to zero where the log-weight does not.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMixture {
    parameters: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    states: Vec<DMatrix<f64>>,
    time_index: usize,
}

impl ParticleMixture {
    /// Uniformly weighted mixture.
    pub fn new(parameters: Vec<Vec<f64>>, states: Vec<DMatrix<f64>>) -> Result<Self> {
        let l = parameters.len();
        Self::with_weights(parameters, vec![1.0 / l as f64; l], states)
    }

    /// Every hypothesis starts from a copy of the same ensemble.
    pub fn with_shared_ensemble(parameters: Vec<Vec<f64>>, ensemble: DMatrix<f64>) -> Result<Self> {
        let states = vec![ensemble; parameters.len()];
        Self::new(parameters, states)
    }

    pub fn with_weights(parameters: Vec<Vec<f64>>, weights: Vec<f64>, states: Vec<DMatrix<f64>>) -> Result<Self> {
        let l = parameters.len();
        if l == 0 {
            return Err(Error::Config("mixture needs at least one hypothesis".into()));
        }
        if weights.len() != l {
            return Err(Error::dim("mixture weights", l, weights.len()));
        }
        if states.len() != l {
            return Err(Error::dim("mixture state blocks", l, states.len()));
        }
        let np = parameters[0].len();
        if let Some(bad) = parameters.iter().find(|p| p.len() != np) {
            return Err(Error::dim("parameter vector", np, bad.len()));
        }
        let shape = states[0].shape();
        if let Some(bad) = states.iter().find(|s| s.shape() != shape) {
            return Err(Error::dim("state block members", shape.1, bad.ncols()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Numeric("mixture weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Numeric(alloc::format!("mixture weights sum to {total}")));
        }
        Ok(Self {
            parameters,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            weights,
            states,
            time_index: 0,
        })
    }

    pub fn n_hypotheses(&self) -> usize {
        self.parameters.len()
    }

    pub fn n_members(&self) -> usize {
        self.states[0].ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].nrows()
    }

    pub fn param_dim(&self) -> usize {
        self.parameters[0].len()
    }

    pub fn parameters(&self) -> &[Vec<f64>] {
        &self.parameters
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `log wⁱ`, normalized so that `Σᵢ exp(log wⁱ) = 1`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn states(&self) -> &[DMatrix<f64>] {
        &self.states
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub(crate) fn states_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.states
    }

    /// Takes normalized log-weights.
    pub(crate) fn set_log_weights(&mut self, log_weights: Vec<f64>) {
        debug_assert_eq!(log_weights.len(), self.weights.len());
        self.weights = probabilities(&log_weights);
        self.log_weights = log_weights;
    }

    pub(crate) fn replace(&mut self, parameters: Vec<Vec<f64>>, states: Vec<DMatrix<f64>>) {
        self.parameters = parameters;
        self.states = states;
        let l = self.parameters.len();
        self.weights = vec![1.0 / l as f64; l];
        self.log_weights = vec![-(l as f64).ln(); l];
    }

    pub(crate) fn advance_time(&mut self) {
        self.time_index += 1;
    }

    /// `Σᵢ wⁱ λⁱ`.
    pub fn parameter_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.param_dim()];
        for (p, w) in self.parameters.iter().zip(&self.weights) {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += w * v;
            }
        }
        mean
    }

    /// `Σᵢ wⁱ exp(λⁱ)`, component-wise.
    pub fn exp_parameter_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.param_dim()];
        for (p, w) in self.parameters.iter().zip(&self.weights) {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += w * v.exp();
            }
        }
        mean
    }

    /// Ensemble means `x̄ⁱ`.
    pub fn block_means(&self) -> Vec<DVector<f64>> {
        self.states.iter().map(column_mean).collect()
    }

    /// `Σᵢ wⁱ x̄ⁱ`.
    pub fn weighted_state_mean(&self) -> DVector<f64> {
        self.block_means()
            .iter()
            .zip(&self.weights)
            .fold(DVector::zeros(self.state_dim()), |acc, (m, w)| acc + m * *w)
    }
}
