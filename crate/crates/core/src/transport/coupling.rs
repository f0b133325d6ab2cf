use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::CostMatrix;
use crate::{Error, Result};

/// Weighted empirical measure `Σ wᵢ δ(y − yᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    locations: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(locations: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::dim("measure weights", locations.len(), weights.len()));
        }
        if let Some(first) = locations.first() {
            if let Some(bad) = locations.iter().find(|l| l.len() != first.len()) {
                return Err(Error::dim("measure locations", first.len(), bad.len()));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Numeric("measure weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Numeric(alloc::format!("measure weights sum to {total}, not 1")));
        }
        Ok(Self { locations, weights })
    }

    pub fn uniform(locations: Vec<Vec<f64>>) -> Result<Self> {
        let n = locations.len();
        Self::new(locations, alloc::vec![1.0 / n as f64; n])
    }

    pub fn locations(&self) -> &[Vec<f64>] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// A transport plan together with the marginals it is meant to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    plan: DMatrix<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
}

impl Coupling {
    pub(crate) fn from_parts(plan: DMatrix<f64>, row_marginals: Vec<f64>, col_marginals: Vec<f64>) -> Self {
        Self {
            plan,
            row_marginals,
            col_marginals,
        }
    }

    /// Checked constructor: shapes must agree and entries must be nonnegative.
    pub fn new(plan: DMatrix<f64>, row_marginals: Vec<f64>, col_marginals: Vec<f64>) -> Result<Self> {
        if plan.nrows() != row_marginals.len() {
            return Err(Error::dim("coupling rows", row_marginals.len(), plan.nrows()));
        }
        if plan.ncols() != col_marginals.len() {
            return Err(Error::dim("coupling columns", col_marginals.len(), plan.ncols()));
        }
        if plan.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Numeric("coupling entries must be finite and nonnegative".into()));
        }
        Ok(Self::from_parts(plan, row_marginals, col_marginals))
    }

    pub fn plan(&self) -> &DMatrix<f64> {
        &self.plan
    }

    pub fn into_plan(self) -> DMatrix<f64> {
        self.plan
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }

    pub fn shape(&self) -> (usize, usize) {
        self.plan.shape()
    }

    /// `tr(Tᵀ C)`.
    pub fn objective(&self, cost: &CostMatrix) -> f64 {
        self.plan.component_mul(cost.entries()).sum()
    }

    /// Largest absolute deviation of a row or column sum from its target.
    pub fn max_marginal_violation(&self) -> f64 {
        let rows = self
            .plan
            .row_iter()
            .zip(&self.row_marginals)
            .map(|(r, w)| (r.sum() - w).abs());
        let cols = self
            .plan
            .column_iter()
            .zip(&self.col_marginals)
            .map(|(c, w)| (c.sum() - w).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.plan.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Number of entries above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.plan.iter().filter(|t| **t > threshold).count()
    }
}
