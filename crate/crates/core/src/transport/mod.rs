//! Discrete optimal transport between weighted point clouds.
//!
//! The exact solver is a transportation simplex and always returns a vertex
//! of the transportation polytope. Sinkhorn scaling gives an entropically
//! regularized approximation that is rounded back onto the polytope.

mod barycenter;
mod cost;
mod coupling;
mod permutation;
mod simplex;
mod sinkhorn;

pub use barycenter::{barycenter, barycenter_functional, Barycenter, BarycenterParams};
pub use cost::{cost_matrix, CostMatrix};
pub use coupling::{Coupling, DiscreteMeasure};
pub use permutation::{extract_permutations, permutation_matrix, ExtractedPermutation};
pub use simplex::{solve_transport, TransportSolution};
pub use sinkhorn::{sinkhorn, SinkhornParams, SinkhornSolution};

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Marginal mass tolerance used to decide whether two weight vectors balance.
pub const MASS_TOLERANCE: f64 = 1e-9;

pub(crate) fn validate_problem(cost: &CostMatrix, w1: &[f64], w2: &[f64]) -> Result<()> {
    let (m, n) = cost.shape();
    if w1.len() != m {
        return Err(Error::dim("row marginals", m, w1.len()));
    }
    if w2.len() != n {
        return Err(Error::dim("column marginals", n, w2.len()));
    }
    if m == 0 || n == 0 {
        return Err(Error::Config("transport problem is empty".into()));
    }
    if cost.entries().iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("cost matrix has non-finite entries".into()));
    }
    for (name, w) in [("row", w1), ("column", w2)] {
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Numeric(format!("{name} marginal has invalid entry {bad}")));
        }
    }
    let (s1, s2) = (w1.iter().sum::<f64>(), w2.iter().sum::<f64>());
    if (s1 - s2).abs() > MASS_TOLERANCE * s1.max(s2).max(1.0) {
        return Err(Error::InfeasibleMarginals {
            row_mass: s1,
            col_mass: s2,
        });
    }
    Ok(())
}
