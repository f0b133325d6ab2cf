//! Free-support barycenter of uniform point clouds under `W₂²`.
//!
//! Alternates between solving the `L` transport problems for a fixed support
//! and moving every support point to the coupling-weighted average of the
//! atoms it is matched with. Each half-step can only lower
//! `f(ν) = Σᵢ W₂²(ν, νᵢ)`, so the recorded functional is non-increasing.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{solve_transport, CostMatrix, Coupling};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycenterParams {
    /// Stop once the functional decreases by less than `tol` (relative).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BarycenterParams {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Barycenter {
    /// Support points as columns (`dim × M`), each carrying mass `1/M`.
    pub support: DMatrix<f64>,
    /// Optimal coupling from the support to each input cloud.
    pub couplings: Vec<Coupling>,
    /// Functional value at every iteration, ending with the returned support.
    pub functional_history: Vec<f64>,
    pub converged: bool,
}

impl Barycenter {
    pub fn functional(&self) -> f64 {
        *self.functional_history.last().unwrap_or(&0.0)
    }
}

fn solve_all(support: &DMatrix<f64>, measures: &[DMatrix<f64>], uniform: &[f64]) -> Result<Vec<(Coupling, f64)>> {
    let solve_one = |cloud: &DMatrix<f64>| -> Result<(Coupling, f64)> {
        let cost = CostMatrix::from_columns(support, cloud)?;
        let sol = solve_transport(&cost, uniform, uniform)?;
        Ok((sol.coupling, sol.objective))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        measures.par_iter().map(solve_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        measures.iter().map(solve_one).collect()
    }
}

/// `Σᵢ W₂²(ν, νᵢ)` for a uniform support `ν`.
pub fn barycenter_functional(support: &DMatrix<f64>, measures: &[DMatrix<f64>]) -> Result<f64> {
    let m = support.ncols();
    let uniform = vec![1.0 / m as f64; m];
    Ok(solve_all(support, measures, &uniform)?.iter().map(|(_, o)| o).sum())
}

/// Barycenter of `L` uniform clouds, each given as a `dim × M` matrix of atoms.
///
/// The support starts at the atom-wise average of the clouds under the
/// identity correspondence.
pub fn barycenter(measures: &[DMatrix<f64>], params: &BarycenterParams) -> Result<Barycenter> {
    let first = measures
        .first()
        .ok_or_else(|| Error::Config("barycenter needs at least one measure".into()))?;
    let (dim, m) = first.shape();
    if m == 0 {
        return Err(Error::Config("barycenter measures must have atoms".into()));
    }
    for cloud in measures {
        if cloud.nrows() != dim {
            return Err(Error::dim("barycenter atom dimension", dim, cloud.nrows()));
        }
        if cloud.ncols() != m {
            return Err(Error::dim("barycenter atom count", m, cloud.ncols()));
        }
    }
    let l = measures.len() as f64;
    let uniform = vec![1.0 / m as f64; m];

    let mut support = measures.iter().fold(DMatrix::zeros(dim, m), |acc, c| acc + c) / l;
    let mut history = Vec::new();
    let mut converged = false;
    let mut solved = solve_all(&support, measures, &uniform)?;
    for _ in 0..params.max_iter {
        let value: f64 = solved.iter().map(|(_, o)| o).sum();
        let stalled = history
            .last()
            .is_some_and(|&prev: &f64| prev - value <= params.tol * prev.abs());
        history.push(value);
        if stalled || value == 0.0 {
            converged = true;
            break;
        }
        // x_j = (M / L) Σᵢ Σ_k Tⁱ_jk yⁱ_k
        let mut next = DMatrix::zeros(dim, m);
        for ((coupling, _), cloud) in solved.iter().zip(measures) {
            next += cloud * coupling.plan().transpose();
        }
        next *= m as f64 / l;
        let candidate = solve_all(&next, measures, &uniform)?;
        let candidate_value: f64 = candidate.iter().map(|(_, o)| o).sum();
        if candidate_value > value {
            // roundoff-level increase: keep the previous support
            converged = true;
            break;
        }
        support = next;
        solved = candidate;
    }
    Ok(Barycenter {
        support,
        couplings: solved.into_iter().map(|(c, _)| c).collect(),
        functional_history: history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 2]]) -> DMatrix<f64> {
        DMatrix::from_fn(2, points.len(), |r, c| points[c][r])
    }

    #[test]
    fn single_measure_is_its_own_barycenter() {
        let a = cloud(&[[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]]);
        let b = barycenter(core::slice::from_ref(&a), &BarycenterParams::default()).unwrap();
        assert_eq!(b.support, a);
        assert_eq!(b.functional(), 0.0);
    }

    #[test]
    fn identical_measures_are_a_fixed_point() {
        let a = cloud(&[[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]]);
        let b = barycenter(&[a.clone(), a.clone(), a.clone()], &BarycenterParams::default()).unwrap();
        assert!((&b.support - &a).norm() < 1e-15);
        assert_eq!(b.functional(), 0.0);
    }

    #[test]
    fn translated_clouds_meet_halfway() {
        let a = cloud(&[[0.0, 0.0], [3.0, 1.0], [-1.0, 2.0]]);
        let d = [0.4, -0.2];
        let b = DMatrix::from_fn(2, 3, |r, c| a[(r, c)] + d[r]);
        let bary = barycenter(&[a.clone(), b], &BarycenterParams::default()).unwrap();
        let expected = DMatrix::from_fn(2, 3, |r, c| a[(r, c)] + 0.5 * d[r]);
        assert!((&bary.support - expected).norm() < 1e-12);
        let d2 = d[0] * d[0] + d[1] * d[1];
        assert!((bary.functional() - d2 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(barycenter(&[], &BarycenterParams::default()).is_err());
        let a = DMatrix::zeros(2, 3);
        let b = DMatrix::zeros(2, 4);
        assert!(barycenter(&[a, b], &BarycenterParams::default()).is_err());
    }
}
