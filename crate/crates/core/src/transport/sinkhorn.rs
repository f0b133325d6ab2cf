//! Log-domain Sinkhorn scaling followed by a rounding step onto the
//! transportation polytope.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::{validate_problem, CostMatrix, Coupling};
use crate::{Error, Result};

/// Sweep cap and marginal tolerance per halving of epsilon during the warm
/// start.
const WARM_START_SWEEPS: usize = 1000;
const WARM_START_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams {
    /// Entropic regularization strength, in cost units.
    pub epsilon: f64,
    /// Stop once the L1 row-marginal violation is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl SinkhornParams {
    /// `epsilon = 0.01 · median nonzero cost`, `tol = 1e-9`, `max_iter = 10⁴`.
    pub fn for_cost(cost: &CostMatrix) -> Self {
        Self::relative(cost, 0.01)
    }

    /// `epsilon = factor · median nonzero cost` with the default tolerances.
    pub fn relative(cost: &CostMatrix, factor: f64) -> Self {
        Self {
            epsilon: factor * cost.median_nonzero().unwrap_or(1.0),
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornSolution {
    /// Rounded, exactly feasible coupling.
    pub coupling: Coupling,
    /// `tr(Tᵀ C)` of the rounded coupling.
    pub objective: f64,
    /// Transport cost of the unrounded scaling iterate.
    pub regularized_transport_cost: f64,
    /// L1 row-marginal violation of the unrounded iterate.
    pub marginal_error: f64,
    /// Upper bound on `|objective − regularized_transport_cost|` from rounding.
    pub rounding_gap_bound: f64,
    /// Sweeps at the target epsilon, excluding the annealing warm start.
    pub iterations: usize,
    pub converged: bool,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Entropically regularized transport between `w1` and `w2`.
///
/// On non-convergence the iterate with the smallest marginal error is
/// rounded and returned with `converged = false`.
pub fn sinkhorn(cost: &CostMatrix, w1: &[f64], w2: &[f64], params: &SinkhornParams) -> Result<SinkhornSolution> {
    validate_problem(cost, w1, w2)?;
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(Error::Config(format!("Sinkhorn epsilon must be positive, got {}", params.epsilon)));
    }
    let (m, n) = cost.shape();
    let c = cost.entries();
    let eps = params.epsilon;
    let log_a: Vec<f64> = w1.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = w2.iter().map(|w| w.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];

    let plan_of_eps = |f: &[f64], g: &[f64], eps: f64| {
        DMatrix::from_fn(m, n, |i, j| {
            let e = (f[i] + g[j] - c[(i, j)]) / eps;
            if e == f64::NEG_INFINITY { 0.0 } else { e.exp() }
        })
    };
    let plan_of = |f: &[f64], g: &[f64]| plan_of_eps(f, g, eps);
    let row_error = |plan: &DMatrix<f64>| -> f64 {
        plan.row_iter().zip(w1).map(|(r, a)| (r.sum() - a).abs()).sum()
    };

    let sweep = |f: &mut [f64], g: &mut [f64], eps: f64| {
        for i in 0..m {
            f[i] = if w1[i] == 0.0 {
                f64::NEG_INFINITY
            } else {
                eps * log_a[i] - eps * log_sum_exp((0..n).map(|j| (g[j] - c[(i, j)]) / eps))
            };
        }
        for j in 0..n {
            g[j] = if w2[j] == 0.0 {
                f64::NEG_INFINITY
            } else {
                eps * log_b[j] - eps * log_sum_exp((0..m).map(|i| (f[i] - c[(i, j)]) / eps))
            };
        }
    };

    // Warm start: anneal epsilon down from the cost scale, since iterations
    // at a small epsilon alone converge very slowly.
    let c_max = cost.max();
    let mut stage_eps = c_max;
    while stage_eps > 2.0 * eps {
        for _ in 0..WARM_START_SWEEPS {
            sweep(&mut f, &mut g, stage_eps);
            if f.iter().chain(&g).any(|v| v.is_nan()) {
                return Err(Error::Numeric("Sinkhorn iterates are non-finite".into()));
            }
            if row_error(&plan_of_eps(&f, &g, stage_eps)) < WARM_START_TOL {
                break;
            }
        }
        stage_eps *= 0.5;
    }

    let mut best = (f64::INFINITY, f.clone(), g.clone());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        sweep(&mut f, &mut g, eps);
        // columns are exact after the g-update; check rows
        let err = row_error(&plan_of(&f, &g));
        if err < best.0 {
            best = (err, f.clone(), g.clone());
        }
        if err < params.tol {
            converged = true;
            break;
        }
    }
    let (marginal_error, f, g) = best;
    if !marginal_error.is_finite() {
        return Err(Error::Numeric("Sinkhorn iterates are non-finite".into()));
    }
    let raw = plan_of(&f, &g);
    let regularized_transport_cost = raw.component_mul(c).sum();
    let (plan, moved) = round_to_polytope(raw, w1, w2);
    let coupling = Coupling::from_parts(plan, w1.to_vec(), w2.to_vec());
    let objective = coupling.objective(cost);
    Ok(SinkhornSolution {
        coupling,
        objective,
        regularized_transport_cost,
        marginal_error,
        rounding_gap_bound: 2.0 * moved * cost.max(),
        iterations,
        converged,
    })
}

/// Scales rows and columns down to their targets and redistributes the
/// missing mass as a rank-one correction. Returns the plan and the mass
/// moved by the correction.
#[allow(clippy::needless_range_loop)]
fn round_to_polytope(mut plan: DMatrix<f64>, w1: &[f64], w2: &[f64]) -> (DMatrix<f64>, f64) {
    let (m, n) = plan.shape();
    for i in 0..m {
        let s = plan.row(i).sum();
        if s > w1[i] {
            let x = w1[i] / s;
            plan.row_mut(i).scale_mut(x);
        }
    }
    for j in 0..n {
        let s = plan.column(j).sum();
        if s > w2[j] {
            let y = w2[j] / s;
            plan.column_mut(j).scale_mut(y);
        }
    }
    let err_r: Vec<f64> = (0..m).map(|i| (w1[i] - plan.row(i).sum()).max(0.0)).collect();
    let err_c: Vec<f64> = (0..n).map(|j| (w2[j] - plan.column(j).sum()).max(0.0)).collect();
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                plan[(i, j)] += err_r[i] * err_c[j] / total;
            }
        }
    }
    (plan, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::solve_transport;
    use nalgebra::dmatrix;

    #[test]
    fn large_epsilon_approaches_product_measure() {
        let c = CostMatrix::from_matrix(dmatrix![0.0, 1.0, 4.0; 1.0, 0.0, 1.0]).unwrap();
        let (a, b) = ([0.3, 0.7], [0.2, 0.5, 0.3]);
        let p = SinkhornParams {
            epsilon: 1e6,
            tol: 1e-13,
            max_iter: 100,
        };
        let s = sinkhorn(&c, &a, &b, &p).unwrap();
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                assert!((s.coupling.plan()[(i, j)] - ai * bj).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn epsilon_schedule_reaches_exact_objective() {
        let c = CostMatrix::from_matrix(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let (a, b) = ([0.75, 0.25], [0.5, 0.5]);
        let exact = solve_transport(&c, &a, &b).unwrap().objective;
        let mut last = f64::INFINITY;
        for k in 0..6 {
            let p = SinkhornParams {
                epsilon: 10f64.powi(-k),
                tol: 1e-12,
                max_iter: 10_000,
            };
            let s = sinkhorn(&c, &a, &b, &p).unwrap();
            assert!(s.objective >= exact - 1e-12);
            last = s.objective;
        }
        assert!((last - exact).abs() <= 0.01 * exact, "{last}");
    }

    #[test]
    fn zero_cost_stays_feasible() {
        let c = CostMatrix::from_matrix(DMatrix::zeros(3, 3)).unwrap();
        let w = [1.0 / 3.0; 3];
        let s = sinkhorn(&c, &w, &w, &SinkhornParams::for_cost(&c)).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(s.coupling.max_marginal_violation() < 1e-9);
        assert!(s.converged);
    }

    #[test]
    fn unconverged_iterate_is_flagged_but_feasible() {
        let c = CostMatrix::from_matrix(dmatrix![0.0, 1.0, 2.0; 1.0, 0.0, 1.0; 2.0, 1.0, 0.0]).unwrap();
        let (a, b) = ([0.6, 0.3, 0.1], [0.1, 0.3, 0.6]);
        let p = SinkhornParams {
            epsilon: 1e-3,
            tol: 1e-15,
            max_iter: 2,
        };
        let s = sinkhorn(&c, &a, &b, &p).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 2);
        assert!(s.coupling.max_marginal_violation() < 1e-12);
        assert!(s.coupling.min_entry() >= 0.0);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let c = CostMatrix::from_matrix(dmatrix![0.0]).unwrap();
        let p = SinkhornParams {
            epsilon: 0.0,
            tol: 1e-9,
            max_iter: 10,
        };
        assert!(matches!(sinkhorn(&c, &[1.0], &[1.0], &p), Err(Error::Config(_))));
    }
}
