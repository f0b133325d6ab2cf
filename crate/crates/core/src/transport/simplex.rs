//! Transportation simplex with Bland's pivoting rule.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + n − 1` cells. Entering cells are chosen as the lowest row-major index
//! with negative reduced cost; among tied leaving cells the lowest index
//! wins. Both choices are deterministic, so degenerate problems always give
//! the same vertex.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::{validate_problem, CostMatrix, Coupling};
use crate::{Error, Result};

/// Optimal vertex of the transportation polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub coupling: Coupling,
    /// `tr(Tᵀ C)`, the squared 2-Wasserstein distance for squared-distance costs.
    pub objective: f64,
    pub pivots: usize,
}

struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    is_basic: Vec<bool>,
}

impl Basis {
    fn node_count(&self) -> usize {
        self.m + self.n
    }

    /// Adjacency lists over nodes `0..m` (rows) and `m..m+n` (columns); each
    /// entry is `(neighbour, cell index into self.cells)`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }
}

/// Solves `min tr(Tᵀ C)` subject to `T 1 = w1`, `Tᵀ 1 = w2`, `T ≥ 0`.
pub fn solve_transport(cost: &CostMatrix, w1: &[f64], w2: &[f64]) -> Result<TransportSolution> {
    validate_problem(cost, w1, w2)?;
    let (m, n) = cost.shape();
    let c = cost.entries();
    let tol = 1e-12 * cost.max();

    let mut flow = DMatrix::zeros(m, n);
    let mut basis = northwest_corner(w1, w2, &mut flow);

    let max_pivots = 1000 + 50 * m * n * (m + n);
    let mut pivots = 0;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    loop {
        let adj = basis.adjacency();
        potentials(&basis, &adj, c, &mut u, &mut v);

        let entering = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).find(|&(i, j)| {
            !basis.is_basic[i * n + j] && c[(i, j)] - u[i] - v[j] < -tol
        });
        let Some((ei, ej)) = entering else { break };

        // Path in the tree from row ei to column ej; alternating cells along
        // it starting next to row ei lose mass.
        let path = tree_path(&basis, &adj, ei, basis.m + ej);
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let (i, j) = basis.cells[k];
                let x = flow[(i, j)];
                let better = match leaving {
                    None => true,
                    Some(l) => {
                        let (li, lj) = basis.cells[l];
                        x < theta || (x == theta && i * n + j < li * n + lj)
                    }
                };
                if better {
                    theta = x;
                    leaving = Some(k);
                }
            }
        }
        let leaving = leaving.ok_or_else(|| Error::Numeric("transport simplex found an empty cycle".into()))?;
        for (pos, &k) in path.iter().enumerate() {
            let (i, j) = basis.cells[k];
            if pos % 2 == 0 {
                flow[(i, j)] = (flow[(i, j)] - theta).max(0.0);
            } else {
                flow[(i, j)] += theta;
            }
        }
        flow[(ei, ej)] = theta;
        let (li, lj) = basis.cells[leaving];
        flow[(li, lj)] = 0.0;
        basis.is_basic[li * n + lj] = false;
        basis.is_basic[ei * n + ej] = true;
        basis.cells[leaving] = (ei, ej);

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numeric("transport simplex exceeded its pivot budget".into()));
        }
    }

    tree_flows(&basis, w1, w2, &mut flow);
    let coupling = Coupling::from_parts(flow, w1.to_vec(), w2.to_vec());
    let objective = coupling.objective(cost);
    Ok(TransportSolution {
        coupling,
        objective,
        pivots,
    })
}

/// Northwest-corner basic feasible solution. Every step advances exactly one
/// of the row or column index, so the basis has `m + n − 1` cells and forms a
/// spanning tree even when some of them carry zero flow.
fn northwest_corner(w1: &[f64], w2: &[f64], flow: &mut DMatrix<f64>) -> Basis {
    let (m, n) = (w1.len(), w2.len());
    let mut a = w1.to_vec();
    let mut b = w2.to_vec();
    let mut cells = Vec::with_capacity(m + n - 1);
    let mut is_basic = vec![false; m * n];
    let (mut i, mut j) = (0, 0);
    loop {
        let q = a[i].min(b[j]);
        flow[(i, j)] = q;
        a[i] -= q;
        b[j] -= q;
        cells.push((i, j));
        is_basic[i * n + j] = true;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Basis {
        m,
        n,
        cells,
        is_basic,
    }
}

/// Dual potentials with `u_0 = 0` and `u_i + v_j = c_ij` on basic cells.
fn potentials(basis: &Basis, adj: &[Vec<(usize, usize)>], c: &DMatrix<f64>, u: &mut [f64], v: &mut [f64]) {
    let m = basis.m;
    let mut seen = vec![false; basis.node_count()];
    let mut queue = VecDeque::new();
    u[0] = 0.0;
    seen[0] = true;
    queue.push_back(0);
    while let Some(node) = queue.pop_front() {
        for &(next, k) in &adj[node] {
            if seen[next] {
                continue;
            }
            let (i, j) = basis.cells[k];
            if next >= m {
                v[j] = c[(i, j)] - u[i];
            } else {
                u[i] = c[(i, j)] - v[j];
            }
            seen[next] = true;
            queue.push_back(next);
        }
    }
}

/// Cells on the unique tree path from `from` to `to`, ordered from `from`.
fn tree_path(basis: &Basis, adj: &[Vec<(usize, usize)>], from: usize, to: usize) -> Vec<usize> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; basis.node_count()];
    let mut seen = vec![false; basis.node_count()];
    let mut queue = VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(next, k) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, k));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while let Some((prev, k)) = parent[node] {
        path.push(k);
        node = prev;
    }
    path.reverse();
    path
}

/// Recomputes basic flows from the marginals by peeling leaves of the basis
/// tree, removing roundoff accumulated over the pivots.
fn tree_flows(basis: &Basis, w1: &[f64], w2: &[f64], flow: &mut DMatrix<f64>) {
    let mut remaining: Vec<f64> = w1.iter().chain(w2).copied().collect();
    let adj = basis.adjacency();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut used = vec![false; basis.cells.len()];
    let mut stack: Vec<usize> = (0..basis.node_count()).rev().filter(|&k| degree[k] == 1).collect();
    while let Some(node) = stack.pop() {
        if degree[node] != 1 {
            continue;
        }
        let Some(&(other, k)) = adj[node].iter().find(|(_, k)| !used[*k]) else {
            continue;
        };
        let (i, j) = basis.cells[k];
        let x = remaining[node].max(0.0);
        flow[(i, j)] = x;
        used[k] = true;
        remaining[node] = 0.0;
        remaining[other] -= x;
        degree[node] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    debug_assert!(used.iter().all(|&u| u), "basis is not a spanning tree");
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn cost(c: DMatrix<f64>) -> CostMatrix {
        CostMatrix::from_matrix(c).unwrap()
    }

    #[test]
    fn singleton() {
        let s = solve_transport(&cost(dmatrix![3.0]), &[1.0], &[1.0]).unwrap();
        assert_eq!(s.coupling.plan(), &dmatrix![1.0]);
        assert_eq!(s.objective, 3.0);
    }

    #[test]
    fn diagonal_matching() {
        let c = cost(dmatrix![0.0, 1.0; 1.0, 0.0]);
        let s = solve_transport(&c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(s.coupling.plan(), &dmatrix![0.5, 0.0; 0.0, 0.5]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn worked_two_by_two() {
        let c = cost(dmatrix![0.0, 1.0; 1.0, 0.0]);
        let s = solve_transport(&c, &[0.75, 0.25], &[0.5, 0.5]).unwrap();
        assert_eq!(s.coupling.plan(), &dmatrix![0.5, 0.25; 0.0, 0.25]);
        assert_eq!(s.objective, 0.25);
    }

    #[test]
    fn anti_diagonal_requires_pivots() {
        let c = cost(dmatrix![5.0, 1.0, 9.0; 1.0, 5.0, 9.0; 9.0, 9.0, 0.0]);
        let w = [1.0 / 3.0; 3];
        let s = solve_transport(&c, &w, &w).unwrap();
        assert!(s.pivots > 0);
        assert!((s.objective - 2.0 / 3.0).abs() < 1e-15);
        assert!(s.coupling.max_marginal_violation() < 1e-15);
        assert!(s.coupling.support_size(0.0) <= 5);
    }

    #[test]
    fn rejects_unbalanced_and_nan() {
        let c = cost(dmatrix![0.0, 1.0; 1.0, 0.0]);
        assert!(matches!(
            solve_transport(&c, &[0.5, 0.6], &[0.5, 0.5]),
            Err(Error::InfeasibleMarginals { .. })
        ));
        assert!(CostMatrix::from_matrix(dmatrix![f64::NAN]).is_err());
        assert!(solve_transport(&c, &[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn rectangular_problem() {
        let c = cost(dmatrix![1.0, 2.0, 3.0; 4.0, 1.0, 2.0]);
        let s = solve_transport(&c, &[0.5, 0.5], &[0.2, 0.3, 0.5]).unwrap();
        assert!(s.coupling.max_marginal_violation() < 1e-15);
        assert!(s.coupling.support_size(0.0) <= 4);
        // two tied optima, both 0.2·1 + 0.3·2 + 0.5·2 = 0.2·1 + 0.3·3 + 0.3·1 + 0.2·2
        assert!((s.objective - 1.8).abs() < 1e-12);
    }
}
