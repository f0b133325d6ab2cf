//! Transport self-check: the simplex solver against exhaustive enumeration of
//! basic feasible solutions, and Sinkhorn against the simplex solver.

use enkf_etpf::transport::{cost_matrix, sinkhorn, solve_transport, CostMatrix, SinkhornParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum of the transport objective over all basic feasible solutions,
/// found by enumerating every spanning tree of the bipartite row/column
/// graph and solving its flows. Exponential; meant for `m, n ≤ 6`.
pub fn brute_force_transport(cost: &DMatrix<f64>, w1: &[f64], w2: &[f64]) -> (f64, DMatrix<f64>) {
    let (m, n) = cost.shape();
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut best = (f64::INFINITY, DMatrix::zeros(m, n));
    let mut chosen = Vec::with_capacity(m + n - 1);
    enumerate(&cells, 0, m + n - 1, &mut chosen, &mut |tree| {
        if let Some(plan) = tree_solution(tree, w1, w2) {
            let obj = plan.component_mul(cost).sum();
            if obj < best.0 {
                best = (obj, plan);
            }
        }
    });
    best
}

type Cell = (usize, usize);

fn enumerate(cells: &[Cell], start: usize, need: usize, chosen: &mut Vec<Cell>, visit: &mut dyn FnMut(&[Cell])) {
    if need == 0 {
        visit(chosen);
        return;
    }
    for k in start..=cells.len() - need {
        chosen.push(cells[k]);
        if is_forest(chosen) {
            enumerate(cells, k + 1, need - 1, chosen, visit);
        }
        chosen.pop();
    }
}

fn is_forest(edges: &[(usize, usize)]) -> bool {
    // Rows are nodes 0..m, columns are offset far enough not to collide.
    const OFFSET: usize = 64;
    let mut parent: Vec<usize> = (0..2 * OFFSET).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, OFFSET + j));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Flows on a spanning tree, by repeatedly settling a leaf. `None` if any
/// flow is negative.
fn tree_solution(tree: &[(usize, usize)], w1: &[f64], w2: &[f64]) -> Option<DMatrix<f64>> {
    let (m, n) = (w1.len(), w2.len());
    let mut supply = w1.to_vec();
    let mut demand = w2.to_vec();
    let mut open: Vec<bool> = vec![true; tree.len()];
    let mut plan = DMatrix::zeros(m, n);
    for _ in 0..tree.len() {
        let mut row_deg = vec![0usize; m];
        let mut col_deg = vec![0usize; n];
        for (e, &(i, j)) in tree.iter().enumerate() {
            if open[e] {
                row_deg[i] += 1;
                col_deg[j] += 1;
            }
        }
        let (e, flow) = tree.iter().enumerate().filter(|(e, _)| open[*e]).find_map(|(e, &(i, j))| {
            if row_deg[i] == 1 {
                Some((e, supply[i]))
            } else if col_deg[j] == 1 {
                Some((e, demand[j]))
            } else {
                None
            }
        })?;
        let (i, j) = tree[e];
        plan[(i, j)] = flow;
        supply[i] -= flow;
        demand[j] -= flow;
        open[e] = false;
    }
    let scale = w1.iter().chain(w2).fold(0.0f64, |a, b| a.max(*b));
    if plan.iter().any(|&t| t < -1e-12 * scale) {
        return None;
    }
    Some(plan.map(|t| t.max(0.0)))
}

/// Random points in the unit square and random positive weights.
pub fn random_instance(rng: &mut impl Rng, m: usize, n: usize) -> (CostMatrix, Vec<f64>, Vec<f64>) {
    let pts = |rng: &mut dyn rand::RngCore, k: usize| -> Vec<[f64; 2]> {
        (0..k).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
    };
    let a = pts(rng, m);
    let b = pts(rng, n);
    let weights = |rng: &mut dyn rand::RngCore, k: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    };
    let w1 = weights(rng, m);
    let w2 = weights(rng, n);
    (cost_matrix(&a, &b).expect("finite points"), w1, w2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtReport {
    pub size: usize,
    pub trials: usize,
    /// `max |LP − brute force| / max(1, |brute force|)`; `None` when the
    /// size is too large to enumerate.
    pub max_exact_gap: Option<f64>,
    pub max_marginal_violation: f64,
    /// Largest relative excess of the rounded Sinkhorn objective over the LP.
    pub max_sinkhorn_excess: f64,
    pub max_sinkhorn_marginal_violation: f64,
}

impl std::fmt::Display for OtReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "size = {}", self.size)?;
        writeln!(f, "trials = {}", self.trials)?;
        match self.max_exact_gap {
            Some(g) => writeln!(f, "max_lp_vs_enumeration_gap = {g:e}")?,
            None => writeln!(f, "max_lp_vs_enumeration_gap = skipped")?,
        }
        writeln!(f, "max_lp_marginal_violation = {:e}", self.max_marginal_violation)?;
        writeln!(f, "max_sinkhorn_relative_excess = {:e}", self.max_sinkhorn_excess)?;
        writeln!(f, "max_sinkhorn_marginal_violation = {:e}", self.max_sinkhorn_marginal_violation)
    }
}

/// Largest problem size checked by enumeration.
pub const MAX_ENUMERATION_SIZE: usize = 6;

/// Solves `trials` random `size × size` instances with the simplex solver,
/// checks them against enumeration (when `size ≤ 6`) and against Sinkhorn at
/// `epsilon = 10⁻³ ·` median cost.
pub fn validate_ot(size: usize, trials: usize, seed: u64) -> enkf_etpf::Result<OtReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OtReport {
        size,
        trials,
        max_exact_gap: (size <= MAX_ENUMERATION_SIZE).then_some(0.0),
        max_marginal_violation: 0.0,
        max_sinkhorn_excess: 0.0,
        max_sinkhorn_marginal_violation: 0.0,
    };
    for _ in 0..trials {
        let (cost, w1, w2) = random_instance(&mut rng, size, size);
        let lp = solve_transport(&cost, &w1, &w2)?;
        report.max_marginal_violation = report.max_marginal_violation.max(lp.coupling.max_marginal_violation());
        if let Some(gap) = report.max_exact_gap.as_mut() {
            let (bf, _) = brute_force_transport(cost.entries(), &w1, &w2);
            *gap = gap.max((lp.objective - bf).abs() / bf.abs().max(1.0));
        }
        if size > 1 {
            let sk = sinkhorn(&cost, &w1, &w2, &SinkhornParams::relative(&cost, 1e-3))?;
            let excess = (sk.objective - lp.objective) / lp.objective.abs().max(f64::MIN_POSITIVE);
            report.max_sinkhorn_excess = report.max_sinkhorn_excess.max(excess);
            report.max_sinkhorn_marginal_violation =
                report.max_sinkhorn_marginal_violation.max(sk.coupling.max_marginal_violation());
        }
    }
    Ok(report)
}
