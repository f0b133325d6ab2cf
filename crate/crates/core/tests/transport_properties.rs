//! Randomized checks of the transport solvers against an enumeration oracle
//! and against each other.

use enkf_etpf::transport::{
    barycenter, cost_matrix, extract_permutations, sinkhorn, solve_transport, BarycenterParams, CostMatrix,
    SinkhornParams,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Minimum objective over all spanning-tree bases with nonnegative flows.
fn enumerate_vertices(cost: &DMatrix<f64>, w1: &[f64], w2: &[f64]) -> f64 {
    let (m, n) = cost.shape();
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    // Subsets of size k via bitmasks; m·n ≤ 16 keeps this small.
    for mask in 0u32..(1 << cells.len()) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let tree: Vec<(usize, usize)> = (0..cells.len()).filter(|b| mask >> b & 1 == 1).map(|b| cells[b]).collect();
        if let Some(flows) = solve_tree(&tree, w1, w2) {
            let obj: f64 = tree.iter().zip(&flows).map(|(&(i, j), f)| cost[(i, j)] * f).sum();
            best = best.min(obj);
        }
    }
    best
}

fn solve_tree(tree: &[(usize, usize)], w1: &[f64], w2: &[f64]) -> Option<Vec<f64>> {
    let mut supply = w1.to_vec();
    let mut demand = w2.to_vec();
    let mut flows = vec![f64::NAN; tree.len()];
    for _ in 0..tree.len() {
        let open = |e: usize| flows[e].is_nan();
        let deg_row = |i: usize| (0..tree.len()).filter(|&e| open(e) && tree[e].0 == i).count();
        let deg_col = |j: usize| (0..tree.len()).filter(|&e| open(e) && tree[e].1 == j).count();
        let (e, from_row) = (0..tree.len())
            .filter(|&e| open(e))
            .find_map(|e| {
                if deg_row(tree[e].0) == 1 {
                    Some((e, true))
                } else if deg_col(tree[e].1) == 1 {
                    Some((e, false))
                } else {
                    None
                }
            })?; // a cycle leaves no leaf
        let (i, j) = tree[e];
        let f = if from_row { supply[i] } else { demand[j] };
        flows[e] = f;
        supply[i] -= f;
        demand[j] -= f;
    }
    if flows.iter().any(|f| *f < -1e-13) || supply.iter().chain(&demand).any(|r| r.abs() > 1e-12) {
        return None;
    }
    Some(flows)
}

fn simplex_weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    })
}

fn points(n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| [a, b]), n)
}

fn instance(max: usize) -> impl Strategy<Value = (CostMatrix, Vec<f64>, Vec<f64>)> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| {
        (points(m), points(n), simplex_weights(m), simplex_weights(n))
            .prop_map(|(a, b, w1, w2)| (cost_matrix(&a, &b).unwrap(), w1, w2))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lp_matches_vertex_enumeration((cost, w1, w2) in instance(4)) {
        let lp = solve_transport(&cost, &w1, &w2).unwrap();
        let best = enumerate_vertices(cost.entries(), &w1, &w2);
        prop_assert!((lp.objective - best).abs() <= 1e-10 * best.abs().max(1e-300) + 1e-15,
            "lp {} vs enumeration {}", lp.objective, best);
    }

    #[test]
    fn coupling_is_feasible((cost, w1, w2) in instance(7)) {
        let lp = solve_transport(&cost, &w1, &w2).unwrap();
        prop_assert!(lp.coupling.max_marginal_violation() <= 1e-9);
        prop_assert!(lp.coupling.min_entry() >= 0.0);
        prop_assert!(lp.coupling.support_size(1e-15) < w1.len() + w2.len());
    }

    #[test]
    fn objective_shifts_and_scales_with_the_cost((cost, w1, w2) in instance(5), shift in 0.0f64..3.0, scale in 0.1f64..10.0) {
        let base = solve_transport(&cost, &w1, &w2).unwrap().objective;
        let shifted = CostMatrix::from_matrix(cost.entries().add_scalar(shift)).unwrap();
        let scaled = CostMatrix::from_matrix(cost.entries() * scale).unwrap();
        let s = solve_transport(&shifted, &w1, &w2).unwrap().objective;
        let k = solve_transport(&scaled, &w1, &w2).unwrap().objective;
        prop_assert!((s - (base + shift)).abs() <= 1e-10 * (1.0 + s.abs()));
        prop_assert!((k - base * scale).abs() <= 1e-10 * (1.0 + k.abs()));
    }

    #[test]
    fn sinkhorn_is_feasible_and_never_beats_the_lp((cost, w1, w2) in instance(6)) {
        let lp = solve_transport(&cost, &w1, &w2).unwrap();
        let sk = sinkhorn(&cost, &w1, &w2, &SinkhornParams::for_cost(&cost)).unwrap();
        prop_assert!(sk.coupling.max_marginal_violation() <= 1e-9);
        prop_assert!(sk.coupling.min_entry() >= 0.0);
        prop_assert!(sk.objective >= lp.objective - 1e-12);
    }

    #[test]
    fn uniform_problems_have_permutation_solutions(m in 1usize..=5, pts in points(10)) {
        let a = &pts[..m];
        let b = &pts[5..5 + m];
        let cost = cost_matrix(a, b).unwrap();
        let w = vec![1.0 / m as f64; m];
        let lp = solve_transport(&cost, &w, &w).unwrap();
        let p = extract_permutations(std::slice::from_ref(&lp.coupling), m).unwrap();
        prop_assert!(!p[0].rounded, "M·T is not a permutation: {}", lp.coupling.plan());
    }

    #[test]
    fn barycenter_functional_never_increases(pts in prop::collection::vec(points(4), 3)) {
        let clouds: Vec<DMatrix<f64>> = pts
            .iter()
            .map(|c| DMatrix::from_fn(2, 4, |d, j| c[j][d]))
            .collect();
        let b = barycenter(&clouds, &BarycenterParams::default()).unwrap();
        for w in b.functional_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", b.functional_history);
        }
    }
}
