use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::Coupling;
use crate::{Error, Result};

/// Deviation below which `M·T` is accepted as an exact permutation matrix.
pub const EXACT_TOLERANCE: f64 = 1e-8;
/// Deviation above which a rounded permutation is flagged as unreliable.
pub const FLAG_TOLERANCE: f64 = 1e-3;

/// A permutation read off a coupling between two uniform `M`-atom measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedPermutation {
    /// `map[j]` is the column matched with row `j`.
    pub map: Vec<usize>,
    /// `max |M·T − P|` over all entries.
    pub deviation: f64,
    /// `M·T` was not a permutation matrix to within [`EXACT_TOLERANCE`].
    pub rounded: bool,
    /// The rounding moved more than [`FLAG_TOLERANCE`]; callers should not
    /// trust the correspondence.
    pub flagged: bool,
}

/// Dense permutation matrix `P` with `P[j, map[j]] = 1`.
pub fn permutation_matrix(map: &[usize]) -> DMatrix<f64> {
    let m = map.len();
    let mut p = DMatrix::zeros(m, m);
    for (j, &k) in map.iter().enumerate() {
        p[(j, k)] = 1.0;
    }
    p
}

fn extract_one(coupling: &Coupling, m: usize) -> ExtractedPermutation {
    let scaled = coupling.plan() * m as f64;
    let mut used = vec![false; m];
    let mut map = Vec::with_capacity(m);
    // Greedy row-wise assignment: largest remaining entry, lowest index on ties.
    for j in 0..m {
        let mut best: Option<usize> = None;
        for k in 0..m {
            if used[k] {
                continue;
            }
            if best.is_none_or(|b| scaled[(j, k)] > scaled[(j, b)]) {
                best = Some(k);
            }
        }
        let k = best.expect("m columns for m rows");
        used[k] = true;
        map.push(k);
    }
    let p = permutation_matrix(&map);
    let deviation = (scaled - p).abs().max();
    ExtractedPermutation {
        map,
        deviation,
        rounded: deviation > EXACT_TOLERANCE,
        flagged: deviation > FLAG_TOLERANCE,
    }
}

/// Reads `Pⁱ = M·Tⁱ` off each coupling, rounding to the nearest permutation
/// by greedy assignment when `M·Tⁱ` is not already one.
pub fn extract_permutations(couplings: &[Coupling], m: usize) -> Result<Vec<ExtractedPermutation>> {
    couplings
        .iter()
        .map(|c| {
            if c.shape() != (m, m) {
                return Err(Error::dim("coupling for permutation extraction", m, c.shape().0));
            }
            Ok(extract_one(c, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn coupling(plan: DMatrix<f64>) -> Coupling {
        let m = plan.nrows();
        Coupling::new(plan, vec![1.0 / m as f64; m], vec![1.0 / m as f64; m]).unwrap()
    }

    #[test]
    fn scaled_identity_and_swap() {
        let id = coupling(DMatrix::identity(3, 3) / 3.0);
        let p = extract_permutations(&[id], 3).unwrap();
        assert_eq!(p[0].map, vec![0, 1, 2]);
        assert!(!p[0].rounded);

        let swap = coupling(dmatrix![0.0, 0.5; 0.5, 0.0]);
        let p = extract_permutations(&[swap], 2).unwrap();
        assert_eq!(p[0].map, vec![1, 0]);
        assert_eq!(permutation_matrix(&p[0].map), dmatrix![0.0, 1.0; 1.0, 0.0]);
        assert!(!p[0].flagged);
    }

    #[test]
    fn non_vertex_coupling_is_rounded_and_flagged() {
        let mixed = coupling(dmatrix![0.3, 0.2; 0.2, 0.3]);
        let p = extract_permutations(&[mixed], 2).unwrap();
        assert_eq!(p[0].map, vec![0, 1]);
        assert!(p[0].rounded && p[0].flagged);
        assert!((p[0].deviation - 0.4).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let c = coupling(DMatrix::identity(2, 2) / 2.0);
        assert!(extract_permutations(&[c], 3).is_err());
    }
}
