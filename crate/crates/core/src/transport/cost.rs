use nalgebra::DMatrix;

use crate::{Error, Result};

/// Squared Euclidean distances `‖y₁ⁱ − y₂ʲ‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: DMatrix<f64>,
}

impl CostMatrix {
    /// Wraps an arbitrary nonnegative cost matrix.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|c| c.is_nan()) {
            return Err(Error::Numeric("cost matrix contains NaN".into()));
        }
        Ok(Self { entries })
    }

    /// Costs between the columns of `a` and the columns of `b`.
    pub fn from_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(Error::dim("point dimension", a.nrows(), b.nrows()));
        }
        let entries = DMatrix::from_fn(a.ncols(), b.ncols(), |i, j| {
            a.column(i)
                .iter()
                .zip(b.column(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum()
        });
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    /// Median of the strictly positive entries, or `None` if all vanish.
    pub fn median_nonzero(&self) -> Option<f64> {
        let mut v: alloc::vec::Vec<f64> = self.entries.iter().copied().filter(|c| *c > 0.0).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let k = v.len();
        Some(if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        })
    }
}

/// Cost matrix between two point sets of common dimension.
pub fn cost_matrix<P: AsRef<[f64]>>(y1: &[P], y2: &[P]) -> Result<CostMatrix> {
    let dim = y1
        .first()
        .or_else(|| y2.first())
        .map_or(0, |p| p.as_ref().len());
    for p in y1.iter().chain(y2) {
        if p.as_ref().len() != dim {
            return Err(Error::dim("point dimension", dim, p.as_ref().len()));
        }
    }
    let entries = DMatrix::from_fn(y1.len(), y2.len(), |i, j| {
        y1[i]
            .as_ref()
            .iter()
            .zip(y2[j].as_ref())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    });
    CostMatrix::from_matrix(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::dmatrix;

    #[test]
    fn direct_evaluation() {
        let c = cost_matrix(&[[0.0], [1.0]], &[[0.0], [1.0]]).unwrap();
        assert_eq!(c.entries(), &dmatrix![0.0, 1.0; 1.0, 0.0]);
        let c = cost_matrix(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(c.get(0, 0), 25.0);
    }

    #[test]
    fn identical_clouds_have_zero_diagonal_and_symmetry() {
        let pts = [vec![0.3, -1.0], vec![2.0, 0.5], vec![-0.7, 0.1]];
        let c = cost_matrix(&pts, &pts).unwrap();
        for i in 0..3 {
            assert_eq!(c.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(cost_matrix(&[vec![0.0]], &[vec![0.0, 1.0]]).is_err());
        let a = DMatrix::zeros(2, 3);
        let b = DMatrix::zeros(3, 3);
        assert!(CostMatrix::from_columns(&a, &b).is_err());
    }

    #[test]
    fn median_of_positive_entries() {
        let c = CostMatrix::from_matrix(dmatrix![0.0, 1.0; 3.0, 0.0]).unwrap();
        assert_eq!(c.median_nonzero(), Some(2.0));
        let z = CostMatrix::from_matrix(DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z.median_nonzero(), None);
    }
}
