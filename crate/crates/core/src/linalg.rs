//! Small dense helpers on top of nalgebra.

use alloc::format;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// A symmetric positive-definite covariance with its Cholesky factor cached.
///
/// Diagonal covariances are detected and handled without dense solves.
#[derive(Debug, Clone)]
pub struct Covariance {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    diagonal: Option<DVector<f64>>,
}

impl Covariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim("covariance (columns)", matrix.nrows(), matrix.ncols()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("covariance has non-finite entries".into()));
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Numeric(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?;
        let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || matrix[(i, j)] == 0.0));
        let diagonal = is_diag.then(|| matrix.diagonal());
        Ok(Self {
            matrix,
            chol,
            diagonal,
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn scaled_identity(dim: usize, variance: f64) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(dim, dim, variance))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal.is_some()
    }

    /// Returns `C⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match &self.diagonal {
            Some(d) => b.component_div(d),
            None => self.chol.solve(b),
        }
    }

    /// Solves `C X = B` for a matrix right-hand side, in place.
    pub fn solve_mut(&self, b: &mut DMatrix<f64>) {
        match &self.diagonal {
            Some(d) => {
                for mut col in b.column_iter_mut() {
                    col.component_div_assign(d);
                }
            }
            None => self.chol.solve_mut(b),
        }
    }

    /// Returns `bᵀ C⁻¹ b`.
    pub fn inv_quadratic(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&self.solve(b))
    }

    /// Returns `L ξ` where `C = L Lᵀ`.
    pub fn sqrt_mul(&self, xi: &DVector<f64>) -> DVector<f64> {
        match &self.diagonal {
            Some(d) => xi.zip_map(d, |x, v| x * v.sqrt()),
            None => self.chol.l() * xi,
        }
    }

    /// Cholesky factor `L`.
    pub fn sqrt(&self) -> DMatrix<f64> {
        match &self.diagonal {
            Some(d) => DMatrix::from_diagonal(&d.map(|v| v.sqrt())),
            None => self.chol.l(),
        }
    }

    /// `C + dt · extra`, the innovation covariance of the stabilized gain.
    pub fn plus_scaled(&self, extra: &DMatrix<f64>, dt: f64) -> Result<Cholesky<f64, Dyn>> {
        let m = &self.matrix + extra * dt;
        Cholesky::new(m).ok_or_else(|| Error::Numeric("innovation covariance not positive definite".into()))
    }
}

/// Column mean of a matrix whose columns are ensemble members.
pub fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    let m = x.ncols() as f64;
    let mut mean = DVector::zeros(x.nrows());
    for col in x.column_iter() {
        mean += col;
    }
    mean / m
}

/// Subtracts `mean` from every column.
pub fn deviations(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut d = x.clone();
    for mut col in d.column_iter_mut() {
        col -= mean;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;
    use alloc::vec;

    #[test]
    fn diagonal_fast_path_agrees_with_dense() {
        let d = Covariance::diagonal(&[2.0, 4.0]).unwrap();
        assert!(d.is_diagonal());
        let b = dvector![1.0, 2.0];
        assert_eq!(d.solve(&b), dvector![0.5, 0.5]);
        let dense = Covariance::new(dmatrix![2.0, 0.5; 0.5, 4.0]).unwrap();
        assert!(!dense.is_diagonal());
        let x = dense.solve(&b);
        let back = dense.matrix() * x;
        assert!((back - b).norm() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert!(Covariance::new(dmatrix![1.0, 2.0; 2.0, 1.0]).is_err());
        assert!(Covariance::new(dmatrix![1.0, 0.1; 0.0, 1.0]).is_err());
        assert!(Covariance::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sqrt_reproduces_matrix() {
        let c = Covariance::new(dmatrix![4.0, 1.0; 1.0, 3.0]).unwrap();
        let l = c.sqrt();
        assert!((&l * l.transpose() - c.matrix()).norm() < 1e-14);
    }
}
