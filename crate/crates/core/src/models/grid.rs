use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Equidistant periodic grid on `[0, domain_length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n_points: usize,
    domain_length: f64,
}

impl GridSpec {
    pub fn new(n_points: usize, domain_length: f64) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::Config(alloc::format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::Config(alloc::format!(
                "domain length must be positive, got {domain_length}"
            )));
        }
        Ok(Self {
            n_points,
            domain_length,
        })
    }

    /// `n_points` nodes on `[0, 2π)`.
    pub fn periodic_2pi(n_points: usize) -> Result<Self> {
        Self::new(n_points, core::f64::consts::TAU)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn spacing(&self) -> f64 {
        self.domain_length / self.n_points as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.spacing();
        (0..self.n_points).map(move |i| i as f64 * dx)
    }
}

/// Second-order central difference Laplacian with periodic wraparound.
pub fn laplacian_periodic(field: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    let mut out = vec![0.0; field.len()];
    laplacian_periodic_into(field, grid, &mut out)?;
    Ok(out)
}

/// As [`laplacian_periodic`], writing into `out`.
pub fn laplacian_periodic_into(field: &[f64], grid: &GridSpec, out: &mut [f64]) -> Result<()> {
    let n = grid.n_points();
    if field.len() != n {
        return Err(Error::dim("laplacian input", n, field.len()));
    }
    if out.len() != n {
        return Err(Error::dim("laplacian output", n, out.len()));
    }
    let inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
    for i in 0..n {
        let left = field[(i + n - 1) % n];
        let right = field[(i + 1) % n];
        out[i] = (right - 2.0 * field[i] + left) * inv_dx2;
    }
    Ok(())
}
