use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use super::{ObservationPath, StateModel};
use crate::linalg::Covariance;
use crate::rng::{standard_normal, StreamRng};
use crate::{Error, Result};

/// `dx = A x dt + Q^{1/2} dW`, `dy = H x dt + R^{1/2} dV`. Parameter-free.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    drift_matrix: DMatrix<f64>,
    observation_matrix: DMatrix<f64>,
    process_cov: DMatrix<f64>,
    process_sqrt: DMatrix<f64>,
    observation_cov: Covariance,
}

impl LinearGaussianModel {
    pub fn new(
        drift_matrix: DMatrix<f64>,
        observation_matrix: DMatrix<f64>,
        process_cov: DMatrix<f64>,
        observation_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let nx = drift_matrix.nrows();
        if drift_matrix.ncols() != nx {
            return Err(Error::dim("drift matrix columns", nx, drift_matrix.ncols()));
        }
        if observation_matrix.ncols() != nx {
            return Err(Error::dim("observation matrix columns", nx, observation_matrix.ncols()));
        }
        if process_cov.nrows() != nx {
            return Err(Error::dim("process covariance", nx, process_cov.nrows()));
        }
        let ny = observation_matrix.nrows();
        if observation_cov.nrows() != ny {
            return Err(Error::dim("observation covariance", ny, observation_cov.nrows()));
        }
        let process_sqrt = psd_sqrt(&process_cov)?;
        Ok(Self {
            drift_matrix,
            observation_matrix,
            process_cov,
            process_sqrt,
            observation_cov: Covariance::new(observation_cov)?,
        })
    }

    /// Scalar model `dx = a x dt + sqrt(q) dW`, `dy = h x dt + sqrt(r) dV`.
    pub fn scalar(a: f64, h: f64, q: f64, r: f64) -> Result<Self> {
        let m = |v| DMatrix::from_element(1, 1, v);
        Self::new(m(a), m(h), m(q), m(r))
    }

    pub fn drift_matrix(&self) -> &DMatrix<f64> {
        &self.drift_matrix
    }

    pub fn observation_matrix(&self) -> &DMatrix<f64> {
        &self.observation_matrix
    }

    pub fn process_cov(&self) -> &DMatrix<f64> {
        &self.process_cov
    }
}

/// A square root `S` with `S Sᵀ = Q` for a positive semidefinite `Q`.
fn psd_sqrt(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if q.nrows() != q.ncols() {
        return Err(Error::dim("process covariance columns", q.nrows(), q.ncols()));
    }
    if q.iter().any(|v| !v.is_finite()) || (q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
        return Err(Error::Numeric("process covariance must be finite and symmetric".into()));
    }
    if let Some(chol) = q.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = q.clone().symmetric_eigen();
    let floor = -1e-12 * q.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&l| l < floor) {
        return Err(Error::Numeric("process covariance is not positive semidefinite".into()));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root))
}

impl StateModel for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.drift_matrix.nrows()
    }

    fn obs_dim(&self) -> usize {
        self.observation_matrix.nrows()
    }

    fn param_dim(&self) -> usize {
        0
    }

    fn drift(&self, x: &[f64], _params: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| self.drift_matrix[(i, j)] * x[j]).sum();
        }
    }

    fn observe(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| self.observation_matrix[(i, j)] * x[j]).sum();
        }
    }

    fn add_process_noise(&self, x: &mut [f64], scale: f64, rng: &mut StreamRng) {
        let n = x.len();
        let xi: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        for (i, xv) in x.iter_mut().enumerate() {
            let s: f64 = (0..n).map(|j| self.process_sqrt[(i, j)] * xi[j]).sum();
            *xv += scale * s;
        }
    }

    fn observation_cov(&self) -> &Covariance {
        &self.observation_cov
    }
}

/// Mean and covariance path of the discretized Kalman-Bucy filter.
#[derive(Debug, Clone)]
pub struct KalmanBucyMoments {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

/// Explicit-Euler Kalman-Bucy recursion
///
/// `m⁺ = m + A m dt + P Hᵀ R⁻¹ (Δy − H m dt)`,
/// `P⁺ = P + (A P + P Aᵀ + Q − P Hᵀ R⁻¹ H P) dt`.
///
/// Returns `n_steps + 1` entries, starting with `(m₀, P₀)`.
pub fn kalman_bucy_moments(
    model: &LinearGaussianModel,
    path: &ObservationPath,
    m0: &DVector<f64>,
    p0: &DMatrix<f64>,
) -> Result<KalmanBucyMoments> {
    let nx = model.state_dim();
    let ny = model.obs_dim();
    if m0.len() != nx {
        return Err(Error::dim("initial mean", nx, m0.len()));
    }
    if p0.nrows() != nx || p0.ncols() != nx {
        return Err(Error::dim("initial covariance", nx, p0.nrows()));
    }
    if path.obs_dim() != ny {
        return Err(Error::dim("observation increments", ny, path.obs_dim()));
    }
    let a = &model.drift_matrix;
    let h = &model.observation_matrix;
    let q = &model.process_cov;
    let dt = path.dt();
    // R⁻¹ H, formed once.
    let mut rinv_h = h.clone();
    model.observation_cov.solve_mut(&mut rinv_h);

    let mut means = Vec::with_capacity(path.n_steps() + 1);
    let mut covariances = Vec::with_capacity(path.n_steps() + 1);
    let mut m = m0.clone();
    let mut p = p0.clone();
    means.push(m.clone());
    covariances.push(p.clone());
    for dy in path.increments() {
        let dy = DVector::from_column_slice(dy);
        let gain = &p * rinv_h.transpose();
        let innovation = dy - h * &m * dt;
        let m_next = &m + a * &m * dt + &gain * innovation;
        let p_next = &p + (a * &p + &p * a.transpose() + q - &gain * h * &p) * dt;
        m = m_next;
        p = (&p_next + p_next.transpose()) * 0.5;
        if m.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("Kalman-Bucy recursion produced non-finite values".into()));
        }
        means.push(m.clone());
        covariances.push(p.clone());
    }
    Ok(KalmanBucyMoments { means, covariances })
}
