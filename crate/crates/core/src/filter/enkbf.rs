use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use super::config::{FilterConfig, GainScheme, Innovation, NoiseCoupling};
use super::mixture::ParticleMixture;
use crate::linalg::{column_mean, deviations};
use crate::models::StateModel;
use crate::rng::{fill_standard_normal, stream, triple_index, Purpose};
use crate::{Error, Result};

/// Empirical cross-covariance `(1/(M−1)) Σⱼ (xʲ − x̄)(h(xʲ) − h̄)ᵀ` of a
/// `N_x × M` ensemble, as an `N_x × N_y` matrix.
pub fn empirical_cross_cov<M: StateModel + ?Sized>(model: &M, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = states.ncols();
    if m < 2 {
        return Err(Error::Config("cross-covariance needs at least two members".into()));
    }
    if states.nrows() != model.state_dim() {
        return Err(Error::dim("ensemble state dimension", model.state_dim(), states.nrows()));
    }
    let h = observe_all(model, states);
    let xd = deviations(states, &column_mean(states));
    let hd = deviations(&h, &column_mean(&h));
    Ok(xd * hd.transpose() / (m - 1) as f64)
}

fn observe_all<M: StateModel + ?Sized>(model: &M, states: &DMatrix<f64>) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(model.obs_dim(), states.ncols());
    for (x, mut out) in states.column_iter().zip(h.column_iter_mut()) {
        model.observe(x.as_slice(), out.as_mut_slice());
    }
    h
}

/// Advances every hypothesis' ensemble across one observation interval.
///
/// Returns the block means `h̄ⁱ = (1/M) Σⱼ h(x^{i,j})` evaluated on the states
/// at the start of the interval, which is what the weight update consumes.
/// The result does not depend on whether blocks run concurrently.
pub fn enkbf_step<M: StateModel + ?Sized>(
    model: &M,
    mixture: &mut ParticleMixture,
    dy: &[f64],
    config: &FilterConfig,
    seed: u64,
    step: usize,
) -> Result<Vec<DVector<f64>>> {
    if dy.len() != model.obs_dim() {
        return Err(Error::dim("observation increment", model.obs_dim(), dy.len()));
    }
    if mixture.state_dim() != model.state_dim() {
        return Err(Error::dim("mixture state dimension", model.state_dim(), mixture.state_dim()));
    }
    if mixture.param_dim() != model.param_dim() {
        return Err(Error::dim("mixture parameter dimension", model.param_dim(), mixture.param_dim()));
    }
    if mixture.n_members() < 2 {
        return Err(Error::Config("EnKBF needs at least two members per hypothesis".into()));
    }
    let dy = DVector::from_column_slice(dy);
    let params = mixture.parameters().to_vec();
    let block = |i: usize, x: &DMatrix<f64>| propagate_block(model, &params[i], x, &dy, config, seed, step, i);

    let results: Vec<Result<(DMatrix<f64>, DVector<f64>)>> = {
        let states = mixture.states();
        #[cfg(feature = "parallel")]
        {
            if config.parallel {
                use rayon::prelude::*;
                states.par_iter().enumerate().map(|(i, x)| block(i, x)).collect()
            } else {
                states.iter().enumerate().map(|(i, x)| block(i, x)).collect()
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            states.iter().enumerate().map(|(i, x)| block(i, x)).collect()
        }
    };

    let mut means = Vec::with_capacity(results.len());
    let mut next = Vec::with_capacity(results.len());
    for r in results {
        let (x, h) = r?;
        next.push(x);
        means.push(h);
    }
    for (slot, x) in mixture.states_mut().iter_mut().zip(next) {
        *slot = x;
    }
    mixture.advance_time();
    Ok(means)
}

#[allow(clippy::too_many_arguments)]
fn propagate_block<M: StateModel + ?Sized>(
    model: &M,
    params: &[f64],
    states: &DMatrix<f64>,
    dy: &DVector<f64>,
    config: &FilterConfig,
    seed: u64,
    step: usize,
    block: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (nx, m) = states.shape();
    let ny = model.obs_dim();
    let dt = config.dt;
    let r = model.observation_cov();
    let noise_block = match config.noise_coupling {
        NoiseCoupling::Shared => 0,
        NoiseCoupling::Independent => block + 1,
    };

    let h = observe_all(model, states);
    let x_mean = column_mean(states);
    let h_mean = column_mean(&h);
    let xd = deviations(states, &x_mean);
    let hd = deviations(&h, &h_mean);

    let mut innov = DMatrix::zeros(ny, m);
    let mut xi = DVector::zeros(ny);
    for j in 0..m {
        let mut col = innov.column_mut(j);
        match config.innovation {
            Innovation::Deterministic => {
                col.copy_from(&(dy - (h.column(j) + &h_mean) * (0.5 * dt)));
            }
            Innovation::Stochastic => {
                let mut rng = stream(seed, Purpose::InnovationNoise, triple_index(step, noise_block, j));
                fill_standard_normal(&mut rng, xi.as_mut_slice());
                col.copy_from(&(dy - h.column(j) * dt + r.sqrt_mul(&xi) * dt.sqrt()));
            }
        }
    }

    match config.gain {
        GainScheme::ForwardEuler => r.solve_mut(&mut innov),
        GainScheme::LinearlyImplicit => {
            let c_hh = &hd * hd.transpose() / (m - 1) as f64;
            r.plus_scaled(&c_hh, dt)?.solve_mut(&mut innov);
        }
    }
    // The correction is xd · hdᵀ · S⁻¹ΔI / (M−1); pick the cheaper association.
    let scale = 1.0 / (m - 1) as f64;
    let correction = if m * m * (nx + ny) <= 2 * nx * ny * m {
        &xd * (hd.transpose() * &innov) * scale
    } else {
        (&xd * hd.transpose() * scale) * &innov
    };

    let mut next = DMatrix::zeros(nx, m);
    let mut buf = vec![0.0; nx];
    let sqrt_dt = dt.sqrt();
    for j in 0..m {
        model.advance(states.column(j).as_slice(), params, dt, &mut buf);
        let mut rng = stream(seed, Purpose::ProcessNoise, triple_index(step, noise_block, j));
        model.add_process_noise(&mut buf, sqrt_dt, &mut rng);
        let mut col = next.column_mut(j);
        for ((o, b), c) in col.iter_mut().zip(&buf).zip(correction.column(j).iter()) {
            *o = b + c;
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: None,
                hypothesis: block,
                member: j,
            });
        }
    }
    Ok((next, h_mean))
}
