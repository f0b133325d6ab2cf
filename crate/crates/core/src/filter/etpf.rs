use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::config::{DistanceSpace, FilterConfig, TransportBackend};
use super::mixture::ParticleMixture;
use crate::transport::{
    barycenter, cost_matrix, extract_permutations, sinkhorn, solve_transport, BarycenterParams, SinkhornParams,
};
use crate::Result;

/// What a resampling step did, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleReport {
    /// Optimal coupling `T*` between the weighted and the uniform mixture.
    pub coupling: DMatrix<f64>,
    pub objective: f64,
    /// Set for the Sinkhorn backend.
    pub sinkhorn_converged: Option<bool>,
    /// Members were permuted by barycenter correspondences before mixing.
    pub rearranged: bool,
    /// Rearrangement was requested but a permutation could not be recovered
    /// reliably, so the blocks were mixed in their original member order.
    pub rearrangement_skipped: bool,
}

/// Replaces the weighted mixture by an equally weighted one through the
/// optimal coupling `T*` between `Σ wⁱ δ_{yⁱ}` and `Σ (1/L) δ_{yⁱ}`:
/// `λ̃ʲ = L Σᵢ λⁱ T*ᵢⱼ` and, member by member, `x̃^{j,k} = L Σₗ x^{l,k} T*ₗⱼ`.
///
/// Columns of `T*` sum to `1/L`, so the factor `L` (not `M`) makes every
/// new point a convex combination of the old ones.
pub fn etpf_resample(mixture: &mut ParticleMixture, config: &FilterConfig) -> Result<ResampleReport> {
    let l = mixture.n_hypotheses();
    let points: Vec<Vec<f64>> = match config.distance_space {
        DistanceSpace::Parameters => mixture.parameters().to_vec(),
        DistanceSpace::Extended => mixture
            .parameters()
            .iter()
            .zip(mixture.block_means())
            .map(|(p, x)| p.iter().copied().chain(x.iter().copied()).collect())
            .collect(),
    };
    let cost = cost_matrix(&points, &points)?;
    let uniform = vec![1.0 / l as f64; l];
    let (plan, objective, sinkhorn_converged) = match config.transport {
        TransportBackend::ExactLp => {
            let s = solve_transport(&cost, mixture.weights(), &uniform)?;
            (s.coupling.into_plan(), s.objective, None)
        }
        TransportBackend::Sinkhorn => {
            let s = sinkhorn(&cost, mixture.weights(), &uniform, &SinkhornParams::for_cost(&cost))?;
            (s.coupling.into_plan(), s.objective, Some(s.converged))
        }
    };

    let mut rearranged = false;
    let mut rearrangement_skipped = false;
    let mut states = mixture.states().to_vec();
    if config.use_barycenter_rearrangement && l > 1 {
        let bary = barycenter(&states, &BarycenterParams::default())?;
        let perms = extract_permutations(&bary.couplings, mixture.n_members())?;
        if perms.iter().any(|p| p.flagged) {
            rearrangement_skipped = true;
        } else {
            for (block, p) in states.iter_mut().zip(&perms) {
                let old = block.clone();
                for (j, &src) in p.map.iter().enumerate() {
                    block.set_column(j, &old.column(src));
                }
            }
            rearranged = true;
        }
    }

    let lf = l as f64;
    let np = mixture.param_dim();
    let mut parameters = vec![vec![0.0; np]; l];
    for (j, out) in parameters.iter_mut().enumerate() {
        for (i, p) in mixture.parameters().iter().enumerate() {
            let t = plan[(i, j)];
            if t != 0.0 {
                for (o, v) in out.iter_mut().zip(p) {
                    *o += lf * t * v;
                }
            }
        }
    }
    let (nx, m) = (mixture.state_dim(), mixture.n_members());
    let new_states: Vec<DMatrix<f64>> = (0..l)
        .map(|j| {
            let mut x = DMatrix::zeros(nx, m);
            for (i, block) in states.iter().enumerate() {
                let t = plan[(i, j)];
                if t != 0.0 {
                    x += block * (lf * t);
                }
            }
            x
        })
        .collect();
    mixture.replace(parameters, new_states);

    Ok(ResampleReport {
        coupling: plan,
        objective,
        sinkhorn_converged,
        rearranged,
        rearrangement_skipped,
    })
}
