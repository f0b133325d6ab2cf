use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Innovation used in the EnKBF correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Innovation {
    /// `ΔI = Δy − ½ (h(x) + h̄) dt`.
    #[default]
    Deterministic,
    /// `ΔI = Δy − h(x) dt + R^{1/2} ΔU`.
    Stochastic,
}

/// Time discretization of the EnKBF gain term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainScheme {
    /// `C R⁻¹ ΔI`. Stable only while `dt · λ_max(H P Hᵀ) ≲ 2R`.
    ForwardEuler,
    /// `C (R + dt · C_hh)⁻¹ ΔI`, with `C_hh` the empirical covariance of
    /// `h(x)`. Agrees with the forward-Euler gain to `O(dt²)` per step and
    /// never overshoots, however large the ensemble spread is relative to `R`.
    #[default]
    LinearlyImplicit,
}

/// Points between which transport distances are measured during resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceSpace {
    /// `λⁱ` only.
    #[default]
    Parameters,
    /// `(λⁱ, x̄ⁱ)`, parameters extended by the block's state mean.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportBackend {
    #[default]
    ExactLp,
    Sinkhorn,
}

/// How process and innovation noise is shared between hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseCoupling {
    /// Member `j` of every hypothesis sees the same noise at a given step.
    /// Ensembles that start from the same draws then stay member-wise
    /// correlated, which the member-wise ETPF state transform relies on.
    #[default]
    Shared,
    /// Every `(hypothesis, member)` pair has its own stream.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub innovation: Innovation,
    pub gain: GainScheme,
    /// Resample when `ESS ≤ fraction · L`.
    pub ess_threshold_fraction: f64,
    pub distance_space: DistanceSpace,
    pub use_barycenter_rearrangement: bool,
    pub transport: TransportBackend,
    pub noise_coupling: NoiseCoupling,
    /// Propagate hypotheses on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
    pub dt: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            innovation: Innovation::default(),
            gain: GainScheme::default(),
            ess_threshold_fraction: 0.75,
            distance_space: DistanceSpace::default(),
            use_barycenter_rearrangement: false,
            transport: TransportBackend::default(),
            noise_coupling: NoiseCoupling::default(),
            parallel: true,
            dt: 0.01,
        }
    }
}

impl FilterConfig {
    /// Checks ranges; `n_hypotheses` enables the `fraction · L ≥ 1` check,
    /// which is waived for a single hypothesis (it never resamples).
    pub fn validate(&self, n_hypotheses: Option<usize>) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let f = self.ess_threshold_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("ESS threshold fraction must lie in (0, 1], got {f}")));
        }
        if let Some(l) = n_hypotheses {
            if l >= 2 && f * (l as f64) < 1.0 {
                return Err(Error::Config(format!(
                    "ESS threshold {f} · {l} hypotheses is below one"
                )));
            }
        }
        Ok(())
    }

    pub fn ess_threshold(&self, n_hypotheses: usize) -> f64 {
        self.ess_threshold_fraction * n_hypotheses as f64
    }
}
