//! Error metrics of a run against the reference trajectory.

use enkf_etpf::filter::RunRecord;
use enkf_etpf::models::Trajectory;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub step: usize,
    pub time: f64,
    pub parameter_mean: Vec<f64>,
    /// `Σᵢ wⁱ exp(λⁱ)`, the velocity estimate.
    pub velocity_mean: Vec<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub rmse: Option<f64>,
    pub ess: f64,
    pub resampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n_steps: usize,
    pub final_time: f64,
    pub resample_count: usize,
    pub resample_times: Vec<f64>,
    pub min_ess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_velocity: Option<f64>,
    /// First time after which the relative velocity error stays within 10%.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_to_10_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub steps: Vec<StepMetrics>,
    pub summary: Summary,
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

/// `truth.states[n]` is compared with the state mean of step `n`; `c_true`
/// enables the velocity errors.
pub fn compute(run: &RunRecord, truth: Option<&Trajectory>, c_true: Option<f64>) -> MetricsReport {
    let steps: Vec<StepMetrics> = run
        .steps
        .iter()
        .map(|s| {
            let c = s.exp_parameter_mean.first().copied();
            let abs_error = c.zip(c_true).map(|(c, t)| (c - t).abs());
            StepMetrics {
                step: s.step,
                time: s.time,
                parameter_mean: s.parameter_mean.clone(),
                velocity_mean: s.exp_parameter_mean.clone(),
                abs_error,
                rel_error: abs_error.zip(c_true).map(|(e, t)| e / t),
                rmse: truth
                    .and_then(|t| t.states.get(s.step))
                    .map(|x| rmse(s.state_mean.as_slice(), x)),
                ess: s.ess,
                resampled: s.resampled,
            }
        })
        .collect();

    let time_to_10_percent = if c_true.is_some() && !steps.is_empty() {
        let last_bad = steps.iter().rposition(|s| s.rel_error.is_none_or(|e| e > 0.1));
        match last_bad {
            None => Some(0.0),
            Some(i) if i + 1 < steps.len() => Some(steps[i].time),
            Some(_) => None,
        }
    } else {
        None
    };
    let last = steps.last();
    let summary = Summary {
        n_steps: steps.len(),
        final_time: last.map_or(0.0, |s| s.time),
        resample_count: steps.iter().filter(|s| s.resampled).count(),
        resample_times: steps.iter().filter(|s| s.resampled).map(|s| s.time).collect(),
        min_ess: steps.iter().map(|s| s.ess).fold(f64::INFINITY, f64::min),
        final_velocity: last.and_then(|s| s.velocity_mean.first().copied()),
        time_to_10_percent,
        terminal_abs_error: last.and_then(|s| s.abs_error),
        terminal_rel_error: last.and_then(|s| s.rel_error),
        terminal_rmse: last.and_then(|s| s.rmse),
    };
    MetricsReport { steps, summary }
}

impl Summary {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use enkf_etpf::filter::{ParticleMixture, StepRecord};
    use nalgebra::{DMatrix, DVector};

    fn record(cs: &[f64]) -> RunRecord {
        let steps = cs
            .iter()
            .enumerate()
            .map(|(n, c)| StepRecord {
                step: n + 1,
                time: (n + 1) as f64,
                parameter_mean: vec![c.ln()],
                exp_parameter_mean: vec![*c],
                block_state_means: vec![],
                state_mean: DVector::from_element(2, 1.0),
                ess: 2.0 - (n % 2) as f64,
                resampled: n % 2 == 1,
            })
            .collect();
        RunRecord {
            steps,
            weight_history: vec![],
            log_weight_history: vec![],
            final_mixture: ParticleMixture::new(vec![vec![0.0]], vec![DMatrix::zeros(2, 2)]).unwrap(),
        }
    }

    #[test]
    fn time_to_band_requires_staying_inside() {
        let r = compute(&record(&[1.5, 1.05, 1.2, 1.05, 0.95]), None, Some(1.0));
        assert_eq!(r.summary.time_to_10_percent, Some(3.0));
        assert_eq!(r.summary.resample_times, vec![2.0, 4.0]);
        assert_eq!(r.summary.min_ess, 1.0);
        assert!((r.summary.terminal_rel_error.unwrap() - 0.05).abs() < 1e-15);
        let r = compute(&record(&[1.0, 1.5]), None, Some(1.0));
        assert_eq!(r.summary.time_to_10_percent, None);
        let r = compute(&record(&[1.0, 1.05]), None, Some(1.0));
        assert_eq!(r.summary.time_to_10_percent, Some(0.0));
    }

    #[test]
    fn rmse_against_truth() {
        let truth = Trajectory {
            states: vec![vec![0.0, 0.0], vec![1.0, 3.0], vec![1.0, 1.0]],
            dt: 1.0,
        };
        let r = compute(&record(&[1.0, 1.0]), Some(&truth), None);
        assert_eq!(r.steps[0].rmse, Some(2f64.sqrt()));
        assert_eq!(r.steps[1].rmse, Some(0.0));
        assert!(r.summary.time_to_10_percent.is_none());
        assert!(r.steps[0].abs_error.is_none());
    }
}
