//! The EnKBF with a single hypothesis against the exact Kalman-Bucy moments
//! of a scalar linear-Gaussian model.

use enkf_etpf::filter::{assimilate, FilterConfig, ParticleMixture};
use enkf_etpf::models::{kalman_bucy_moments, simulate_reference, synthesize_observations, LinearGaussianModel};
use enkf_etpf::rng::{standard_normal, stream, Purpose};
use nalgebra::{DMatrix, DVector};

const A: f64 = -0.5;
const Q: f64 = 0.02;
const R: f64 = 0.1;
const DT: f64 = 0.01;

/// Time-averaged `|ensemble mean − oracle mean|` and time-averaged oracle
/// standard deviation for one seed.
fn tracking_error(seed: u64, members: usize) -> (f64, f64) {
    let model = LinearGaussianModel::scalar(A, 1.0, Q, R).unwrap();
    let (m0, p0) = (0.0, 1.0_f64);
    let mut rng = stream(seed, Purpose::InitialTruthField, 0);
    let x0 = m0 + p0.sqrt() * standard_normal(&mut rng);
    let truth = simulate_reference(&model, &[], &[x0], 2.0, DT, seed).unwrap();
    let obs = synthesize_observations(&model, &truth, &mut stream(seed, Purpose::ObservationNoise, 0)).unwrap();
    let oracle = kalman_bucy_moments(&model, &obs, &DVector::from_element(1, m0), &DMatrix::from_element(1, 1, p0)).unwrap();

    let ens = DMatrix::from_fn(1, members, |_, j| {
        m0 + p0.sqrt() * standard_normal(&mut stream(seed, Purpose::InitialEnsemble, j as u64))
    });
    let mix = ParticleMixture::new(vec![vec![]], vec![ens]).unwrap();
    let config = FilterConfig { dt: DT, ..Default::default() };
    let run = assimilate(&model, &obs, mix, &config, seed).unwrap();
    let n = run.steps.len() as f64;
    let err = run
        .steps
        .iter()
        .map(|s| (s.state_mean[0] - oracle.means[s.step][0]).abs())
        .sum::<f64>()
        / n;
    let sd = oracle.covariances[1..].iter().map(|p| p[(0, 0)].sqrt()).sum::<f64>() / n;
    (err, sd)
}

#[test]
fn ensemble_mean_tracks_the_oracle_within_monte_carlo_error() {
    for members in [50, 200] {
        for seed in 1..=5 {
            let (err, sd) = tracking_error(seed, members);
            assert!(err <= 5.0 * sd / (members as f64).sqrt(), "M={members} seed={seed}: {err} vs sd {sd}");
        }
    }
}

#[test]
fn doubling_the_ensemble_shrinks_the_error_at_the_monte_carlo_rate() {
    let avg = |members| (1..=20).map(|s| tracking_error(s, members).0).sum::<f64>() / 20.0;
    let (e50, e100) = (avg(50), avg(100));
    let ratio = e50 / e100;
    assert!((1.2..=1.7).contains(&ratio), "error ratio {ratio} ({e50} / {e100})");
}
