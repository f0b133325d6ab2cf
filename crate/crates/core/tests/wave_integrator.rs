//! Time-stepping behaviour of the wave model: stability at the reference
//! resolution and first-order convergence.

use enkf_etpf::models::{GaussianFieldPrior, GaussianFieldSampler, GridSpec, StateModel, TimeScheme, WaveModel, WaveState};
use enkf_etpf::rng::{stream, Purpose};

fn initial_state(grid: &GridSpec, seed: u64) -> Vec<f64> {
    let sampler = GaussianFieldSampler::new(&GaussianFieldPrior::default(), grid).unwrap();
    let mut rng = stream(seed, Purpose::InitialTruthField, 0);
    let mut x = sampler.sample(&mut rng);
    x.extend(sampler.sample(&mut rng));
    x
}

fn integrate(model: &WaveModel, x0: &[f64], log_c: f64, dt: f64, steps: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    for _ in 0..steps {
        model.advance(&x, &[log_c], dt, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    x
}

#[test]
fn symplectic_scheme_keeps_energy_bounded_where_explicit_euler_blows_up() {
    let grid = GridSpec::periodic_2pi(100).unwrap();
    let x0 = initial_state(&grid, 1);
    let e0 = WaveState::from_flat(&x0).energy(1.0, &grid);

    let symplectic = WaveModel::new(grid, 0.0, 0.0, 1e-4).unwrap();
    let x = integrate(&symplectic, &x0, 0.0, 0.01, 400);
    let e = WaveState::from_flat(&x).energy(1.0, &grid);
    assert!((e / e0 - 1.0).abs() < 0.05, "symplectic energy ratio {}", e / e0);

    let explicit = symplectic.clone().with_scheme(TimeScheme::ExplicitEuler);
    let x = integrate(&explicit, &x0, 0.0, 0.01, 400);
    let e = WaveState::from_flat(&x).energy(1.0, &grid);
    assert!(e / e0 > 10.0, "explicit energy ratio {}", e / e0);
}

#[test]
fn symplectic_scheme_converges_at_first_order() {
    let grid = GridSpec::periodic_2pi(32).unwrap();
    let model = WaveModel::new(grid, 0.001, 0.0, 1e-4).unwrap();
    let x0 = initial_state(&grid, 2);
    let t_end = 0.5;
    let reference = integrate(&model, &x0, 0.1, t_end / 12_800.0, 12_800);
    let err = |steps: usize| {
        let x = integrate(&model, &x0, 0.1, t_end / steps as f64, steps);
        x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [100, 200, 400].into_iter().map(err).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((0.8..1.3).contains(&order), "observed order {order} from {errors:?}");
    }
}
