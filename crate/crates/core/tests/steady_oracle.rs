use fockres::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng, fock: bool) -> EngineeredRates64 {
    let m = rng.random_range(2..=10);
    let l = if fock { m - 1 } else { rng.random_range(0..m) };
    let gamma_m = 10f64.powf(rng.random_range(-1.0..3.0));
    let gamma_l = 10f64.powf(rng.random_range(-1.0..3.0));
    let eps = rng.random_range(0.0..0.85);
    let nbar = rng.random_range(0.0..0.2);
    EngineeredRates::new(gamma_m, gamma_l, eps, m, l, nbar, 1.0).unwrap()
}

fn null_space(rates: &EngineeredRates64, n_max: usize) -> SteadyStateReport64 {
    let me = build_master_equation(rates, &fock::HilbertSpec::new(n_max).unwrap()).unwrap();
    let opts = SteadyOptions {
        force_method: Some(SteadyMethod::NullSpace),
        ..Default::default()
    };
    steady_state(&me, &opts).unwrap()
}

#[test]
fn closed_form_matches_null_space_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for draw_ix in 0..12 {
        let rates = draw(&mut rng, draw_ix % 3 == 0);
        let n_max = suggested_n_max(&rates, 1e-8, 400);
        let rep = null_space(&rates, n_max);
        assert_eq!(rep.method, SteadyMethod::NullSpace);
        assert_eq!(rep.null_space_dim, 1);
        let sol = analytic_populations(&rates).unwrap();
        let err = rep
            .populations
            .iter()
            .enumerate()
            .map(|(n, p)| (p - sol.population(n)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "draw {draw_ix}: {rates:?} err {err:e}");
    }
}

#[test]
fn population_fast_path_agrees_with_full_solve() {
    let rates = EngineeredRates::new(1e3, 1e3, 0.8, 5, 4, 0.05, 1.0).unwrap();
    let me = build_master_equation(&rates, &fock::HilbertSpec::new(70).unwrap()).unwrap();
    let fast = steady_state(&me, &SteadyOptions::default()).unwrap();
    assert_eq!(fast.method, SteadyMethod::Populations);
    let full = null_space(&rates, 70);
    for (a, b) in fast.populations.iter().zip(&full.populations) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!(fast.rho.trace_distance(&full.rho).unwrap() < 1e-9);
}

#[test]
fn steady_state_has_no_coherences() {
    let rates = EngineeredRates::new(1e3, 1e3, 0.8, 6, 3, 0.05, 1.0).unwrap();
    let rep = null_space(&rates, 70);
    let m = rep.rho.matrix();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                assert!(m[(i, j)].norm() < 1e-12);
            }
        }
    }
}

#[test]
fn short_truncation_is_reported() {
    let rates = EngineeredRates::new(0.0, 1e3, 0.8, 40, 4, 0.05, 1.0).unwrap();
    let me = build_master_equation(&rates, &fock::HilbertSpec::new(20).unwrap()).unwrap();
    let err = steady_state(&me, &SteadyOptions::default()).unwrap_err();
    assert!(matches!(err, Error::TruncationInsufficient { .. }));
}
