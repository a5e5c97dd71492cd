use fockres::fock::HilbertSpec;
use fockres::*;

fn steady(rates: EngineeredRates64, n_max: usize) -> DensityMatrix64 {
    let me = build_master_equation(&rates, &HilbertSpec::new(n_max).unwrap()).unwrap();
    let opts = SteadyOptions {
        tail_limit: 1e-4,
        ..Default::default()
    };
    steady_state(&me, &opts).unwrap().rho
}

fn wigner_min(rho: &DensityMatrix64) -> (f64, WignerGrid64) {
    let g = wigner(rho, &GridSpec::square(6.0, 121)).unwrap();
    (g.min_value, g)
}

#[test]
fn truncated_thermal_state_is_classical() {
    let rho = steady(EngineeredRates::new(1e3, 0.0, 0.8, 5, 0, 0.05, 1.0).unwrap(), 40);
    let tail: f64 = rho.populations()[6..].iter().sum();
    assert!(tail <= 0.01 && (tail - 0.0024460259).abs() < 1e-5, "{tail}");
    let (min, grid) = wigner_min(&rho);
    assert!(min >= -1e-3, "{min}");
    assert!(!classify_nonclassical(&grid).nonclassical);
    assert!((grid.integral - 1.0).abs() < 0.01);
}

#[test]
fn amplified_and_sliced_states_are_nonclassical() {
    let n_max = 60;
    let cases = [
        EngineeredRates::new(0.0, 1e3, 0.8, n_max - 2, 4, 0.05, 1.0).unwrap(),
        EngineeredRates::new(0.0, 1e3, 0.5, n_max - 2, 0, 0.05, 1.0).unwrap(),
        EngineeredRates::new(1e3, 1e3, 0.8, 6, 3, 0.05, 1.0).unwrap(),
        EngineeredRates::new(1e3, 1e3, 0.8, 5, 4, 0.05, 1.0).unwrap(),
    ];
    for rates in cases {
        let rho = steady(rates, n_max);
        let (min, grid) = wigner_min(&rho);
        assert!(min < -0.01, "{rates:?}: {min}");
        assert!(classify_nonclassical(&grid).nonclassical);
    }
}

#[test]
fn slice_concentrates_on_its_window() {
    let rho = steady(EngineeredRates::new(1e3, 1e3, 0.8, 6, 3, 0.05, 1.0).unwrap(), 40);
    let p = rho.populations();
    assert!(p[4] + p[5] + p[6] >= 0.95);
}

#[test]
fn fock_five_fidelity_and_statistics() {
    let rho = steady(EngineeredRates::new(1e3, 1e3, 0.8, 5, 4, 0.05, 1.0).unwrap(), 40);
    let f = fock_fidelity(&rho, 5).unwrap();
    assert!((f.overlap - 0.936).abs() < 0.005);
    assert!((f.sqrt - 0.968).abs() < 0.005);
    let q = mandel_q(&rho).unwrap();
    assert!(q < -0.5 && q >= -1.0, "{q}");
    let m = state_metrics(&rho, Some(5), None).unwrap();
    assert!(m.purity > 0.8 && m.purity <= 1.0);
}
