use fockres::fock::{fock_state, HilbertSpec};
use fockres::*;

/// Beam whose coarse-grained rates are the Fock-|5> set (γ_m = γ_l = 10³, ε = 0.8)
/// with `ζ_m τ = λ̃ τ = x`.
fn fock5_beam(tau: f64, x: f64) -> CollisionConfig64 {
    let (m, l) = (5usize, 4usize);
    let zeta = x / (tau * ((m + 1) as f64).sqrt());
    let zl = zeta * ((l + 1) as f64).sqrt() * tau;
    let beam = BeamParams::from_species_rates(
        1e3 / (x * x),
        1e3 / (zl * zl),
        0.8 / (x * x),
        tau,
        C64::new(zeta, 0.0),
        C64::new(x / tau, 0.0),
    )
    .unwrap();
    CollisionConfig::new(beam, m, l, 30, 0.05, 1.0).unwrap()
}

fn lindblad_distance(cfg: &CollisionConfig64) -> f64 {
    let rates = cfg.coarse_grained_rates().unwrap();
    let me = build_master_equation(&rates, &HilbertSpec::new(cfg.n_max).unwrap()).unwrap();
    let opts = SteadyOptions {
        tail_limit: 1e-4,
        ..Default::default()
    };
    let ss = steady_state(&me, &opts).unwrap();
    let cs = collision_map(cfg).unwrap().stationary_state().unwrap();
    cs.trace_distance(&ss.rho).unwrap()
}

#[test]
fn beam_reproduces_engineered_rates() {
    let cfg = fock5_beam(5e-7, 0.1);
    let rates = cfg.coarse_grained_rates().unwrap();
    assert!((rates.gamma_m / 1e3 - 1.0).abs() < 1e-9);
    assert!((rates.gamma_l / 1e3 - 1.0).abs() < 1e-9);
    assert!((rates.epsilon - 0.8).abs() < 1e-9);
    let d = lindblad_distance(&cfg);
    assert!(d <= 0.02, "{d}");
}

#[test]
fn error_falls_with_weaker_collisions() {
    let tau = 1e-6;
    let coarse = lindblad_distance(&fock5_beam(tau, 0.2));
    let fine = lindblad_distance(&fock5_beam(tau / 2.0, 0.2 / 2f64.sqrt()));
    let ratio = coarse / fine;
    assert!(ratio > 1.5 && ratio < 3.0, "ratio {ratio}");
}

#[test]
fn absorption_atoms_give_the_linear_gain_rate() {
    // only i-atoms, no cavity loss: one slot map against T·γ̃ D[a†]
    let tau = 0.01;
    let lt = 0.1 / tau;
    let rate = 5.0;
    let beam = BeamParams::new(rate, (0.0, 0.0, 1.0), tau, C64::new(0.0, 0.0), C64::new(lt, 0.0)).unwrap();
    let cfg = CollisionConfig::new(beam, 8, 7, 12, 0.0, 0.0).unwrap();
    let model = collision_map(&cfg).unwrap();
    let block = model.period_block(0);
    let period = 1.0 / rate;
    let gamma_tilde = rate * (lt * tau).powi(2);
    for n in 0..=4 {
        let measured = block[(n + 1, n)].re / period;
        let expected = gamma_tilde * (n + 1) as f64;
        assert!((measured / expected - 1.0).abs() <= 0.05, "n = {n}: {measured} vs {expected}");
    }
}

#[test]
fn selective_collisions_respect_the_doublet() {
    let cfg = fock5_beam(1e-6, 0.5);
    let mut cfg = CollisionConfig { gamma: 0.0, ..cfg };
    cfg.beam.p_i = 0.0;
    cfg.dissipation_in_transit = false;
    let model = collision_map(&cfg).unwrap();
    let spec = HilbertSpec::new(cfg.n_max).unwrap();
    for n in [0usize, 1, 2, 3, 8, 20] {
        let out = model.apply_arrival(&fock_state::<f64>(n, &spec).unwrap()).unwrap();
        assert!((out.populations()[n] - 1.0).abs() <= 1e-6, "n = {n}");
    }
}
