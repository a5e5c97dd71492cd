use std::fs;
use std::path::Path;
use std::process::Command;

use fockres_cli::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fockres"))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

const FOCK5: &str = r#"{
  "name": "small_fock5",
  "mode": "steady",
  "rates": { "gamma_m": 1000, "gamma_l": 1000, "epsilon": 0.8 },
  "targets": { "m": 5, "l": 4 },
  "cavity": { "nbar": 0.05 },
  "hilbert": { "n_max": 30, "tail_limit": 1e-4 },
  "wigner": { "half_width": 5.0, "resolution": 41 }
}"#;

#[test]
fn unknown_keys_are_rejected() {
    let bad = FOCK5.replace("\"cavity\"", "\"cavty\"");
    let err = ScenarioConfig::from_json(&bad).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let bad = FOCK5.replace("\"epsilon\": 0.8", "\"epsilon\": 0.8, \"eps\": 1");
    assert!(ScenarioConfig::from_json(&bad).is_err());
}

#[test]
fn rates_and_beam_are_exclusive() {
    let mut cfg = ScenarioConfig::from_json(FOCK5).unwrap();
    cfg.beam = Some(config::BeamConfig {
        injection_rate: 1.0,
        p_g: 0.5,
        p_e: 0.5,
        p_i: 0.0,
        tau: 0.01,
        zeta: 1.0,
        lambda_tilde: 0.0,
    });
    assert_eq!(resolve(&cfg).unwrap_err().exit_code(), 2);
    cfg.beam = None;
    cfg.rates = None;
    assert_eq!(resolve(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn epsilon_one_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eps.json");
    fs::write(&path, FOCK5.replace("\"epsilon\": 0.8", "\"epsilon\": 1.0")).unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("epsilon < 1"), "{msg}");
}

#[test]
fn short_truncation_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["preset", "fig6", "--nmax", "30", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_preset_lists_the_names() {
    let err = preset("fig9").unwrap_err();
    let msg = err.to_string();
    for p in list_presets() {
        assert!(msg.contains(p.name));
    }
    let out = bin().args(["preset", "fig9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_table() {
    let names: Vec<_> = list_presets().iter().map(|p| p.name).collect();
    assert_eq!(names, ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"]);
    let fig5 = preset("fig5").unwrap().rates.unwrap();
    assert_eq!((fig5.gamma_m, fig5.gamma_l), (1e3, 1e3));
    assert_eq!(preset("fig7").unwrap().rates.unwrap().epsilon, 0.95);
    let fig4 = resolve(&preset_request("fig4").unwrap()).unwrap();
    let t = fig4.targets.unwrap();
    assert_eq!(t.l, 0);
    assert_eq!(t.m, Some(fig4.hilbert.n_max.unwrap() - 2));
    assert!(fig4.notes.iter().any(|n| n.contains("interpretation")));
}

#[test]
fn fig2_and_fig6_reports() {
    let dir = tempfile::tempdir().unwrap();
    let r6 = run_scenario(&preset_request("fig6").unwrap(), dir.path()).unwrap();
    let f = r6.fidelity.unwrap();
    assert!(f.f_sqrt >= 0.96 && f.f_sqrt <= 0.98);
    assert_eq!(r6.regime.unwrap().regime, "fock");
    let r2 = run_scenario(&preset_request("fig2").unwrap(), dir.path()).unwrap();
    let w = r2.wigner.unwrap();
    assert!(w.min >= -1e-3 && !w.nonclassical);
    assert_eq!(r2.regime.unwrap().regime, "truncated");
}

#[test]
fn reruns_are_byte_identical_and_manifest_round_trips() {
    let cfg = ScenarioConfig::from_json(FOCK5).unwrap();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    assert_eq!(files(a.path()), files(b.path()));

    let manifest: Manifest = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.hilbert.n_max, Some(30));
    let out = bin()
        .args(["run", "--config"])
        .arg(a.path().join("manifest.json"))
        .arg("--out")
        .arg(c.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files(a.path()), files(c.path()));
}

#[test]
fn selectivity_mode_writes_transfer_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::from_json(
        r#"{"name": "sel", "mode": "validate-selectivity", "selectivity": {"k": 2, "samples": 50}}"#,
    )
    .unwrap();
    let r = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(r.probes.len(), 3);
    let text = fs::read_to_string(dir.path().join("transfer.csv")).unwrap();
    assert!(text.starts_with("time,transfer_n1,transfer_n2,transfer_n3\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn evolve_and_collision_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::from_json(FOCK5).unwrap();
    cfg.mode = Mode::Evolve;
    cfg.time = Some(config::TimeGrid { t_end: 1.0, samples: 10 });
    let r = run_scenario(&cfg, dir.path()).unwrap();
    assert!(r.fidelity.is_some());
    let text = fs::read_to_string(dir.path().join("populations.csv")).unwrap();
    assert!(text.starts_with("time,p0,p1"));
    assert_eq!(text.lines().count(), 12);

    let poisson = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/poisson_beam.json")).unwrap();
    let cfg = ScenarioConfig::from_json(&poisson).unwrap();
    let r = run_scenario(&cfg, dir.path()).unwrap();
    let c = r.collision.unwrap();
    assert_eq!(c.seed, Some(7));
    assert!(c.atoms > 100);
}
