//! Scenario resolution and execution.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use fockres::fock::{fock_state, thermal_state, HilbertSpec};
use fockres::lindblad::EvolveOptions;
use fockres::*;
use serde::{Deserialize, Serialize};

use crate::config::*;
use crate::error::RunError;
use crate::presets::preset;

/// Largest truncation the automatic choice will go to.
pub const AUTO_N_MAX_CAP: usize = 2000;

pub const POPULATIONS_FILE: &str = "populations.csv";
pub const WIGNER_FILE: &str = "wigner.csv";
pub const WIGNER_MATRIX_FILE: &str = "wigner_matrix.dat";
pub const TRANSFER_FILE: &str = "transfer.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub library_version: String,
    pub scalar: String,
    pub seed: u64,
    pub files: Vec<String>,
    /// Fully resolved scenario; running it again reproduces every file.
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub regime: String,
    pub truncation_ratio: f64,
    pub amplification_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatesSummary {
    pub gamma_m: f64,
    pub gamma_l: f64,
    pub epsilon: f64,
    pub m: usize,
    pub l: usize,
    pub nbar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelitySummary {
    pub n: usize,
    pub f_sqrt: f64,
    pub f_overlap: f64,
    /// Convention matching the quoted figures.
    pub convention: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsSummary {
    pub purity: f64,
    pub mean_n: f64,
    pub mandel_q: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WignerSummary {
    pub min: f64,
    pub max: f64,
    pub integral: f64,
    pub negativity_volume: f64,
    pub imag_residue: f64,
    pub nonclassical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub method: String,
    pub residual: f64,
    pub null_space_dim: usize,
    pub spectral_gap: f64,
    pub sectors: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionSummary {
    pub arrivals: String,
    pub seed: Option<u64>,
    pub atoms: usize,
    pub dropped: usize,
    pub period: f64,
    /// Trace distance to the steady state of the coarse-grained master equation.
    pub lindblad_trace_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSummary {
    pub n: usize,
    pub max_transfer: f64,
    pub final_transfer: f64,
    pub rabi_bound: f64,
    pub min_fidelity: f64,
    pub final_fidelity: f64,
    pub max_auxiliary: f64,
    pub norm_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveSummary {
    pub k: usize,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub xi: f64,
    pub zeta_k: f64,
    pub selectivity_ratio: f64,
    pub t_end: f64,
}

/// Machine-readable run summary.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub mode: Mode,
    pub n_max: usize,
    /// Population of `|n_max>`, the truncation diagnostic.
    pub tail_mass: Option<f64>,
    pub tail_limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelitySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
    /// Largest population difference to the closed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeSummary>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    fn new(cfg: &ScenarioConfig, n_max: usize) -> Self {
        Self {
            name: cfg.name.clone(),
            mode: cfg.mode,
            n_max,
            tail_mass: None,
            tail_limit: cfg.hilbert.tail_limit,
            rates: None,
            regime: None,
            fidelity: None,
            metrics: None,
            wigner: None,
            solver: None,
            analytic_max_error: None,
            collision: None,
            effective: None,
            probes: Vec::new(),
            warnings: Vec::new(),
            notes: cfg.notes.clone(),
        }
    }
}

/// Resolves presets, automatic truncation and parked indices into a self-contained config.
pub fn resolve(cfg: &ScenarioConfig) -> Result<ScenarioConfig, RunError> {
    cfg.check()?;
    let mut r = if cfg.mode == Mode::FigurePreset {
        let name = cfg.preset.as_deref().unwrap_or_default();
        let mut p = preset(name)?;
        p.name = cfg.name.clone();
        if cfg.hilbert.n_max.is_some() {
            p.hilbert.n_max = cfg.hilbert.n_max;
        }
        p.hilbert.tail_limit = cfg.hilbert.tail_limit;
        p.seed = cfg.seed;
        p.wigner = cfg.wigner.clone();
        p.notes.extend(cfg.notes.iter().cloned());
        p
    } else {
        cfg.clone()
    };
    r.output = None;
    r.check()?;
    match r.mode {
        Mode::ValidateSelectivity => {
            let n = r.hilbert.n_max.unwrap_or(SelectivityOptions::default().n_max);
            r.hilbert.n_max = Some(n);
        }
        Mode::FigurePreset => unreachable!("presets resolve to a concrete mode"),
        _ => {
            let t = r.targets.clone().expect("checked");
            // γ_m = 0 leaves m inert; any index above l gives the same generator
            let provisional_m = t.m.unwrap_or(t.l + 1);
            let rates = field_rates(&r, provisional_m)?;
            if t.m.is_none() && rates.gamma_m != 0.0 {
                return Err(RunError::Config("targets.m may be omitted only when gamma_m = 0".into()));
            }
            let n_max = match r.hilbert.n_max {
                Some(n) => n,
                None => suggested_n_max(&rates, r.hilbert.tail_limit, AUTO_N_MAX_CAP),
            };
            let m = match t.m {
                Some(m) => m,
                None if n_max >= t.l + 3 => n_max - 2,
                None => {
                    return Err(RunError::Config(format!(
                        "n_max = {n_max} leaves no room for the parked index above l = {}",
                        t.l
                    )))
                }
            };
            let fock = t.fock.or((m == t.l + 1).then_some(m));
            r.targets = Some(Targets { m: Some(m), l: t.l, fock });
            r.hilbert.n_max = Some(n_max);
        }
    }
    Ok(r)
}

fn nbar_of(cfg: &ScenarioConfig) -> f64 {
    cfg.cavity.as_ref().map_or(0.0, |c| c.nbar)
}

fn beam_params(b: &BeamConfig) -> Result<BeamParams64, RunError> {
    Ok(BeamParams::new(
        b.injection_rate,
        (b.p_g, b.p_e, b.p_i),
        b.tau,
        C64::new(b.zeta, 0.0),
        C64::new(b.lambda_tilde, 0.0),
    )?)
}

/// Engineered rates in units of `γ`, either given or coarse-grained from the beam.
fn field_rates(cfg: &ScenarioConfig, m: usize) -> Result<EngineeredRates64, RunError> {
    let t = cfg.targets.as_ref().expect("checked");
    let nbar = nbar_of(cfg);
    if let Some(r) = &cfg.rates {
        return Ok(EngineeredRates::new(r.gamma_m, r.gamma_l, r.epsilon, m, t.l, nbar, 1.0)?);
    }
    let beam = beam_params(cfg.beam.as_ref().expect("checked"))?;
    Ok(rates_from_beam(&beam, m, t.l, nbar, 1.0)?)
}

/// Resolves and runs a scenario, writing every artifact into `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<Report, RunError> {
    let resolved = resolve(cfg)?;
    let (report, files) = execute(&resolved, out)?;
    let mut files = files;
    files.push(REPORT_FILE.into());
    files.push(MANIFEST_FILE.into());
    write_json(&out.join(REPORT_FILE), &report)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        library_version: fockres::VERSION.into(),
        scalar: "f64".into(),
        seed: resolved.seed,
        files,
        config: resolved,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(report)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, RunError> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn execute(cfg: &ScenarioConfig, out: &Path) -> Result<(Report, Vec<String>), RunError> {
    fs::create_dir_all(out)?;
    let n_max = cfg.hilbert.n_max.expect("resolved");
    let mut report = Report::new(cfg, n_max);
    let files = match cfg.mode {
        Mode::ValidateSelectivity => run_selectivity(cfg, out, &mut report)?,
        Mode::Collision => run_collision(cfg, out, &mut report)?,
        _ => run_field(cfg, out, &mut report)?,
    };
    Ok((report, files))
}

fn target_m(cfg: &ScenarioConfig) -> usize {
    cfg.targets.as_ref().and_then(|t| t.m).expect("resolved")
}

fn summarize_rates(report: &mut Report, rates: &EngineeredRates64) -> Result<(), RunError> {
    report.rates = Some(RatesSummary {
        gamma_m: rates.gamma_m,
        gamma_l: rates.gamma_l,
        epsilon: rates.epsilon,
        m: rates.m,
        l: rates.l,
        nbar: rates.nbar,
    });
    let c = check_conditions(rates)?;
    report.regime = Some(RegimeSummary {
        regime: c.regime.as_str().into(),
        truncation_ratio: c.truncation_ratio,
        amplification_ratio: c.amplification_ratio,
    });
    Ok(())
}

/// Metrics, Wigner grid and files for a final field state.
fn summarize_state(
    cfg: &ScenarioConfig,
    rho: &DensityMatrix64,
    out: &Path,
    report: &mut Report,
) -> Result<Vec<String>, RunError> {
    let grid = wigner(
        rho,
        &GridSpec::square(cfg.wigner.half_width, cfg.wigner.resolution),
    )?;
    let fock = cfg.targets.as_ref().and_then(|t| t.fock);
    let m = state_metrics(rho, fock, Some(&grid))?;
    if let Some(f) = m.fidelity {
        report.fidelity = Some(FidelitySummary {
            n: f.n,
            f_sqrt: f.sqrt,
            f_overlap: f.overlap,
            convention: "sqrt".into(),
        });
    }
    report.metrics = Some(MetricsSummary {
        purity: m.purity,
        mean_n: m.mean_n,
        mandel_q: m.mandel_q,
    });
    let nc = classify_nonclassical(&grid);
    report.wigner = Some(WignerSummary {
        min: grid.min_value,
        max: grid.max_value,
        integral: grid.integral,
        negativity_volume: grid.negativity_volume,
        imag_residue: grid.imag_residue,
        nonclassical: nc.nonclassical,
    });
    if (grid.integral - 1.0).abs() > 0.01 {
        report.warnings.push(format!(
            "Wigner grid integral {:.4} deviates from 1; widen the grid",
            grid.integral
        ));
    }
    let mut w = create(&out.join(WIGNER_FILE))?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join(WIGNER_MATRIX_FILE))?;
    grid.write_matrix(&mut w)?;
    w.flush()?;
    Ok(vec![WIGNER_FILE.into(), WIGNER_MATRIX_FILE.into()])
}

fn write_populations(path: &Path, pops: &[f64]) -> Result<(), RunError> {
    let mut w = create(path)?;
    writeln!(w, "n,population")?;
    for (n, p) in pops.iter().enumerate() {
        writeln!(w, "{n},{p:.12e}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_trajectory(path: &Path, times: &[f64], states: &[DensityMatrix64]) -> Result<(), RunError> {
    let mut w = create(path)?;
    let d = states.first().map_or(0, |s| s.dim());
    let header: Vec<String> = std::iter::once("time".to_string())
        .chain((0..d).map(|n| format!("p{n}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, s) in times.iter().zip(states) {
        let mut line = format!("{t:.12e}");
        for p in s.populations() {
            line.push_str(&format!(",{p:.12e}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn check_tail(report: &mut Report, tail: f64) -> Result<(), RunError> {
    report.tail_mass = Some(report.tail_mass.map_or(tail, |t| t.max(tail)));
    if tail > report.tail_limit {
        return Err(RunError::Truncation(format!(
            "population of |n_max> = {tail:e} exceeds {:e} at n_max = {}",
            report.tail_limit, report.n_max
        )));
    }
    Ok(())
}

fn initial_state(cfg: &ScenarioConfig, spec: &HilbertSpec) -> Result<DensityMatrix64, RunError> {
    Ok(match cfg.initial {
        InitialState::Vacuum => fock_state(0, spec)?,
        InitialState::Thermal => thermal_state(nbar_of(cfg), spec)?,
        InitialState::Fock(n) => fock_state(n, spec)?,
    })
}

fn run_field(cfg: &ScenarioConfig, out: &Path, report: &mut Report) -> Result<Vec<String>, RunError> {
    let n_max = report.n_max;
    let spec = HilbertSpec::new(n_max)?;
    let rates = field_rates(cfg, target_m(cfg))?;
    summarize_rates(report, &rates)?;
    if let Some(b) = &cfg.beam {
        report.warnings.extend(beam_params(b)?.warnings());
    }
    let sol = analytic_populations(&rates)?;
    let mut files = vec![POPULATIONS_FILE.to_string()];
    let rho = match cfg.mode {
        Mode::Analytic => {
            let series = population_series(&sol, n_max);
            check_tail(report, *series.populations.last().expect("n_max >= 0"))?;
            let total: f64 = series.populations.iter().sum();
            let pops: Vec<f64> = series.populations.iter().map(|p| p / total).collect();
            write_populations(&out.join(POPULATIONS_FILE), &series.populations)?;
            DensityMatrix::from_populations(&pops)?
        }
        Mode::Steady => {
            let me = build_master_equation(&rates, &spec)?;
            let opts = SteadyOptions {
                tail_limit: cfg.hilbert.tail_limit,
                ..Default::default()
            };
            let ss = steady_state(&me, &opts)?;
            check_tail(report, ss.tail_mass)?;
            report.solver = Some(SolverSummary {
                method: ss.method.as_str().into(),
                residual: ss.residual,
                null_space_dim: ss.null_space_dim,
                spectral_gap: ss.spectral_gap,
                sectors: ss.sectors,
            });
            report.analytic_max_error = Some(
                ss.populations
                    .iter()
                    .enumerate()
                    .map(|(n, p)| (p - sol.population(n)).abs())
                    .fold(0.0, f64::max),
            );
            write_populations(&out.join(POPULATIONS_FILE), &ss.populations)?;
            ss.rho
        }
        Mode::Evolve => {
            let me = build_master_equation(&rates, &spec)?;
            let grid = cfg.time.as_ref().expect("checked");
            let times: Vec<f64> = (0..=grid.samples)
                .map(|j| grid.t_end * j as f64 / grid.samples as f64)
                .collect();
            let rho0 = initial_state(cfg, &spec)?;
            let traj = evolve(&me, &rho0, &times, &EvolveOptions::default())?;
            for s in &traj.states {
                check_tail(report, s.populations()[n_max])?;
            }
            write_trajectory(&out.join(POPULATIONS_FILE), &traj.times, &traj.states)?;
            traj.states.last().expect("t = 0 sample").clone()
        }
        _ => unreachable!("field modes only"),
    };
    files.extend(summarize_state(cfg, &rho, out, report)?);
    Ok(files)
}

fn run_collision(cfg: &ScenarioConfig, out: &Path, report: &mut Report) -> Result<Vec<String>, RunError> {
    let n_max = report.n_max;
    let spec = HilbertSpec::new(n_max)?;
    let t = cfg.targets.as_ref().expect("resolved");
    let beam = beam_params(cfg.beam.as_ref().expect("checked"))?;
    let mut cc = CollisionConfig::new(beam, target_m(cfg), t.l, n_max, nbar_of(cfg), 1.0)?;
    cc.dissipation_in_transit = cfg.collision.dissipation_in_transit;
    cc.arrivals = match cfg.collision.arrivals {
        ArrivalModel::Regular => Arrivals::Regular,
        ArrivalModel::Poisson => Arrivals::Poisson { seed: cfg.seed },
    };
    report.warnings.extend(cc.warnings());
    let rates = cc.coarse_grained_rates()?;
    summarize_rates(report, &rates)?;
    let model = collision_map(&cc)?;
    let (rho, atoms, dropped, seed) = match &cfg.time {
        None if cc.arrivals != Arrivals::Regular => {
            return Err(RunError::Config("poisson arrivals need a time grid".into()))
        }
        None => {
            let rho = model.stationary_state()?;
            write_populations(&out.join(POPULATIONS_FILE), &rho.populations())?;
            check_tail(report, rho.populations()[n_max])?;
            (rho, 0, 0, None)
        }
        Some(grid) => {
            let rho0 = initial_state(cfg, &spec)?;
            let traj = fockres::collision::simulate_with(&model, &rho0, grid.t_end, grid.samples)?;
            for s in &traj.states {
                check_tail(report, s.populations()[n_max])?;
            }
            write_trajectory(&out.join(POPULATIONS_FILE), &traj.times, &traj.states)?;
            let last = traj.states.last().expect("t = 0 sample").clone();
            (last, traj.arrivals, traj.dropped, traj.seed)
        }
    };
    let me = build_master_equation(&rates, &spec)?;
    let relaxed = SteadyOptions {
        tail_limit: 1.0,
        ..Default::default()
    };
    let ss = steady_state(&me, &relaxed)?;
    report.collision = Some(CollisionSummary {
        arrivals: match cc.arrivals {
            Arrivals::Regular => "regular".into(),
            Arrivals::Poisson { .. } => "poisson".into(),
        },
        seed,
        atoms,
        dropped,
        period: cc.period(),
        lindblad_trace_distance: rho.trace_distance(&ss.rho)?,
    });
    let mut files = vec![POPULATIONS_FILE.to_string()];
    files.extend(summarize_state(cfg, &rho, out, report)?);
    Ok(files)
}

fn run_selectivity(cfg: &ScenarioConfig, out: &Path, report: &mut Report) -> Result<Vec<String>, RunError> {
    let s = cfg.selectivity.as_ref().expect("checked");
    let k = s.k;
    let mut p = RamanParams64::reference(k);
    if let Some(d) = s.delta {
        p.delta = d;
        p.delta1 = d;
    }
    if let Some(d1) = s.delta1 {
        p.delta1 = d1;
    }
    if let Some(o2) = s.omega2 {
        p.omega2 = C64::new(o2, 0.0);
    }
    let p = solve_selectivity(k, &p)?;
    let eff = derive_effective(&p)?;
    let t_end = s.t_end.unwrap_or(PI / (2.0 * eff.zeta_n(k).norm()));
    let probes: Vec<usize> = if s.probes.is_empty() {
        (k.saturating_sub(1)..=k + 1).collect()
    } else {
        s.probes.clone()
    };
    let opts = SelectivityOptions {
        n_max: report.n_max,
        samples: s.samples,
        ..Default::default()
    };
    report.effective = Some(EffectiveSummary {
        k,
        delta: p.delta,
        delta1: p.delta1,
        delta2: p.delta2,
        omega1: p.omega1.norm(),
        omega2: p.omega2.norm(),
        xi: eff.xi,
        zeta_k: eff.zeta_n(k).norm(),
        selectivity_ratio: eff.selectivity_ratio(k),
        t_end,
    });
    let mut runs = Vec::with_capacity(probes.len());
    for &n in &probes {
        let rep = validate_selectivity(k, &p, n, t_end, &opts)?;
        report.probes.push(ProbeSummary {
            n,
            max_transfer: rep.max_transfer,
            final_transfer: rep.final_transfer,
            rabi_bound: rep.rabi_bound,
            min_fidelity: rep.min_fidelity,
            final_fidelity: rep.final_fidelity,
            max_auxiliary: rep.max_auxiliary,
            norm_error: rep.norm_error,
        });
        for w in &rep.warnings {
            if !report.warnings.contains(w) {
                report.warnings.push(w.clone());
            }
        }
        runs.push(rep);
    }
    if !eff.is_selective(k) {
        report.warnings.push(format!(
            "selectivity ratio {:.3} is below the margin {}",
            eff.selectivity_ratio(k),
            fockres::engineering::SELECTIVITY_MARGIN
        ));
    }
    let mut w = create(&out.join(TRANSFER_FILE))?;
    let header: Vec<String> = std::iter::once("time".to_string())
        .chain(probes.iter().map(|n| format!("transfer_n{n}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for j in 0..s.samples {
        let mut line = format!("{:.12e}", runs[0].times[j]);
        for r in &runs {
            line.push_str(&format!(",{:.12e}", r.transfer[j]));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(vec![TRANSFER_FILE.into()])
}
