use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fockres_cli::{list_presets, preset_request, resolve, run_scenario, RunError, ScenarioConfig};

const OUTPUTS: &str = "\
Outputs (written to --out):
  populations.csv     steady/analytic: n,population
                      evolve/collision with a time grid: time,p0,...,pN
  wigner.csv          x,p,W with x = Re(alpha), p = Im(alpha), x varying slowest
  wigner_matrix.dat   header '# x_min x_max p_min p_max resolution', then one row
                      per p (ascending) with one W value per x
  transfer.csv        validate-selectivity: time,transfer_n<probe>,... (excited-state
                      population for each initial doublet |g, probe+1>)
  report.json         fidelity (sqrt and overlap), regime, condition ratios,
                      solver residuals, Wigner summary, warnings and notes
  manifest.json       resolved config, versions and seed; feed its 'config' back
                      with --config to reproduce the run

Exit codes: 0 ok, 1 i/o, 2 invalid config, 3 solver failure,
            4 truncation insufficient (population of |n_max> above the tail limit)";

#[derive(Parser)]
#[command(name = "fockres", version, about = "Steady Fock states from an engineered atomic reservoir", after_help = OUTPUTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Seed for Poisson arrivals (recorded in the manifest).
    #[arg(long)]
    seed: Option<u64>,
    /// Fock-space truncation; automatic when omitted.
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    #[command(after_help = OUTPUTS)]
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the presets, or run one when NAME is given.
    #[command(after_help = OUTPUTS)]
    Preset {
        name: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run several scenarios in parallel, each into OUT/<name>.
    Sweep {
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        #[arg(long = "preset")]
        presets: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config and print its resolved form.
    Validate {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    // a manifest carries its config under "config"
    if let Ok(m) = serde_json::from_str::<fockres_cli::Manifest>(&text) {
        return Ok(m.config);
    }
    ScenarioConfig::from_json(&text)
}

fn apply(mut cfg: ScenarioConfig, o: &Overrides) -> ScenarioConfig {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(n) = o.nmax {
        cfg.hilbert.n_max = Some(n);
    }
    cfg
}

fn pick(config: Option<PathBuf>, preset: Option<String>, o: &Overrides) -> Result<ScenarioConfig, RunError> {
    let cfg = match (config, preset) {
        (Some(p), _) => load(&p)?,
        (None, Some(name)) => preset_request(&name)?,
        (None, None) => return Err(RunError::Config("give --config or --preset".into())),
    };
    Ok(apply(cfg, o))
}

fn run_one(cfg: &ScenarioConfig, out: &Path) -> Result<(), RunError> {
    let report = run_scenario(cfg, out)?;
    let mut line = format!("{}: n_max = {}", report.name, report.n_max);
    if let Some(r) = &report.regime {
        line.push_str(&format!(", regime = {}", r.regime));
    }
    if let Some(f) = &report.fidelity {
        line.push_str(&format!(", F_sqrt(|{}>) = {:.4}", f.n, f.f_sqrt));
    }
    if let Some(w) = &report.wigner {
        line.push_str(&format!(", W_min = {:.4e}", w.min));
    }
    println!("{line}");
    for w in report.warnings.iter().chain(&report.notes) {
        println!("  note: {w}");
    }
    println!("  wrote {}", out.display());
    Ok(())
}

fn sweep(cfgs: Vec<ScenarioConfig>, out: &Path, jobs: usize) -> Result<(), RunError> {
    let jobs = jobs.max(1);
    let queue = std::sync::Mutex::new(cfgs.into_iter().enumerate().collect::<Vec<_>>());
    let results = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let Some((i, cfg)) = queue.lock().expect("queue").pop() else {
                    break;
                };
                let r = run_one(&cfg, &out.join(&cfg.name));
                if let Err(e) = &r {
                    eprintln!("{}: {e}", cfg.name);
                }
                results.lock().expect("results").push((i, r.err().map(|e| e.exit_code())));
            });
        }
    });
    let worst = results
        .into_inner()
        .expect("results")
        .into_iter()
        .filter_map(|(_, c)| c)
        .max();
    match worst {
        None => Ok(()),
        Some(code) => Err(match code {
            2 => RunError::Config("sweep had invalid configs".into()),
            4 => RunError::Truncation("sweep had truncation failures".into()),
            3 => RunError::Solver("sweep had solver failures".into()),
            _ => RunError::Io(std::io::Error::other("sweep had i/o failures")),
        }),
    }
}

fn main_inner(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            overrides,
        } => run_one(&pick(config, preset, &overrides)?, &out),
        Command::Preset { name: None, .. } => {
            for p in list_presets() {
                println!("{:6} {}", p.name, p.summary);
                for n in &p.config.notes {
                    println!("       {n}");
                }
            }
            Ok(())
        }
        Command::Preset {
            name: Some(name),
            out,
            overrides,
        } => run_one(&apply(preset_request(&name)?, &overrides), &out),
        Command::Sweep {
            configs,
            presets,
            out,
            jobs,
            overrides,
        } => {
            let mut all = Vec::new();
            for p in &configs {
                all.push(apply(load(p)?, &overrides));
            }
            for name in &presets {
                all.push(apply(preset_request(name)?, &overrides));
            }
            if all.is_empty() {
                return Err(RunError::Config("sweep needs at least one --config or --preset".into()));
            }
            sweep(all, &out, jobs)
        }
        Command::Validate {
            config,
            preset,
            overrides,
        } => {
            let cfg = resolve(&pick(config, preset, &overrides)?)?;
            println!("{}", cfg.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
