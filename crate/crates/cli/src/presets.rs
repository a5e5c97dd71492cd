//! Named scenarios for the figure states.

use crate::config::*;
use crate::error::RunError;

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ScenarioConfig,
}

fn steady(name: &str, rates: (f64, f64, f64), m: Option<usize>, l: usize, notes: &[&str]) -> ScenarioConfig {
    let (gamma_m, gamma_l, epsilon) = rates;
    ScenarioConfig {
        name: name.to_string(),
        mode: Mode::Steady,
        preset: Some(name.to_string()),
        hilbert: HilbertConfig::default(),
        rates: Some(RatesConfig {
            gamma_m,
            gamma_l,
            epsilon,
        }),
        beam: None,
        targets: Some(Targets { m, l, fock: None }),
        cavity: Some(CavityConfig { nbar: 0.05 }),
        time: None,
        initial: InitialState::Vacuum,
        wigner: WignerConfig::default(),
        selectivity: None,
        collision: CollisionSettings::default(),
        seed: 0,
        output: None,
        notes: notes.iter().map(|s| s.to_string()).collect(),
    }
}

const INERT_M: &str = "interpretation: gamma_m = 0 (amplification only); the inert index m is parked at n_max - 2";

const FIG7_AMBIGUITY: &str = "parameter ambiguity: fig7 is described as the fig4 set with epsilon = 0.95, \
     but the fig4 set has gamma_m = 0 and cannot hold a Fock state; adopted gamma_m = gamma_l = 1000 \
     (the fig5/fig6 set) with m = 10, l = 9, epsilon = 0.95";

/// Preset table, in figure order.
pub fn list_presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "fig2",
            summary: "truncated thermal distribution, m = 5",
            config: steady("fig2", (1e3, 0.0, 0.8), Some(5), 0, &[]),
        },
        Preset {
            name: "fig3",
            summary: "amplified distribution from l + 1 = 5",
            config: steady("fig3", (0.0, 1e3, 0.8), None, 4, &[INERT_M]),
        },
        Preset {
            name: "fig4",
            summary: "vacuum removed, l = 0, epsilon = 0.5",
            config: steady("fig4", (0.0, 1e3, 0.5), None, 0, &[INERT_M]),
        },
        Preset {
            name: "fig5",
            summary: "slice from l + 1 = 4 to m = 6",
            config: steady("fig5", (1e3, 1e3, 0.8), Some(6), 3, &[]),
        },
        Preset {
            name: "fig6",
            summary: "Fock state |5>",
            config: steady("fig6", (1e3, 1e3, 0.8), Some(5), 4, &[]),
        },
        Preset {
            name: "fig7",
            summary: "Fock state |10>, epsilon = 0.95",
            config: ScenarioConfig {
                // the ε = 0.95 tail reaches far out in phase space
                wigner: WignerConfig {
                    half_width: 10.0,
                    resolution: 241,
                },
                ..steady("fig7", (1e3, 1e3, 0.95), Some(10), 9, &[FIG7_AMBIGUITY])
            },
        },
    ]
}

pub fn preset(name: &str) -> Result<ScenarioConfig, RunError> {
    let all = list_presets();
    let names: Vec<&str> = all.iter().map(|p| p.name).collect();
    all.into_iter()
        .find(|p| p.name == name)
        .map(|p| p.config)
        .ok_or_else(|| {
            RunError::Config(format!(
                "unknown preset {name:?}; available: {}",
                names.join(", ")
            ))
        })
}

/// Minimal `figure-preset` config naming `name`; resolution fills in the rest.
pub fn preset_request(name: &str) -> Result<ScenarioConfig, RunError> {
    let base = preset(name)?;
    Ok(ScenarioConfig {
        mode: Mode::FigurePreset,
        rates: None,
        targets: None,
        cavity: None,
        notes: Vec::new(),
        ..base
    })
}
