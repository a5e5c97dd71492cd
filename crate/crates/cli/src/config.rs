//! Declarative scenario description, read from strict JSON.

use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Steady state of the engineered master equation.
    Steady,
    /// Time evolution from an initial field state.
    Evolve,
    /// Closed-form steady distribution only.
    Analytic,
    /// Full three-level Raman dynamics against the selective doublet model.
    ValidateSelectivity,
    /// Atomic beam as repeated collisions.
    Collision,
    /// A named preset; resolved into its own mode before running.
    FigurePreset,
}

/// Truncation of the cavity mode. Without `n_max` the smallest truncation whose
/// cutoff population stays below `tail_limit / 2` is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default = "default_tail_limit")]
    pub tail_limit: f64,
}

fn default_tail_limit() -> f64 {
    1e-8
}

impl Default for HilbertConfig {
    fn default() -> Self {
        Self {
            n_max: None,
            tail_limit: default_tail_limit(),
        }
    }
}

/// Engineered rates in units of the cavity damping `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub gamma_m: f64,
    pub gamma_l: f64,
    pub epsilon: f64,
}

/// Atomic beam, frequencies in units of `γ` and times in units of `1/γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub injection_rate: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub p_i: f64,
    pub tau: f64,
    pub zeta: f64,
    pub lambda_tilde: f64,
}

/// Selective indices. `m` may be omitted when `γ_m = 0`, in which case the inert
/// index is parked at `n_max − 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub l: usize,
    /// Fock level scored by the fidelity; defaults to `m` when `m = l + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub nbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Vacuum,
    Thermal,
    Fock(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    pub half_width: f64,
    pub resolution: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            resolution: 201,
        }
    }
}

/// Raman couplings in units of `|λ|`. Omitted detunings default to the reference
/// hierarchy `Δ = Δ₁ = 10√(k+1)|λ|`, `|Ω₂| = √(k+1)|λ|/10`; `Ω₁` and `Δ₂` are always
/// solved from the resonance condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectivityConfig {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<f64>,
    /// Initial doublets `|g, n+1>` to integrate; defaults to `k−1, k, k+1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<usize>,
    /// Defaults to the half Rabi time `π / (2|ζ_k|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    400
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalModel {
    #[default]
    Regular,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSettings {
    #[serde(default)]
    pub arrivals: ArrivalModel,
    #[serde(default = "default_true")]
    pub dissipation_in_transit: bool,
}

fn default_true() -> bool {
    true
}

impl Default for CollisionSettings {
    fn default() -> Self {
        Self {
            arrivals: ArrivalModel::Regular,
            dissipation_in_transit: true,
        }
    }
}

/// One experiment. Exactly one of `rates` and `beam` is given for the field modes;
/// `validate-selectivity` and `figure-preset` take neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub hilbert: HilbertConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Targets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeGrid>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub wigner: WignerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selectivity: Option<SelectivityConfig>,
    #[serde(default)]
    pub collision: CollisionSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Interpretation flags carried into the report.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not need the physics library.
    pub fn check(&self) -> Result<(), RunError> {
        let cfg = |msg: String| Err(RunError::Config(msg));
        if self.name.trim().is_empty() {
            return cfg("name must not be empty".into());
        }
        let field_mode = matches!(
            self.mode,
            Mode::Steady | Mode::Evolve | Mode::Analytic | Mode::Collision
        );
        match (self.mode, &self.rates, &self.beam) {
            (Mode::Collision, _, None) => return cfg("collision mode needs a beam".into()),
            (Mode::Collision, Some(_), Some(_)) => {
                return cfg("give exactly one of rates and beam".into())
            }
            _ if field_mode && self.rates.is_some() == self.beam.is_some() => {
                return cfg("give exactly one of rates and beam".into())
            }
            _ if !field_mode && (self.rates.is_some() || self.beam.is_some()) => {
                return cfg(format!("mode {:?} takes neither rates nor beam", self.mode))
            }
            _ => {}
        }
        if field_mode {
            if self.targets.is_none() {
                return cfg("targets (m, l) are required".into());
            }
            if self.cavity.is_none() {
                return cfg("cavity.nbar is required".into());
            }
        }
        match self.mode {
            Mode::Evolve if self.time.is_none() => return cfg("evolve mode needs a time grid".into()),
            Mode::ValidateSelectivity if self.selectivity.is_none() => {
                return cfg("validate-selectivity mode needs a selectivity block".into())
            }
            Mode::FigurePreset if self.preset.is_none() => {
                return cfg("figure-preset mode needs a preset name".into())
            }
            _ => {}
        }
        if let Some(t) = &self.time {
            if !(t.t_end > 0.0 && t.t_end.is_finite()) || t.samples == 0 {
                return cfg("time grid needs t_end > 0 and samples >= 1".into());
            }
        }
        if !(self.hilbert.tail_limit > 0.0) {
            return cfg("hilbert.tail_limit must be > 0".into());
        }
        Ok(())
    }
}
