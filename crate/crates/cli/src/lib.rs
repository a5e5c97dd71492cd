//! Scenario runner: strict JSON configs in, CSV and JSON artifacts out.

pub mod config;
mod error;
pub mod presets;
pub mod runner;

pub use config::{Mode, ScenarioConfig};
pub use error::RunError;
pub use presets::{list_presets, preset, preset_request, Preset};
pub use runner::{resolve, run_scenario, Manifest, Report};
