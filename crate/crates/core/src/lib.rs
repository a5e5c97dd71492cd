//! Simulation of a lossy cavity mode driven to steady Fock states by an engineered
//! atomic reservoir.
//!
//! The crate assembles the engineered master equation (selective emission and
//! absorption channels plus non-selective absorption, on top of thermal cavity
//! loss), solves it for transient and steady states, evaluates the closed-form
//! steady photon distribution, validates the selective Jaynes–Cummings engineering
//! against the full three-level Raman Hamiltonian, realizes the reservoir as a
//! repeated-interaction (collision) model, and computes phase-space observables.
//!
//! All numerics are generic over the real scalar [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix double precision.

pub mod analytic;
pub mod collision;
pub mod engineering;
mod error;
pub mod fock;
pub mod integrate;
pub mod lindblad;
pub mod observables;
pub mod reservoir;
mod scalar;
pub mod superop;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub use analytic::{
    analytic_populations, check_conditions, population_series, suggested_n_max, AnalyticSolution,
    PopulationSeries, Regime, RegimeReport,
};
pub use collision::{
    collision_map, simulate_beam, Arrivals, BeamTrajectory, CollisionConfig, CollisionModel,
};
pub use engineering::{
    derive_effective, resonant_jc, selective_jc, solve_selectivity, validate_selectivity,
    EffectiveParams, RamanParams, SelectivityOptions, SelectivityReport,
};
pub use observables::{
    classify_nonclassical, fock_fidelity, mandel_q, state_metrics, wigner, FockFidelity, GridSpec,
    Nonclassicality, StateMetrics, WignerGrid,
};
pub use fock::{
    annihilation, creation, fock_state, number, selective_lowering, thermal_state, DensityMatrix,
    HilbertSpec, Operator, StateTolerance,
};
pub use lindblad::{
    evolve, liouvillian_matrix, steady_state, Channel, MasterEquationSpec, SteadyMethod,
    SteadyOptions, SteadyStateReport,
};
pub use reservoir::{
    build_master_equation, feasibility_check, rates_from_beam, BeamParams, EngineeredRates,
    FeasibilityReport,
};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Operator64 = Operator<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type MasterEquationSpec64 = MasterEquationSpec<f64>;
pub type SteadyStateReport64 = SteadyStateReport<f64>;
pub type EngineeredRates64 = EngineeredRates<f64>;
pub type BeamParams64 = BeamParams<f64>;
pub type AnalyticSolution64 = AnalyticSolution<f64>;
pub type RamanParams64 = RamanParams<f64>;
pub type CollisionConfig64 = CollisionConfig<f64>;
pub type WignerGrid64 = WignerGrid<f64>;
pub type C64 = C<f64>;
