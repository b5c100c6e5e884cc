//! Scalar wave-optics model of the two-pinhole wire-grid experiment, with
//! the competing visibility analyses, photon-counting statistics and the
//! scenario runner that ties them together.

pub mod error;
pub mod optics;
pub mod photon;
pub mod quadrature;
pub mod scenario;
pub mod visibility;

pub use error::{AnalysisError, OpticsError, PhotonError};
pub use optics::*;
pub use photon::{
    estimate_k, flux_reduction, sample_outcomes, sample_photon_count, CountTally, CountingConfig,
    FluxReduction, OutcomeProbabilities,
};
pub use scenario::{
    compare_analyses, run_scenario, summarize, Apparatus, Config, RunResult, Scenario, ScenarioId, ScenarioRef,
    ScenarioRunner, Summary,
};
pub use visibility::{
    duality_check, flores_lower_bound, profile_visibility, quadrature_check, steuernagel_transmitted_intensities,
    steuernagel_visibility, visibility, DualityReport, IntensityProfile, PhaseCase, VisibilityReport,
};
