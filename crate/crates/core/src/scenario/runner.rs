//! End-to-end runs: source → grid plane → (wires) → lens → detectors.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Apparatus, MonteCarloSection};
use super::persist::PlaneImage;
use super::{ScenarioId, ScenarioRef};
use crate::error::{AnalysisError, OpticsError, PhotonError};
use crate::optics::{
    apply_wire_grid, detector_flux, image_through_lens, make_two_pinhole_source, propagate, total_power, Field2D,
    GridMode, LensReport, LossReport, OpenMask, WireLoss,
};
use crate::photon::{run_counting, CountTally, CountingConfig, OutcomeProbabilities};
use crate::visibility::{
    flores_bound_or_zero, profile_visibility, steuernagel_visibility, IntensityProfile, VisibilityReport,
};

/// Half-width, in fringe periods, of the profile window used for the
/// standard visibility.
pub const PROFILE_HALF_WINDOW: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Source,
    PropagationToGrid,
    WireGrid,
    LensImaging,
    VisibilityAnalysis,
    PhotonCounting,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Source => "optics-core/source",
            Stage::PropagationToGrid => "optics-core/propagation to grid plane",
            Stage::WireGrid => "optics-core/wire grid",
            Stage::LensImaging => "optics-core/lens imaging",
            Stage::VisibilityAnalysis => "visibility-analysis",
            Stage::PhotonCounting => "photon-montecarlo",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("{scenario}: stage {stage}: {source}")]
    Optics {
        scenario: String,
        stage: Stage,
        #[source]
        source: OpticsError,
    },

    #[error("{scenario}: stage {stage}: {source}")]
    Analysis {
        scenario: String,
        stage: Stage,
        #[source]
        source: AnalysisError,
    },

    #[error("{scenario}: stage {}: {source}", Stage::PhotonCounting)]
    Photon {
        scenario: String,
        #[source]
        source: PhotonError,
    },
}

impl RunError {
    /// Resolution or wraparound failures, as opposed to bad inputs.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, RunError::Optics { source, .. } if source.is_numerical_guard())
    }
}

/// Powers as fractions of the source power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxFractions {
    pub detector_1: f64,
    pub detector_2: f64,
    /// Removed by the wires.
    pub blocked: f64,
    /// Stopped by the lens aperture.
    pub clipped: f64,
    /// Image plane outside both detectors.
    pub elsewhere: f64,
}

impl FluxFractions {
    pub fn detectors(&self) -> f64 {
        self.detector_1 + self.detector_2
    }

    /// `1 −` the sum of all categories; rounding-level for a unitary pipeline.
    pub fn unaccounted(&self) -> f64 {
        1.0 - (self.detector_1 + self.detector_2 + self.blocked + self.clipped + self.elsewhere)
    }

    /// Photon outcome weights: detector 1, detector 2, blocked, lost elsewhere.
    pub fn outcome_weights(&self) -> [f64; 4] {
        [
            self.detector_1,
            self.detector_2,
            self.blocked,
            (self.clipped + self.elsewhere + self.unaccounted()).max(0.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub placement_phase: f64,
    pub covering_ratio: f64,
    pub period: f64,
    pub fringe_origin: f64,
    pub mode: GridMode,
    /// Blocked power over the power arriving at the grid.
    pub blocked_fraction: f64,
    pub per_wire: Vec<WireLoss>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub id: ScenarioId,
    pub open: OpenMask,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub input_power: f64,
    pub fluxes: FluxFractions,
    pub grid: Option<GridSummary>,
    pub lens: LensReport,
    /// Grid-plane intensity along the row through the axis, before the wires.
    pub profile: IntensityProfile,
    pub visibility: VisibilityReport,
    pub tally: Option<CountTally>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn reference(&self) -> ScenarioRef {
        ScenarioRef {
            id: self.id,
            open: self.open,
        }
    }
}

/// One scenario on a fully specified apparatus.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub reference: ScenarioRef,
    pub apparatus: Apparatus,
    pub config_hash: String,
}

pub fn run_scenario(scenario: &Scenario, mc: Option<&CountingConfig>) -> Result<RunResult, RunError> {
    ScenarioRunner::new(scenario.apparatus.clone(), scenario.config_hash.clone()).run(scenario.reference, mc)
}

#[derive(Clone)]
struct GridPlane {
    source_power: f64,
    field: Arc<Field2D>,
}

/// Runs scenarios on one apparatus, propagating each source to the grid
/// plane only once.
#[derive(Clone)]
pub struct ScenarioRunner {
    apparatus: Apparatus,
    config_hash: String,
    cache: Arc<Mutex<BTreeMap<OpenMask, GridPlane>>>,
}

impl ScenarioRunner {
    pub fn new(apparatus: Apparatus, config_hash: String) -> Self {
        Self {
            apparatus,
            config_hash,
            cache: Arc::default(),
        }
    }

    pub fn apparatus(&self) -> &Apparatus {
        &self.apparatus
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Same runner with a different covering ratio; the grid-plane fields,
    /// which do not depend on it, are shared.
    pub fn with_apparatus(&self, apparatus: Apparatus) -> Self {
        let shared = apparatus.geometry == self.apparatus.geometry
            && apparatus.pinholes == self.apparatus.pinholes
            && apparatus.grid_plane_z == self.apparatus.grid_plane_z;
        Self {
            apparatus,
            config_hash: self.config_hash.clone(),
            cache: if shared { Arc::clone(&self.cache) } else { Arc::default() },
        }
    }

    fn grid_plane(&self, reference: ScenarioRef) -> Result<GridPlane, RunError> {
        let optics = |stage| {
            let scenario = reference.label();
            move |source| RunError::Optics {
                scenario,
                stage,
                source,
            }
        };
        let mut cache = self.cache.lock().expect("grid-plane cache poisoned");
        if let Some(hit) = cache.get(&reference.open) {
            return Ok(hit.clone());
        }
        let a = &self.apparatus;
        let source = make_two_pinhole_source(&a.pinholes.with_open(reference.open), &a.geometry)
            .map_err(optics(Stage::Source))?;
        let source_power = total_power(&source);
        let field = propagate(&source, a.grid_plane_z).map_err(optics(Stage::PropagationToGrid))?;
        let entry = GridPlane {
            source_power,
            field: Arc::new(field),
        };
        cache.insert(reference.open, entry.clone());
        Ok(entry)
    }

    /// Source power and grid-plane field for the given pinholes.
    pub fn grid_plane_field(&self, open: OpenMask) -> Result<(f64, Arc<Field2D>), RunError> {
        let reference = ScenarioRef::expand(if open == OpenMask::Both { ScenarioId::S1 } else { ScenarioId::S5 })
            .into_iter()
            .find(|r| r.open == open)
            .expect("every mask has a reference");
        let plane = self.grid_plane(reference)?;
        Ok((plane.source_power, plane.field))
    }

    /// Wire-grid pass only, for scenarios with a grid.
    pub fn mask(&self, reference: ScenarioRef) -> Result<Option<(Field2D, LossReport)>, RunError> {
        let Some(phase) = reference.id.placement_phase() else {
            return Ok(None);
        };
        let plane = self.grid_plane(reference)?;
        let wrap = |source| RunError::Optics {
            scenario: reference.label(),
            stage: Stage::WireGrid,
            source,
        };
        let spec = self.apparatus.wire_grid(phase).map_err(wrap)?;
        apply_wire_grid(&plane.field, &spec).map(Some).map_err(wrap)
    }

    /// Grid-plane intensity after the wires (before them when there are
    /// none), block-summed to at most `max_side` samples per side.
    pub fn grid_plane_image(&self, reference: ScenarioRef, max_side: usize) -> Result<PlaneImage, RunError> {
        let plane = self.grid_plane(reference)?;
        let masked = self.mask(reference)?;
        let field = masked.as_ref().map_or(plane.field.as_ref(), |(f, _)| f);
        let g = field.geometry();
        Ok(PlaneImage::from_intensity(
            &reference.label(),
            &field.intensity(),
            g.nx,
            g.ny,
            g.dx,
            g.dy,
            field.plane_z(),
            max_side,
        ))
    }

    /// Monte Carlo settings for `reference` drawn from the config section,
    /// with a per-scenario seed derived from `seed`.
    pub fn counting_config(
        &self,
        reference: ScenarioRef,
        section: &MonteCarloSection,
        seed: u64,
        duration: Option<f64>,
    ) -> Result<CountingConfig, RunError> {
        CountingConfig::new(
            section.photon_rate,
            duration.unwrap_or(section.duration),
            scenario_seed(seed, reference),
            reference.label(),
        )
        .map_err(|source| RunError::Photon {
            scenario: reference.label(),
            source,
        })
    }

    pub fn run(&self, reference: ScenarioRef, mc: Option<&CountingConfig>) -> Result<RunResult, RunError> {
        let label = reference.label();
        let a = &self.apparatus;
        let plane = self.grid_plane(reference)?;
        let period = a.fringe_period();
        let mut warnings = Vec::new();

        let geometry = *plane.field.geometry();
        let row = geometry.ny / 2;
        let positions: Vec<f64> = (0..geometry.nx).map(|i| geometry.x(i)).collect();
        let profile = IntensityProfile::new(positions, plane.field.row_intensity(row)).map_err(|source| {
            RunError::Analysis {
                scenario: label.clone(),
                stage: Stage::VisibilityAnalysis,
                source,
            }
        })?;

        let masked = self.mask(reference)?;
        let (at_grid, grid_summary, blocked_power) = match &masked {
            Some((field, loss)) => {
                let spec = a
                    .wire_grid(reference.id.placement_phase().unwrap_or_default())
                    .expect("validated by mask");
                let summary = GridSummary {
                    placement_phase: spec.placement_phase,
                    covering_ratio: spec.covering_ratio,
                    period: spec.period,
                    fringe_origin: spec.fringe_origin,
                    mode: spec.mode,
                    blocked_fraction: loss.blocked_fraction,
                    per_wire: loss.per_wire.clone(),
                };
                (field, Some(summary), loss.blocked_power)
            }
            None => (plane.field.as_ref(), None, 0.0),
        };

        let (image, lens_report) = image_through_lens(at_grid, &a.lens).map_err(|source| RunError::Optics {
            scenario: label.clone(),
            stage: Stage::LensImaging,
            source,
        })?;
        drop(masked);
        if lens_report.vignetting {
            warnings.push(format!(
                "vignetting: lens aperture clips {:.2}% of the incident power",
                100.0 * lens_report.clipped_fraction
            ));
        }
        let flux = detector_flux(&image, &a.detectors);
        drop(image);

        let p = plane.source_power;
        let fluxes = FluxFractions {
            detector_1: flux.flux_1 / p,
            detector_2: flux.flux_2 / p,
            blocked: blocked_power / p,
            clipped: lens_report.clipped_power / p,
            elsewhere: flux.elsewhere / p,
        };

        let visibility =
            self.visibility_report(&label, &profile, grid_summary.as_ref(), period, reference.open == OpenMask::Both)?;

        let tally = match mc {
            Some(cfg) => {
                let probabilities = OutcomeProbabilities::new(fluxes.outcome_weights())
                    .map_err(|source| RunError::Photon {
                        scenario: label.clone(),
                        source,
                    })?;
                Some(run_counting(cfg, &probabilities))
            }
            None => None,
        };

        Ok(RunResult {
            scenario: label,
            id: reference.id,
            open: reference.open,
            config_hash: self.config_hash.clone(),
            seed: mc.map(|c| c.rng_seed),
            input_power: p,
            fluxes,
            grid: grid_summary,
            lens: lens_report,
            profile,
            visibility,
            tally,
            warnings,
        })
    }

    fn visibility_report(
        &self,
        label: &str,
        profile: &IntensityProfile,
        grid: Option<&GridSummary>,
        period: f64,
        fringes: bool,
    ) -> Result<VisibilityReport, RunError> {
        let analysis = |source| RunError::Analysis {
            scenario: label.to_string(),
            stage: Stage::VisibilityAnalysis,
            source,
        };
        let mut method = Vec::new();
        let v_standard = if fringes {
            let origin = self.apparatus.fringe_origin();
            let half = PROFILE_HALF_WINDOW * period;
            let window = profile.window(origin - half, origin + half).map_err(analysis)?;
            method.push(format!(
                "v_standard: mean per-period extrema of the pre-mask grid-plane profile within ±{PROFILE_HALF_WINDOW} periods"
            ));
            Some(profile_visibility(&window, period).map_err(analysis)?)
        } else {
            method.push("v_standard: not computed, a single open pinhole produces no fringes".into());
            None
        };
        let (mut v_flores, mut degenerate, mut v_t, mut a, mut loss, mut phase) = (None, false, None, None, None, None);
        if let Some(g) = grid {
            let (v, flag) = flores_bound_or_zero(g.blocked_fraction, g.covering_ratio).map_err(analysis)?;
            v_flores = Some(v);
            degenerate = flag;
            v_t = Some(steuernagel_visibility(g.covering_ratio).map_err(analysis)?);
            a = Some(g.covering_ratio);
            loss = Some(g.blocked_fraction);
            phase = Some(g.placement_phase);
            method.push("v_flores_lower_bound: square profile with L = blocked-at-grid fraction of this run".into());
            method.push("v_steuernagel_transmitted: closed form sin(aπ)/(π(1−a)) for this run's a".into());
        }
        Ok(VisibilityReport {
            v_standard,
            v_flores_lower_bound: v_flores,
            flores_degenerate: degenerate,
            v_steuernagel_transmitted: v_t,
            covering_ratio: a,
            loss_fraction: loss,
            placement_phase: phase,
            period_hint: period,
            method,
        })
    }
}

/// Per-scenario seed: SplitMix64 of the base seed and the scenario index.
pub fn scenario_seed(base: u64, reference: ScenarioRef) -> u64 {
    let index = ScenarioRef::canonical_set()
        .iter()
        .position(|r| *r == reference)
        .unwrap_or(0) as u64;
    let mut z = base.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
