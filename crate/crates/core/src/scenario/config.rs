//! TOML configuration of the apparatus. Lengths in meters, angles in radians.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optics::{
    DetectorRegions, GridGeometry, GridMode, LensSpec, OpenMask, PinholePair, WireGridSpec,
};
use crate::error::OpticsError;
use crate::photon::DEFAULT_PHOTON_RATE;

pub const SCHEMA_VERSION: u32 = 1;

/// The canonical configuration shipped with the crate.
pub const CANONICAL_TOML: &str = include_str!("../../config/canonical.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("cannot read config {path}: {reason}")]
    Io { path: String, reason: String },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub grid: GridSection,
    pub pinholes: PinholeSection,
    pub wire_grid: WireGridSection,
    pub lens: LensSection,
    pub detectors: DetectorSection,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Samples per side (power of two).
    pub samples: usize,
    pub spacing: f64,
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinholeSection {
    pub separation: f64,
    pub diameter: f64,
    #[serde(default)]
    pub relative_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireGridSection {
    pub plane_z: f64,
    pub covering_ratio: f64,
    /// Transverse span of the wires; the whole field when absent.
    #[serde(default)]
    pub extent: Option<f64>,
    #[serde(default = "default_mode")]
    pub mode: GridMode,
}

fn default_mode() -> GridMode {
    GridMode::Absorbing
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensSection {
    pub focal_length: f64,
    pub aperture_diameter: f64,
    pub object_distance: f64,
    /// Solved from the imaging condition when absent.
    #[serde(default)]
    pub image_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// Radius of the circular detector centered on each pinhole image.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_rate")]
    pub photon_rate: f64,
    pub duration: f64,
    pub seed: u64,
}

fn default_rate() -> f64 {
    DEFAULT_PHOTON_RATE
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema_version",
                format!("{} is not supported (expected {SCHEMA_VERSION})", config.schema_version),
            ));
        }
        Ok(config)
    }

    pub fn canonical() -> Self {
        Self::from_toml_str(CANONICAL_TOML).expect("shipped canonical config parses")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Builds and validates the apparatus.
    pub fn apparatus(&self) -> Result<Apparatus, ConfigError> {
        let g = &self.grid;
        let geometry = GridGeometry::square(g.samples, g.spacing, g.wavelength).map_err(|e| {
            let field = match () {
                _ if !(g.samples >= 2 && g.samples.is_power_of_two()) => "grid.samples",
                _ if !(g.spacing.is_finite() && g.spacing > 0.0) => "grid.spacing",
                _ => "grid.wavelength",
            };
            ConfigError::invalid(field, e.to_string())
        })?;

        let p = &self.pinholes;
        let pinholes = PinholePair::new(p.separation, p.diameter, OpenMask::Both, p.relative_phase)
            .map_err(|e| ConfigError::invalid(&format!("pinholes.{}", param_name(&e, "separation")), e.to_string()))?;

        let w = &self.wire_grid;
        if !(w.covering_ratio > 0.0 && w.covering_ratio < 1.0) {
            return Err(ConfigError::invalid(
                "wire_grid.covering_ratio",
                format!("{} must lie in (0, 1)", w.covering_ratio),
            ));
        }
        if !(w.plane_z.is_finite() && w.plane_z > 0.0) {
            return Err(ConfigError::invalid("wire_grid.plane_z", format!("{} must be positive", w.plane_z)));
        }
        if let Some(extent) = w.extent {
            if !(extent.is_finite() && extent > 0.0) {
                return Err(ConfigError::invalid("wire_grid.extent", format!("{extent} must be positive")));
            }
        }

        let l = &self.lens;
        let lens = match l.image_distance {
            Some(d) => LensSpec::new(l.focal_length, l.aperture_diameter, l.object_distance, d),
            None => LensSpec::focused(l.focal_length, l.aperture_diameter, l.object_distance),
        }
        .map_err(|e| ConfigError::invalid(&format!("lens.{}", param_name(&e, "image_distance")), e.to_string()))?;
        if !(lens.object_distance > w.plane_z) {
            return Err(ConfigError::invalid(
                "lens.object_distance",
                format!(
                    "lens at {} m must lie beyond the wire grid at {} m",
                    lens.object_distance, w.plane_z
                ),
            ));
        }

        let detectors = DetectorRegions::at_pinhole_images(&pinholes, &lens, self.detectors.radius, &geometry)
            .map_err(|e| ConfigError::invalid("detectors.radius", e.to_string()))?;

        let monte_carlo = match &self.monte_carlo {
            Some(mc) => {
                if !(mc.photon_rate.is_finite() && mc.photon_rate > 0.0) {
                    return Err(ConfigError::invalid("monte_carlo.photon_rate", "must be positive"));
                }
                if !(mc.duration.is_finite() && mc.duration > 0.0) {
                    return Err(ConfigError::invalid("monte_carlo.duration", "must be positive"));
                }
                Some(mc.clone())
            }
            None => None,
        };

        Ok(Apparatus {
            geometry,
            pinholes,
            grid_plane_z: w.plane_z,
            covering_ratio: w.covering_ratio,
            extent: w.extent,
            mode: w.mode,
            lens,
            detectors,
            monte_carlo,
        })
    }
}

fn param_name(e: &OpticsError, fallback: &'static str) -> &'static str {
    match e {
        OpticsError::InvalidParameter { name, .. } => name,
        _ => fallback,
    }
}

/// Lowercase hex SHA-256 of the config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a config file, returning the parsed config and its hash.
pub fn load_config(path: &Path) -> Result<(Config, String), ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| ConfigError::Parse(e.to_string()))?;
    Ok((Config::from_toml_str(&text)?, config_hash(&bytes)))
}

/// Validated geometry of the whole apparatus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Apparatus {
    pub geometry: GridGeometry,
    pub pinholes: PinholePair,
    pub grid_plane_z: f64,
    pub covering_ratio: f64,
    pub extent: Option<f64>,
    pub mode: GridMode,
    pub lens: LensSpec,
    pub detectors: DetectorRegions,
    pub monte_carlo: Option<MonteCarloSection>,
}

impl Apparatus {
    /// Fringe period `λz/d` at the wire-grid plane.
    pub fn fringe_period(&self) -> f64 {
        self.geometry.wavelength * self.grid_plane_z / self.pinholes.separation
    }

    /// x of the central intensity maximum of the ideal two-pinhole pattern,
    /// shifted by the relative phase of pinhole 2.
    pub fn fringe_origin(&self) -> f64 {
        self.pinholes.relative_phase / (2.0 * std::f64::consts::PI) * self.fringe_period()
    }

    pub fn with_covering_ratio(&self, a: f64) -> Result<Self, ConfigError> {
        if !(a > 0.0 && a < 1.0) {
            return Err(ConfigError::invalid("wire_grid.covering_ratio", format!("{a} must lie in (0, 1)")));
        }
        Ok(Self {
            covering_ratio: a,
            ..self.clone()
        })
    }

    /// Wire grid registered on the analytic fringe pattern.
    pub fn wire_grid(&self, placement_phase: f64) -> Result<WireGridSpec, OpticsError> {
        WireGridSpec::new(
            self.fringe_period(),
            self.covering_ratio,
            placement_phase,
            self.extent.unwrap_or(2.0 * self.geometry.width()),
            self.mode,
            self.grid_plane_z,
            self.fringe_origin(),
        )
    }
}
