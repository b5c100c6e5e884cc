use thiserror::Error;

/// Failures raised by the field construction, propagation and masking stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("resolution: {0}")]
    Resolution(String),

    #[error(
        "wraparound: {fraction:.3e} of the field power sits in the {width}-sample border \
         after propagating {distance} m (limit {limit:.1e})"
    )]
    Wraparound {
        fraction: f64,
        width: usize,
        distance: f64,
        limit: f64,
    },

    #[error("plane mismatch: field at z = {field_z} m, expected z = {expected_z} m")]
    PlaneMismatch { field_z: f64, expected_z: f64 },

    #[error("field geometry mismatch: {0}")]
    GeometryMismatch(String),
}

impl OpticsError {
    /// True for the numerical guards (under-resolution and wraparound) as
    /// opposed to malformed inputs.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Self::Resolution(_) | Self::Wraparound { .. })
    }
}

/// Failures of the visibility and complementarity analyses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("visibility undefined: both intensities are zero")]
    UndefinedVisibility,

    #[error("argument order: i_min = {i_min} exceeds i_max = {i_max}")]
    ArgumentOrder { i_max: f64, i_min: f64 },

    #[error("domain error for `{name}` = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "degenerate bound: wire-area intensity {min_level} is not below open-area \
         intensity {max_level}"
    )]
    DegenerateBound { min_level: f64, max_level: f64 },

    #[error("insufficient span: profile covers {periods:.2} periods, at least 3 required")]
    InsufficientSpan { periods: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

/// Failures of the photon-counting layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotonError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("flux reduction undefined: the baseline tally has no detector counts")]
    UndefinedReduction,

    #[error("which-way parameter undefined: {0} run has no detector counts")]
    UndefinedK(&'static str),
}
