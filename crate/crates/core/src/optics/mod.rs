//! Field construction, propagation, masking, imaging and detection.

pub mod detector;
pub mod field;
pub mod lens;
pub mod propagation;
pub mod source;
pub mod spectral;
pub mod wire_grid;

pub use detector::{detector_flux, DetectorFlux, DetectorRegions, Region};
pub use field::{total_power, Field2D, GridGeometry};
pub use lens::{image_through_lens, LensReport, LensSpec};
pub use propagation::{border_energy_fraction, propagate, propagate_unguarded};
pub use source::{make_two_pinhole_source, OpenMask, PinholePair};
pub use wire_grid::{apply_wire_grid, GridMode, LossReport, WireGridSpec, WireLoss};
