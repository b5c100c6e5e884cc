//! Shared fixtures for the benchmarks.

use afshar_core::{make_two_pinhole_source, Apparatus, Config, Field2D, GridGeometry, OpenMask, PinholePair};

pub fn canonical() -> Apparatus {
    Config::canonical().apparatus().expect("canonical config is valid")
}

/// Canonical pinholes on an `n`-sample square grid with the canonical spacing.
pub fn source(n: usize) -> Field2D {
    let a = canonical();
    let g = GridGeometry::square(n, a.geometry.dx, a.geometry.wavelength).expect("valid grid");
    let p = PinholePair { open: OpenMask::Both, ..a.pinholes };
    make_two_pinhole_source(&p, &g).expect("pinholes fit")
}
