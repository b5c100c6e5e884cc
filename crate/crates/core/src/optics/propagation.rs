//! Angular-spectrum propagation between parallel planes.
//!
//! Each plane-wave component `(fx, fy)` is multiplied by
//! `exp(i·2π·z·sqrt(1/λ² - fx² - fy²))`; components at or beyond `1/λ`
//! (evanescent) are zeroed. On a grid with `dx, dy > λ/2` nothing is cut and
//! the step is unitary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{ordered_sum, total_power, Field2D, GridGeometry};
use super::spectral::{frequency, Fft2};
use crate::error::OpticsError;

/// Width (samples) of the edge band checked for wrapped-around energy.
pub const GUARD_BORDER: usize = 2;
/// Largest admissible fraction of the power inside the edge band.
pub const GUARD_LIMIT: f64 = 1e-3;

/// Propagates `field` by `distance` (m) and rejects results whose edge band
/// holds more than [`GUARD_LIMIT`] of the power.
pub fn propagate(field: &Field2D, distance: f64) -> Result<Field2D, OpticsError> {
    let out = propagate_unguarded(field, distance)?;
    let fraction = border_energy_fraction(&out, GUARD_BORDER);
    if fraction > GUARD_LIMIT {
        return Err(OpticsError::Wraparound {
            fraction,
            width: GUARD_BORDER,
            distance,
            limit: GUARD_LIMIT,
        });
    }
    Ok(out)
}

/// Same transfer as [`propagate`] without the wraparound check.
pub fn propagate_unguarded(field: &Field2D, distance: f64) -> Result<Field2D, OpticsError> {
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(OpticsError::InvalidParameter {
            name: "distance",
            reason: format!("{distance} must be finite and non-negative"),
        });
    }
    if distance == 0.0 {
        return Ok(field.clone());
    }
    let geometry = *field.geometry();
    let transfer = transfer_function(&geometry, distance);
    let fft = Fft2::new(geometry.nx, geometry.ny);
    let mut spectrum = field.samples().to_vec();
    fft.forward(&mut spectrum);
    spectrum
        .par_iter_mut()
        .zip(transfer.par_iter())
        .for_each(|(s, h)| *s *= h);
    fft.inverse(&mut spectrum);
    Ok(Field2D::from_parts(geometry, field.plane_z() + distance, spectrum))
}

/// Transfer function in FFT bin order.
///
/// The axial phase is split into the on-axis piston `2π·z/λ` (reduced modulo
/// 2π before use) and the residual `2π·z·(kz - 1/λ)`, evaluated in the
/// cancellation-free form `-f²/(kz + 1/λ)`.
pub fn transfer_function(geometry: &GridGeometry, distance: f64) -> Vec<Complex64> {
    let inv_lambda = 1.0 / geometry.wavelength;
    let cutoff = inv_lambda * inv_lambda;
    let piston = 2.0 * PI * (distance * inv_lambda).fract();
    let (nx, ny) = (geometry.nx, geometry.ny);
    let fx: Vec<f64> = (0..nx).map(|k| frequency(k, nx, geometry.dx)).collect();
    let mut h = vec![Complex64::new(0.0, 0.0); nx * ny];
    h.par_chunks_mut(nx).enumerate().for_each(|(ky, row)| {
        let fy = frequency(ky, ny, geometry.dy);
        for (kx, v) in row.iter_mut().enumerate() {
            let f2 = fx[kx] * fx[kx] + fy * fy;
            let arg = cutoff - f2;
            *v = if arg > 0.0 {
                let residual = -f2 / (arg.sqrt() + inv_lambda);
                Complex64::from_polar(1.0, piston + 2.0 * PI * distance * residual)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    });
    h
}

/// Fraction of the field power within `width` samples of any grid edge.
pub fn border_energy_fraction(field: &Field2D, width: usize) -> f64 {
    let total = total_power(field);
    if total == 0.0 {
        return 0.0;
    }
    let (nx, ny) = (field.nx(), field.ny());
    let in_border = |i: usize, j: usize| i < width || j < width || i + width >= nx || j + width >= ny;
    let edge = ordered_sum(field.samples(), nx, |i, j, s| {
        if in_border(i, j) {
            s.norm_sqr()
        } else {
            0.0
        }
    }) * field.geometry().cell_area();
    edge / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::source::{make_two_pinhole_source, OpenMask, PinholePair};

    fn small_source() -> Field2D {
        let g = GridGeometry::square(256, 20e-6, 650e-9).unwrap();
        let p = PinholePair::new(0.32e-3, 0.24e-3, OpenMask::Both, 0.0).unwrap();
        make_two_pinhole_source(&p, &g).unwrap()
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = small_source();
        let g = propagate(&f, 0.0).unwrap();
        assert_eq!(f.samples(), g.samples());
        assert_eq!(g.plane_z(), 0.0);
    }

    #[test]
    fn negative_distance_rejected() {
        assert!(propagate(&small_source(), -1.0).is_err());
    }

    #[test]
    fn conserves_power_and_advances_plane() {
        let f = small_source();
        let g = propagate(&f, 0.05).unwrap();
        let (p0, p1) = (total_power(&f), total_power(&g));
        assert!((p0 - p1).abs() < 1e-12 * p0);
        assert_eq!(g.plane_z(), 0.05);
    }

    #[test]
    fn forward_then_back_recovers_source() {
        let f = small_source();
        let g = propagate_unguarded(&f, 0.05).unwrap();
        // Reverse propagation is the conjugate transfer: conj(P(conj(g))).
        let conj = Field2D::from_samples(*g.geometry(), 0.0, g.samples().iter().map(|c| c.conj()).collect()).unwrap();
        let back = propagate_unguarded(&conj, 0.05).unwrap();
        for (a, b) in f.samples().iter().zip(back.samples()) {
            assert!((a - b.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn evanescent_components_are_removed() {
        // dx < λ/2 puts the grid corners beyond the propagating cutoff.
        let g = GridGeometry::square(16, 0.2e-6, 1e-6).unwrap();
        let h = transfer_function(&g, 1e-6);
        let nyquist = 8 * 16 + 8;
        assert_eq!(h[nyquist], Complex64::new(0.0, 0.0));
        assert!((h[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wraparound_guard_trips() {
        // Small grid, long distance: the diffracted beam floods the edges.
        let g = GridGeometry::square(64, 20e-6, 650e-9).unwrap();
        let p = PinholePair::new(0.32e-3, 0.24e-3, OpenMask::Both, 0.0).unwrap();
        let f = make_two_pinhole_source(&p, &g).unwrap();
        let err = propagate(&f, 2.0).unwrap_err();
        assert!(matches!(err, OpticsError::Wraparound { .. }));
        assert!(err.is_numerical_guard());
    }
}
