//! Thin-lens imaging of the pinhole plane.
//!
//! The object plane is `z = 0` (the pinholes), the lens sits at
//! `z = object_distance` and the image plane at
//! `z = object_distance + image_distance`. Imaging is
//! propagate → quadratic phase `exp(-iπr²/(λf))` truncated at the aperture
//! → propagate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{ordered_sum, total_power, Field2D};
use super::propagation::propagate;
use crate::error::OpticsError;

/// Clipped fraction above which the result is flagged as vignetted.
pub const VIGNETTING_LIMIT: f64 = 0.05;

const IMAGING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSpec {
    pub focal_length: f64,
    pub aperture_diameter: f64,
    pub object_distance: f64,
    pub image_distance: f64,
}

impl LensSpec {
    pub fn new(
        focal_length: f64,
        aperture_diameter: f64,
        object_distance: f64,
        image_distance: f64,
    ) -> Result<Self, OpticsError> {
        for (name, v) in [
            ("focal_length", focal_length),
            ("aperture_diameter", aperture_diameter),
            ("object_distance", object_distance),
            ("image_distance", image_distance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(OpticsError::InvalidParameter {
                    name,
                    reason: format!("{v} must be finite and positive"),
                });
            }
        }
        let lhs = 1.0 / object_distance + 1.0 / image_distance;
        let rhs = 1.0 / focal_length;
        if (lhs - rhs).abs() > IMAGING_TOLERANCE * rhs {
            return Err(OpticsError::InvalidParameter {
                name: "image_distance",
                reason: format!(
                    "1/{object_distance} + 1/{image_distance} differs from 1/{focal_length} \
                     (imaging condition)"
                ),
            });
        }
        Ok(Self {
            focal_length,
            aperture_diameter,
            object_distance,
            image_distance,
        })
    }

    /// Lens with the image distance solved from the imaging condition.
    pub fn focused(focal_length: f64, aperture_diameter: f64, object_distance: f64) -> Result<Self, OpticsError> {
        if !(object_distance > focal_length) {
            return Err(OpticsError::InvalidParameter {
                name: "object_distance",
                reason: format!("{object_distance} must exceed the focal length {focal_length} for a real image"),
            });
        }
        let image_distance = 1.0 / (1.0 / focal_length - 1.0 / object_distance);
        Self::new(focal_length, aperture_diameter, object_distance, image_distance)
    }

    /// Lateral magnification (magnitude; the image is inverted).
    pub fn magnification(&self) -> f64 {
        self.image_distance / self.object_distance
    }

    pub fn lens_z(&self) -> f64 {
        self.object_distance
    }

    pub fn image_z(&self) -> f64 {
        self.object_distance + self.image_distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensReport {
    /// Power arriving at the lens plane.
    pub incident_power: f64,
    /// Power stopped by the aperture.
    pub clipped_power: f64,
    pub clipped_fraction: f64,
    pub vignetting: bool,
}

/// Carries `field` (anywhere between the object plane and the lens) to the
/// image plane.
pub fn image_through_lens(field: &Field2D, lens: &LensSpec) -> Result<(Field2D, LensReport), OpticsError> {
    let geometry = *field.geometry();
    let radius = 0.5 * lens.aperture_diameter;
    let (x_lo, x_hi) = geometry.x_bounds();
    let (y_lo, y_hi) = geometry.y_bounds();
    if radius > x_hi.min(-x_lo) || radius > y_hi.min(-y_lo) {
        return Err(OpticsError::Resolution(format!(
            "lens aperture of radius {radius} m exceeds the {} m x {} m grid",
            geometry.width(),
            geometry.height()
        )));
    }
    // Highest local frequency of the lens phase, at the aperture rim.
    let rim_frequency = radius / (geometry.wavelength * lens.focal_length);
    let nyquist = 0.5 / geometry.dx.max(geometry.dy);
    if rim_frequency > nyquist {
        return Err(OpticsError::Resolution(format!(
            "lens phase reaches {rim_frequency:.4e} cycles/m at the rim, above the \
             {nyquist:.4e} cycles/m sampling limit"
        )));
    }

    let to_lens = lens.lens_z() - field.plane_z();
    if to_lens < -IMAGING_TOLERANCE * lens.lens_z() {
        return Err(OpticsError::PlaneMismatch {
            field_z: field.plane_z(),
            expected_z: lens.lens_z(),
        });
    }
    let at_lens = propagate(field, to_lens.max(0.0))?;
    let incident_power = total_power(&at_lens);

    let k = PI / (geometry.wavelength * lens.focal_length);
    let r2_max = radius * radius;
    let nx = geometry.nx;
    let mut samples = at_lens.samples().to_vec();
    samples.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let y = geometry.y(j);
        for (i, s) in row.iter_mut().enumerate() {
            let x = geometry.x(i);
            let r2 = x * x + y * y;
            *s = if r2 <= r2_max {
                *s * Complex64::from_polar(1.0, -k * r2)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    });
    let clipped_power = ordered_sum(at_lens.samples(), nx, |i, j, s| {
        let (x, y) = (geometry.x(i), geometry.y(j));
        if x * x + y * y > r2_max {
            s.norm_sqr()
        } else {
            0.0
        }
    }) * geometry.cell_area();
    let after = Field2D::from_parts(geometry, lens.lens_z(), samples);
    let image = propagate(&after, lens.image_distance)?;

    let clipped_fraction = if incident_power > 0.0 {
        clipped_power / incident_power
    } else {
        0.0
    };
    Ok((
        image,
        LensReport {
            incident_power,
            clipped_power,
            clipped_fraction,
            vignetting: clipped_fraction > VIGNETTING_LIMIT,
        },
    ))
}
