//! Detector regions in the image plane and flux integration.
//!
//! A sample belongs to a region when its center lies inside it.

use serde::{Deserialize, Serialize};

use super::field::{ordered_sum, total_power, Field2D, GridGeometry};
use super::lens::LensSpec;
use super::source::PinholePair;
use crate::error::OpticsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Region {
    Circle { cx: f64, cy: f64, radius: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Region::Circle { cx, cy, radius } => {
                let (dx, dy) = (x - cx, y - cy);
                dx * dx + dy * dy <= radius * radius
            }
            Region::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
        }
    }

    /// Axis-aligned bounding box `(x0, y0, x1, y1)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Region::Circle { cx, cy, radius } => (cx - radius, cy - radius, cx + radius, cy + radius),
            Region::Rect { x0, y0, x1, y1 } => (x0, y0, x1, y1),
        }
    }

    fn validate(&self) -> Result<(), OpticsError> {
        let ok = match *self {
            Region::Circle { cx, cy, radius } => cx.is_finite() && cy.is_finite() && radius.is_finite() && radius > 0.0,
            Region::Rect { x0, y0, x1, y1 } => {
                [x0, y0, x1, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(OpticsError::InvalidParameter {
                name: "detectors",
                reason: format!("malformed region {self:?}"),
            })
        }
    }

    fn disjoint_from(&self, other: &Region) -> bool {
        match (*self, *other) {
            (
                Region::Circle { cx: a, cy: b, radius: r },
                Region::Circle { cx: c, cy: d, radius: s },
            ) => (a - c).hypot(b - d) > r + s,
            _ => {
                let (ax0, ay0, ax1, ay1) = self.bounds();
                let (bx0, by0, bx1, by1) = other.bounds();
                ax1 < bx0 || bx1 < ax0 || ay1 < by0 || by1 < ay0
            }
        }
    }
}

/// Two disjoint detector regions; whatever falls outside both is "elsewhere".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorRegions {
    pub detector_1: Region,
    pub detector_2: Region,
}

impl DetectorRegions {
    pub fn new(detector_1: Region, detector_2: Region, geometry: &GridGeometry) -> Result<Self, OpticsError> {
        detector_1.validate()?;
        detector_2.validate()?;
        if !detector_1.disjoint_from(&detector_2) {
            return Err(OpticsError::InvalidParameter {
                name: "detectors",
                reason: "detector regions overlap".into(),
            });
        }
        let (gx0, gx1) = geometry.x_bounds();
        let (gy0, gy1) = geometry.y_bounds();
        for r in [detector_1, detector_2] {
            let (x0, y0, x1, y1) = r.bounds();
            if x0 < gx0 || x1 > gx1 || y0 < gy0 || y1 > gy1 {
                return Err(OpticsError::InvalidParameter {
                    name: "detectors",
                    reason: format!("region {r:?} extends beyond the simulated grid"),
                });
            }
        }
        Ok(Self {
            detector_1,
            detector_2,
        })
    }

    /// Circles of `radius` centered on the (inverted) images of the two
    /// pinholes: detector 1 sees pinhole 1.
    pub fn at_pinhole_images(
        pinholes: &PinholePair,
        lens: &LensSpec,
        radius: f64,
        geometry: &GridGeometry,
    ) -> Result<Self, OpticsError> {
        let m = lens.magnification();
        let [x1, x2] = pinholes.centers();
        Self::new(
            Region::Circle {
                cx: -m * x1,
                cy: 0.0,
                radius,
            },
            Region::Circle {
                cx: -m * x2,
                cy: 0.0,
                radius,
            },
            geometry,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorFlux {
    pub flux_1: f64,
    pub flux_2: f64,
    pub elsewhere: f64,
}

impl DetectorFlux {
    pub fn total(&self) -> f64 {
        self.flux_1 + self.flux_2 + self.elsewhere
    }
}

pub fn detector_flux(field: &Field2D, detectors: &DetectorRegions) -> DetectorFlux {
    let g = *field.geometry();
    let area = g.cell_area();
    let classify = |i: usize, j: usize| {
        let (x, y) = (g.x(i), g.y(j));
        if detectors.detector_1.contains(x, y) {
            1
        } else if detectors.detector_2.contains(x, y) {
            2
        } else {
            0
        }
    };
    let sum_for = |which: u8| {
        ordered_sum(field.samples(), g.nx, |i, j, s| {
            if classify(i, j) == which {
                s.norm_sqr()
            } else {
                0.0
            }
        }) * area
    };
    let flux_1 = sum_for(1);
    let flux_2 = sum_for(2);
    let elsewhere = sum_for(0);
    debug_assert!({
        let p = total_power(field);
        (flux_1 + flux_2 + elsewhere - p).abs() <= 1e-12 * p.max(f64::MIN_POSITIVE)
    });
    DetectorFlux {
        flux_1,
        flux_2,
        elsewhere,
    }
}
