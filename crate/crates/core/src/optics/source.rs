use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{Field2D, GridGeometry};
use crate::error::OpticsError;

/// Minimum number of samples across a pinhole diameter.
pub const MIN_SAMPLES_ACROSS_PINHOLE: f64 = 4.0;

/// Which of the two pinholes transmit. Pinhole 1 is on the -x side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpenMask {
    Both,
    Left,
    Right,
}

impl OpenMask {
    pub fn left_open(self) -> bool {
        matches!(self, Self::Both | Self::Left)
    }

    pub fn right_open(self) -> bool {
        matches!(self, Self::Both | Self::Right)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Both => "both",
            Self::Left => "left",
            Self::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Some(Self::Both),
            "left" => Some(Self::Left),
            "right" => Some(Self::Right),
            _ => None,
        }
    }
}

impl fmt::Display for OpenMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Two circular pinholes centered at `x = ∓separation/2, y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholePair {
    /// Center-to-center distance (m).
    pub separation: f64,
    pub diameter: f64,
    pub open: OpenMask,
    /// Phase (rad) applied to pinhole 2 relative to pinhole 1.
    pub relative_phase: f64,
}

impl PinholePair {
    pub fn new(
        separation: f64,
        diameter: f64,
        open: OpenMask,
        relative_phase: f64,
    ) -> Result<Self, OpticsError> {
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(OpticsError::InvalidParameter {
                name: "diameter",
                reason: format!("{diameter} must be positive"),
            });
        }
        if !(separation.is_finite() && separation > diameter) {
            return Err(OpticsError::InvalidParameter {
                name: "separation",
                reason: format!("{separation} must exceed the diameter {diameter}"),
            });
        }
        if !relative_phase.is_finite() {
            return Err(OpticsError::InvalidParameter {
                name: "relative_phase",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            separation,
            diameter,
            open,
            relative_phase,
        })
    }

    pub fn with_open(self, open: OpenMask) -> Self {
        Self { open, ..self }
    }

    /// x positions of pinhole 1 and pinhole 2.
    pub fn centers(&self) -> [f64; 2] {
        [-0.5 * self.separation, 0.5 * self.separation]
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Geometric open area (m²).
    pub fn open_area(&self) -> f64 {
        let one = PI * self.radius() * self.radius();
        match self.open {
            OpenMask::Both => 2.0 * one,
            _ => one,
        }
    }
}

/// Unit-amplitude disks at the open pinholes, zero elsewhere, at `z = 0`.
///
/// A sample is inside a pinhole when its center lies within the radius
/// (boundary inclusive, with a 1e-9 relative allowance for roundoff).
pub fn make_two_pinhole_source(spec: &PinholePair, geometry: &GridGeometry) -> Result<Field2D, OpticsError> {
    let across_x = spec.diameter / geometry.dx;
    let across_y = spec.diameter / geometry.dy;
    if across_x.min(across_y) < MIN_SAMPLES_ACROSS_PINHOLE {
        return Err(OpticsError::Resolution(format!(
            "pinhole diameter {} m spans {:.2} samples, at least {} required",
            spec.diameter,
            across_x.min(across_y),
            MIN_SAMPLES_ACROSS_PINHOLE
        )));
    }
    let r = spec.radius();
    let (x_lo, x_hi) = geometry.x_bounds();
    let (y_lo, y_hi) = geometry.y_bounds();
    let reach = 0.5 * spec.separation + r;
    if -reach - geometry.dx < x_lo || reach + geometry.dx > x_hi || -r - geometry.dy < y_lo || r + geometry.dy > y_hi {
        return Err(OpticsError::Resolution(format!(
            "pinholes spanning ±{reach} m do not fit inside the {} m x {} m grid",
            geometry.width(),
            geometry.height()
        )));
    }

    // Work in sample units so that the disk test is exact for centers that
    // fall on sample positions.
    let [c1, c2] = spec.centers();
    let (c1, c2) = (c1 / geometry.dx, c2 / geometry.dx);
    let (rx, ry) = (r / geometry.dx, r / geometry.dy);
    let phase2 = Complex64::from_polar(1.0, spec.relative_phase);
    let inside = move |u: f64, v: f64, c: f64| {
        let du = (u - c) / rx;
        let dv = v / ry;
        du * du + dv * dv <= 1.0 + 1e-9
    };
    let (left, right) = (spec.open.left_open(), spec.open.right_open());
    Field2D::from_fn(*geometry, 0.0, |x, y| {
        let u = x / geometry.dx;
        let v = y / geometry.dy;
        if left && inside(u, v, c1) {
            Complex64::new(1.0, 0.0)
        } else if right && inside(u, v, c2) {
            phase2
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::field::total_power;

    fn geometry() -> GridGeometry {
        // 0.25 mm pinholes at 12 samples across, 2 mm apart.
        GridGeometry::square(256, 0.25e-3 / 12.0, 650e-9).unwrap()
    }

    fn pair(open: OpenMask, phase: f64) -> PinholePair {
        PinholePair::new(2e-3, 0.25e-3, open, phase).unwrap()
    }

    #[test]
    fn both_open_gives_two_disjoint_unit_disks() {
        let g = geometry();
        let f = make_two_pinhole_source(&pair(OpenMask::Both, 0.0), &g).unwrap();
        let mut left = 0usize;
        let mut right = 0usize;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = f.at(i, j);
                if v.norm() > 0.0 {
                    assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
                    if g.x(i) < 0.0 {
                        left += 1;
                    } else {
                        right += 1;
                    }
                }
            }
        }
        assert_eq!(left, right);
        assert!(left > 0);
        let p = total_power(&f);
        let area = pair(OpenMask::Both, 0.0).open_area();
        assert!((p - area).abs() < 0.01 * area, "power {p} vs area {area}");
    }

    #[test]
    fn single_pinhole_carries_half_the_power() {
        let g = geometry();
        let both = total_power(&make_two_pinhole_source(&pair(OpenMask::Both, 0.0), &g).unwrap());
        let left = total_power(&make_two_pinhole_source(&pair(OpenMask::Left, 0.0), &g).unwrap());
        let right = total_power(&make_two_pinhole_source(&pair(OpenMask::Right, 0.0), &g).unwrap());
        assert_eq!(left * 2.0, both);
        assert_eq!(left, right);
    }

    #[test]
    fn relative_phase_leaves_power_unchanged() {
        let g = geometry();
        let p0 = total_power(&make_two_pinhole_source(&pair(OpenMask::Both, 0.0), &g).unwrap());
        let p1 = total_power(&make_two_pinhole_source(&pair(OpenMask::Both, PI), &g).unwrap());
        assert!((p0 - p1).abs() < 1e-15 * p0);
    }

    #[test]
    fn relative_phase_applies_to_second_pinhole() {
        let g = geometry();
        let f = make_two_pinhole_source(&pair(OpenMask::Both, PI), &g).unwrap();
        let c = g.nx / 2;
        let off = (1e-3 / g.dx).round() as usize;
        assert!((f.at(c - off, g.ny / 2) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((f.at(c + off, g.ny / 2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn coarse_grid_is_a_resolution_error() {
        let g = GridGeometry::square(256, 0.1e-3, 650e-9).unwrap();
        let err = make_two_pinhole_source(&pair(OpenMask::Both, 0.0), &g).unwrap_err();
        assert!(matches!(err, OpticsError::Resolution(_)));
    }

    #[test]
    fn pinholes_must_fit() {
        let g = GridGeometry::square(64, 0.25e-3 / 12.0, 650e-9).unwrap();
        assert!(make_two_pinhole_source(&pair(OpenMask::Both, 0.0), &g).is_err());
    }

    #[test]
    fn separation_must_exceed_diameter() {
        assert!(PinholePair::new(0.2e-3, 0.25e-3, OpenMask::Both, 0.0).is_err());
        assert!(PinholePair::new(1e-3, 0.0, OpenMask::Both, 0.0).is_err());
    }
}
