//! Periodic wire grid placed across the fringe pattern.
//!
//! Wires are stripes parallel to y, width `a·Λ`, centered at
//! `fringe_origin + Λ/2 + (φ/2π)·Λ + kΛ`, where `fringe_origin` is the x
//! position of an intensity maximum of the pattern the grid is registered
//! against. `φ = 0` therefore puts wires on the minima, `φ = ±π` on the maxima.
//!
//! A sample column partially covered by a wire keeps amplitude
//! `sqrt(1 - c)` where `c` is the covered fraction of the column, so that the
//! blocked power equals the covered area times the local intensity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{total_power, Field2D, GridGeometry};
use crate::error::OpticsError;

/// Minimum number of samples per grid period.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    Absorbing,
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireGridSpec {
    /// Period Λ (m).
    pub period: f64,
    /// Covering ratio `a`: wire width over period.
    pub covering_ratio: f64,
    /// Placement phase φ (rad).
    pub placement_phase: f64,
    /// Transverse span (m) covered by wires, centered on `fringe_origin`.
    pub extent: f64,
    pub mode: GridMode,
    /// Axial position (m) of the grid plane.
    pub plane_z: f64,
    /// x position (m) of a fringe maximum of the registered pattern.
    pub fringe_origin: f64,
}

impl WireGridSpec {
    pub fn new(
        period: f64,
        covering_ratio: f64,
        placement_phase: f64,
        extent: f64,
        mode: GridMode,
        plane_z: f64,
        fringe_origin: f64,
    ) -> Result<Self, OpticsError> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(OpticsError::InvalidParameter {
                    name,
                    reason: format!("{v} must be finite and positive"),
                })
            }
        };
        positive("period", period)?;
        positive("extent", extent)?;
        if !(covering_ratio > 0.0 && covering_ratio < 1.0) {
            return Err(OpticsError::InvalidParameter {
                name: "covering_ratio",
                reason: format!("{covering_ratio} must lie in (0, 1)"),
            });
        }
        for (name, v) in [
            ("placement_phase", placement_phase),
            ("plane_z", plane_z),
            ("fringe_origin", fringe_origin),
        ] {
            if !v.is_finite() {
                return Err(OpticsError::InvalidParameter {
                    name,
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(Self {
            period,
            covering_ratio,
            placement_phase,
            extent,
            mode,
            plane_z,
            fringe_origin,
        })
    }

    pub fn wire_width(&self) -> f64 {
        self.covering_ratio * self.period
    }

    /// Span `[lo, hi]` of x covered by the grid.
    pub fn span(&self) -> (f64, f64) {
        (
            self.fringe_origin - 0.5 * self.extent,
            self.fringe_origin + 0.5 * self.extent,
        )
    }

    /// Center of wire `k`.
    pub fn wire_center(&self, k: i64) -> f64 {
        self.fringe_origin + self.period * (0.5 + self.placement_phase / (2.0 * PI) + k as f64)
    }

    /// Stripes `(center, lo, hi)` intersecting `[x_lo, x_hi]`, clipped to the span.
    pub fn stripes_within(&self, x_lo: f64, x_hi: f64) -> Vec<(f64, f64, f64)> {
        let (s_lo, s_hi) = self.span();
        let (lo, hi) = (x_lo.max(s_lo), x_hi.min(s_hi));
        if lo >= hi {
            return Vec::new();
        }
        let half = 0.5 * self.wire_width();
        let base = self.wire_center(0);
        let k_min = ((lo - half - base) / self.period).floor() as i64 - 1;
        let k_max = ((hi + half - base) / self.period).ceil() as i64 + 1;
        (k_min..=k_max)
            .filter_map(|k| {
                let c = self.wire_center(k);
                let (a, b) = ((c - half).max(lo), (c + half).min(hi));
                (a < b).then_some((c, a, b))
            })
            .collect()
    }

    /// Covered fraction of every sample column plus the per-wire overlaps
    /// `(center, [(column, fraction)])`.
    fn coverage(&self, geometry: &GridGeometry) -> (Vec<f64>, Vec<(f64, Vec<(usize, f64)>)>) {
        let (x_lo, x_hi) = geometry.x_bounds();
        let dx = geometry.dx;
        let mut columns = vec![0.0; geometry.nx];
        let mut wires = Vec::new();
        for (center, a, b) in self.stripes_within(x_lo, x_hi) {
            let first = (((a - x_lo) / dx).floor() as usize).min(geometry.nx - 1);
            let last = (((b - x_lo) / dx).ceil() as usize).min(geometry.nx);
            let mut parts = Vec::new();
            for i in first..last {
                let cell_lo = x_lo + i as f64 * dx;
                let overlap = (b.min(cell_lo + dx) - a.max(cell_lo)).max(0.0) / dx;
                if overlap > 0.0 {
                    columns[i] += overlap;
                    parts.push((i, overlap));
                }
            }
            wires.push((center, parts));
        }
        columns.iter_mut().for_each(|c| *c = c.clamp(0.0, 1.0));
        (columns, wires)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireLoss {
    pub center: f64,
    pub blocked_power: f64,
}

/// Power bookkeeping for one pass through the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub mode: GridMode,
    pub input_power: f64,
    pub transmitted_power: f64,
    pub blocked_power: f64,
    /// `blocked_power / input_power` (0 for a dark input).
    pub blocked_fraction: f64,
    pub per_wire: Vec<WireLoss>,
}

/// Removes the amplitude under the wires.
pub fn apply_wire_grid(field: &Field2D, grid: &WireGridSpec) -> Result<(Field2D, LossReport), OpticsError> {
    let tolerance = 1e-9 * grid.plane_z.abs().max(1.0);
    if (field.plane_z() - grid.plane_z).abs() > tolerance {
        return Err(OpticsError::PlaneMismatch {
            field_z: field.plane_z(),
            expected_z: grid.plane_z,
        });
    }
    let geometry = *field.geometry();
    let per_period = grid.period / geometry.dx;
    if per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(OpticsError::Resolution(format!(
            "grid period {} m spans {per_period:.2} samples, at least {MIN_SAMPLES_PER_PERIOD} required",
            grid.period
        )));
    }

    let (coverage, wires) = grid.coverage(&geometry);
    let column_power = field.column_powers();
    let input_power = total_power(field);
    let blocked_power: f64 = coverage.iter().zip(&column_power).map(|(c, p)| c * p).sum();
    let per_wire = wires
        .into_iter()
        .map(|(center, parts)| WireLoss {
            center,
            blocked_power: parts.iter().map(|&(i, f)| f * column_power[i]).sum(),
        })
        .collect();

    let transmission: Vec<f64> = coverage.iter().map(|c| (1.0 - c).sqrt()).collect();
    let nx = geometry.nx;
    let mut samples = field.samples().to_vec();
    samples.par_chunks_mut(nx).for_each(|row| {
        for (s, t) in row.iter_mut().zip(&transmission) {
            *s *= *t;
        }
    });
    let transmitted = Field2D::from_parts(geometry, field.plane_z(), samples);
    let transmitted_power = total_power(&transmitted);
    let blocked_fraction = if input_power > 0.0 {
        (blocked_power / input_power).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((
        transmitted,
        LossReport {
            mode: grid.mode,
            input_power,
            transmitted_power,
            blocked_power,
            blocked_fraction,
            per_wire,
        },
    ))
}

/// Amplitude transmission per column (`sqrt(1 - covered fraction)`).
pub fn column_transmission(grid: &WireGridSpec, geometry: &GridGeometry) -> Vec<Complex64> {
    grid.coverage(geometry)
        .0
        .iter()
        .map(|c| Complex64::new((1.0 - c).sqrt(), 0.0))
        .collect()
}
