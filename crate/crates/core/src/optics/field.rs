//! Sampled complex scalar fields on a uniform transverse grid.
//!
//! Sample `(i, j)` sits at `x = (i - nx/2)·dx`, `y = (j - ny/2)·dy`, stored
//! row-major with `j` as the row index. The optical axis passes through
//! sample `(nx/2, ny/2)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::OpticsError;

/// Rows summed sequentially per task when reducing over columns. Fixed so
/// that column reductions do not depend on the number of worker threads.
const ROW_BLOCK: usize = 64;

/// Sampling of a transverse plane plus the (single) wavelength carried on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    /// Sample spacing along x (m).
    pub dx: f64,
    /// Sample spacing along y (m).
    pub dy: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, wavelength: f64) -> Result<Self, OpticsError> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(OpticsError::InvalidGeometry(format!(
                    "{name} = {n} must be a power of two and at least 2"
                )));
            }
        }
        for (name, v) in [("dx", dx), ("dy", dy), ("wavelength", wavelength)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(OpticsError::InvalidGeometry(format!(
                    "{name} = {v} must be finite and positive"
                )));
            }
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            wavelength,
        })
    }

    /// Square grid with equal spacing on both axes.
    pub fn square(n: usize, spacing: f64, wavelength: f64) -> Result<Self, OpticsError> {
        Self::new(n, n, spacing, spacing, wavelength)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.dy
    }

    /// Full transverse width `nx·dx`.
    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Outer x edges of the sampled region `[x(0) - dx/2, x(nx-1) + dx/2]`.
    pub fn x_bounds(&self) -> (f64, f64) {
        (self.x(0) - 0.5 * self.dx, self.x(self.nx - 1) + 0.5 * self.dx)
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        (self.y(0) - 0.5 * self.dy, self.y(self.ny - 1) + 0.5 * self.dy)
    }
}

/// Complex scalar amplitude sampled on a [`GridGeometry`] at axial position
/// `plane_z`. Intensity is `|amplitude|²`; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    geometry: GridGeometry,
    plane_z: f64,
    samples: Vec<Complex64>,
}

impl Field2D {
    pub fn zeros(geometry: GridGeometry, plane_z: f64) -> Self {
        Self {
            geometry,
            plane_z,
            samples: vec![Complex64::new(0.0, 0.0); geometry.len()],
        }
    }

    pub fn from_samples(
        geometry: GridGeometry,
        plane_z: f64,
        samples: Vec<Complex64>,
    ) -> Result<Self, OpticsError> {
        if samples.len() != geometry.len() {
            return Err(OpticsError::GeometryMismatch(format!(
                "{} samples supplied for a {}x{} grid",
                samples.len(),
                geometry.nx,
                geometry.ny
            )));
        }
        if !plane_z.is_finite() {
            return Err(OpticsError::InvalidParameter {
                name: "plane_z",
                reason: "must be finite".into(),
            });
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(OpticsError::InvalidParameter {
                name: "samples",
                reason: "all amplitudes must be finite".into(),
            });
        }
        Ok(Self {
            geometry,
            plane_z,
            samples,
        })
    }

    /// Evaluates `f(x, y)` at every sample position.
    pub fn from_fn<F>(geometry: GridGeometry, plane_z: f64, f: F) -> Result<Self, OpticsError>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let mut samples = vec![Complex64::new(0.0, 0.0); geometry.len()];
        samples
            .par_chunks_mut(geometry.nx)
            .enumerate()
            .for_each(|(j, row)| {
                let y = geometry.y(j);
                for (i, s) in row.iter_mut().enumerate() {
                    *s = f(geometry.x(i), y);
                }
            });
        Self::from_samples(geometry, plane_z, samples)
    }

    /// Internal constructor for stages whose output is finite by construction.
    pub(crate) fn from_parts(geometry: GridGeometry, plane_z: f64, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), geometry.len());
        Self {
            geometry,
            plane_z,
            samples,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn nx(&self) -> usize {
        self.geometry.nx
    }

    pub fn ny(&self) -> usize {
        self.geometry.ny
    }

    pub fn dx(&self) -> f64 {
        self.geometry.dx
    }

    pub fn dy(&self) -> f64 {
        self.geometry.dy
    }

    pub fn wavelength(&self) -> f64 {
        self.geometry.wavelength
    }

    pub fn plane_z(&self) -> f64 {
        self.plane_z
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.samples[j * self.geometry.nx + i]
    }

    /// `|amplitude|²` per sample, same layout as the samples.
    pub fn intensity(&self) -> Vec<f64> {
        self.samples.par_iter().map(|s| s.norm_sqr()).collect()
    }

    /// `|amplitude|²` along row `j`.
    pub fn row_intensity(&self, j: usize) -> Vec<f64> {
        let nx = self.geometry.nx;
        self.samples[j * nx..(j + 1) * nx]
            .iter()
            .map(|s| s.norm_sqr())
            .collect()
    }

    /// Power per column, `Σ_j |ψ_ij|²·dx·dy`.
    pub fn column_powers(&self) -> Vec<f64> {
        let nx = self.geometry.nx;
        let partials: Vec<Vec<f64>> = self
            .samples
            .par_chunks(nx * ROW_BLOCK)
            .map(|block| {
                let mut acc = vec![0.0; nx];
                for row in block.chunks(nx) {
                    for (a, s) in acc.iter_mut().zip(row) {
                        *a += s.norm_sqr();
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; nx];
        for p in &partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        let area = self.geometry.cell_area();
        total.iter_mut().for_each(|t| *t *= area);
        total
    }

    /// Sample-wise sum of two fields on the same grid and plane.
    pub fn superpose(&self, other: &Field2D) -> Result<Field2D, OpticsError> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .par_iter()
            .zip(other.samples.par_iter())
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(self.geometry, self.plane_z, samples))
    }

    pub(crate) fn check_compatible(&self, other: &Field2D) -> Result<(), OpticsError> {
        if self.geometry != other.geometry {
            return Err(OpticsError::GeometryMismatch(
                "fields sampled on different grids".into(),
            ));
        }
        if self.plane_z != other.plane_z {
            return Err(OpticsError::PlaneMismatch {
                field_z: other.plane_z,
                expected_z: self.plane_z,
            });
        }
        Ok(())
    }
}

/// Sum of `f(sample)` over a row-major buffer, reduced row by row in a fixed
/// order so that the result is independent of the worker count.
pub(crate) fn ordered_sum<F>(samples: &[Complex64], nx: usize, f: F) -> f64
where
    F: Fn(usize, usize, &Complex64) -> f64 + Sync,
{
    let rows: Vec<f64> = samples
        .par_chunks(nx)
        .enumerate()
        .map(|(j, row)| row.iter().enumerate().map(|(i, s)| f(i, j, s)).sum::<f64>())
        .collect();
    rows.iter().sum()
}

/// `Σ |amplitude|²·dx·dy`; zero exactly when the field is identically zero.
pub fn total_power(field: &Field2D) -> f64 {
    ordered_sum(&field.samples, field.geometry.nx, |_, _, s| s.norm_sqr()) * field.geometry.cell_area()
}
