//! Two-dimensional FFT over row-major complex buffers.
//!
//! Rows are transformed in place, then the buffer is transposed so that the
//! column pass is also a contiguous row pass. Every 1-D transform is
//! independent, so the output does not depend on how rayon splits the work.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const TRANSPOSE_BLOCK: usize = 32;

pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_forward: Arc<dyn Fft<f64>>,
    row_inverse: Arc<dyn Fft<f64>>,
    col_forward: Arc<dyn Fft<f64>>,
    col_inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            row_forward: planner.plan_fft_forward(nx),
            row_inverse: planner.plan_fft_inverse(nx),
            col_forward: planner.plan_fft_forward(ny),
            col_inverse: planner.plan_fft_inverse(ny),
        }
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_forward, &self.col_forward);
    }

    /// Inverse transform, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_inverse, &self.col_inverse);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.nx * self.ny, "buffer does not match plan");
        fft_rows(data, self.nx, rows);
        let mut transposed = vec![Complex64::new(0.0, 0.0); data.len()];
        transpose(data, &mut transposed, self.ny, self.nx);
        fft_rows(&mut transposed, self.ny, cols);
        transpose(&transposed, data, self.nx, self.ny);
    }
}

fn fft_rows(data: &mut [Complex64], len: usize, plan: &Arc<dyn Fft<f64>>) {
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

/// `dst[c][r] = src[r][c]` for a `rows x cols` source.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows * TRANSPOSE_BLOCK)
        .enumerate()
        .for_each(|(block, out)| {
            let c0 = block * TRANSPOSE_BLOCK;
            let c_count = out.len() / rows;
            for r0 in (0..rows).step_by(TRANSPOSE_BLOCK) {
                let r1 = (r0 + TRANSPOSE_BLOCK).min(rows);
                for r in r0..r1 {
                    let src_row = &src[r * cols + c0..r * cols + c0 + c_count];
                    for (dc, v) in src_row.iter().enumerate() {
                        out[dc * rows + r] = *v;
                    }
                }
            }
        });
}

/// Signed spatial frequency (cycles per unit length) of DFT bin `k`.
#[inline]
pub fn frequency(k: usize, n: usize, spacing: f64) -> f64 {
    let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    signed / (n as f64 * spacing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(n: usize) -> Vec<Complex64> {
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let a = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let b = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn round_trip_is_identity() {
        let (nx, ny) = (64, 32);
        let orig = pseudo_random(nx * ny);
        let mut data = orig.clone();
        let fft = Fft2::new(nx, ny);
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn parseval_holds() {
        let (nx, ny) = (32, 64);
        let orig = pseudo_random(nx * ny);
        let mut data = orig.clone();
        Fft2::new(nx, ny).forward(&mut data);
        let e0: f64 = orig.iter().map(|v| v.norm_sqr()).sum();
        let e1: f64 = data.iter().map(|v| v.norm_sqr()).sum::<f64>() / (nx * ny) as f64;
        assert!((e0 - e1).abs() < 1e-12 * e0);
    }

    #[test]
    fn matches_naive_dft() {
        let (nx, ny) = (8, 4);
        let orig = pseudo_random(nx * ny);
        let mut data = orig.clone();
        Fft2::new(nx, ny).forward(&mut data);
        for ky in 0..ny {
            for kx in 0..nx {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..ny {
                    for x in 0..nx {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * ((kx * x) as f64 / nx as f64 + (ky * y) as f64 / ny as f64);
                        acc += orig[y * nx + x] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - data[ky * nx + kx]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn frequencies_wrap_at_nyquist() {
        assert_eq!(frequency(0, 8, 1.0), 0.0);
        assert_eq!(frequency(3, 8, 1.0), 3.0 / 8.0);
        assert_eq!(frequency(4, 8, 1.0), -0.5);
        assert_eq!(frequency(7, 8, 1.0), -1.0 / 8.0);
    }
}
