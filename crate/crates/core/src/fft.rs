//! Multi-dimensional FFT over row-major arrays (last axis fastest).
//!
//! Forward uses `e^{-i k x}` with `k = 2 pi m / L`; inverse carries the `1/L`
//! factors so a round trip is the identity.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&l| planner.plan_fft_forward(l)).collect();
        let inverse = shape.iter().map(|&l| planner.plan_fft_inverse(l)).collect();
        FftNd {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.axis_pass(data, axis, &self.forward[axis]);
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.axis_pass(data, axis, &self.inverse[axis]);
        }
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    fn axis_pass(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match FFT shape");
        let l = self.shape[axis];
        if l == 1 {
            return;
        }
        let stride: usize = self.shape[axis + 1..].iter().product();
        if stride == 1 {
            data.par_chunks_mut(l).for_each(|line| plan.process(line));
            return;
        }
        // Strided axis: each outer block holds `stride` interleaved lines. Lines
        // are gathered into a contiguous scratch buffer, transformed, then
        // written back; every element has exactly one writer.
        let block = l * stride;
        data.par_chunks_mut(block).for_each(|blk| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); block];
            for j in 0..stride {
                for i in 0..l {
                    scratch[j * l + i] = blk[i * stride + j];
                }
            }
            scratch.chunks_mut(l).for_each(|line| plan.process(line));
            for j in 0..stride {
                for i in 0..l {
                    blk[i * stride + j] = scratch[j * l + i];
                }
            }
        });
    }
}

/// Signed wavenumber `2 pi m / L` of FFT bin `m`, folded onto `[-pi, pi)`.
pub fn bin_wavenumber(m: usize, l: usize) -> f64 {
    let m = m as i64;
    let l = l as i64;
    let folded = if 2 * m >= l { m - l } else { m };
    2.0 * std::f64::consts::PI * folded as f64 / l as f64
}
