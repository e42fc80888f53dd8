//! Symmetric linear smoothing `x ↦ Wx` by convolution with a nonnegative,
//! unit-sum kernel that is even along both axes.
//!
//! Boundaries use half-sample symmetric extension (`x[-1] = x[0]`). With an
//! even kernel this makes `W` a symmetric matrix (it is diagonalized by the
//! 2-D DCT-II), and the unit-sum nonnegative kernel bounds its spectrum by one.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

const KERNEL_TOL: f64 = 1e-12;

impl Kernel {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows.is_multiple_of(2) || cols.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "kernel dimensions must be odd, got {rows}x{cols}"
            )));
        }
        if weights.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "kernel has {} weights, expected {}",
                weights.len(),
                rows * cols
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("kernel weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > KERNEL_TOL {
            return Err(Error::InvalidParameter(format!(
                "kernel weights must sum to 1, got {sum}"
            )));
        }
        for a in 0..rows {
            for b in 0..cols {
                let v = weights[a * cols + b];
                let flip_r = weights[(rows - 1 - a) * cols + b];
                let flip_c = weights[a * cols + (cols - 1 - b)];
                if (v - flip_r).abs() > KERNEL_TOL || (v - flip_c).abs() > KERNEL_TOL {
                    return Err(Error::InvalidParameter(
                        "kernel must be symmetric along both axes".into(),
                    ));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    /// A `1 × len` kernel for 1-D signals.
    pub fn row(weights: Vec<f64>) -> Result<Self> {
        let len = weights.len();
        Self::new(1, len, weights)
    }

    /// Normalized `size × size` box filter.
    pub fn boxcar(size: usize) -> Result<Self> {
        let v = 1.0 / (size * size) as f64;
        Self::new(size, size, vec![v; size * size])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Half-sample symmetric index reflection into `0..len`.
fn reflect(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let m = i.rem_euclid(period) as usize;
    if m < len {
        m
    } else {
        2 * len - 1 - m
    }
}

pub fn convolve(kernel: &Kernel, x: &[f64], h: usize, w: usize) -> Vec<f64> {
    debug_assert_eq!(x.len(), h * w);
    let (hr, hc) = ((kernel.rows / 2) as isize, (kernel.cols / 2) as isize);
    let mut out = vec![0.0; x.len()];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for a in 0..kernel.rows {
                let rr = reflect(r as isize + a as isize - hr, h);
                for b in 0..kernel.cols {
                    let cc = reflect(c as isize + b as isize - hc, w);
                    acc += kernel.weights[a * kernel.cols + b] * x[rr * w + cc];
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}
