//! Generators for matrix files: parallel-beam Radon system matrices, Gaussian
//! and identity matrices.

use crate::error::{Error, Result};
use crate::forward::{ForwardModel, ForwardSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSpec {
    /// `size × size` image, `angles` equispaced views over `[0, π)`.
    Radon { size: usize, angles: usize },
    Gaussian { m: usize, n: usize, seed: u64 },
    Identity { n: usize },
}

impl MatrixSpec {
    /// Parses `radon:<size>:<angles>`, `gaussian:<m>x<n>:<seed>` or
    /// `identity:<n>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::config("matrix spec", format!("cannot parse `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["radon", size, angles] => Ok(MatrixSpec::Radon {
                size: num(size)?,
                angles: num(angles)?,
            }),
            ["gaussian", dims, seed] => {
                let (m, n) = dims.split_once('x').ok_or_else(bad)?;
                Ok(MatrixSpec::Gaussian {
                    m: num(m)?,
                    n: num(n)?,
                    seed: seed.parse().map_err(|_| bad())?,
                })
            }
            ["identity", n] => Ok(MatrixSpec::Identity { n: num(n)? }),
            _ => Err(bad()),
        }
    }

    /// `(m, n, row-major data)`.
    pub fn generate(&self) -> Result<(usize, usize, Vec<f64>)> {
        match *self {
            MatrixSpec::Radon { size, angles } => radon_matrix(size, angles),
            MatrixSpec::Gaussian { m, n, seed } => dense_of(&ForwardSpec::Gaussian { m, n, seed }),
            MatrixSpec::Identity { n } => dense_of(&ForwardSpec::Identity { n }),
        }
    }
}

fn dense_of(spec: &ForwardSpec) -> Result<(usize, usize, Vec<f64>)> {
    let model = ForwardModel::build(spec)?;
    Ok((model.rows(), model.cols(), model.to_dense()))
}

/// Parallel-beam projection matrix on a `size × size` pixel grid.
///
/// Pixels are unit squares centred on the origin; each view has
/// `⌈size·√2⌉` unit-spaced detector bins, and entry `(view·bins + bin, pixel)`
/// is the length of the ray through that pixel.
pub fn radon_matrix(size: usize, angles: usize) -> Result<(usize, usize, Vec<f64>)> {
    if size == 0 || angles == 0 {
        return Err(Error::InvalidParameter(format!(
            "radon matrix needs size and angles >= 1, got {size} and {angles}"
        )));
    }
    let bins = (size as f64 * std::f64::consts::SQRT_2).ceil() as usize;
    let n = size * size;
    let m = angles * bins;
    let half = size as f64 / 2.0;
    let mut data = vec![0.0; m * n];
    for view in 0..angles {
        let theta = std::f64::consts::PI * view as f64 / angles as f64;
        let (s, c) = theta.sin_cos();
        for bin in 0..bins {
            let offset = bin as f64 - (bins as f64 - 1.0) / 2.0;
            let row = view * bins + bin;
            // ray: p(t) = offset·(c, s) + t·(−s, c)
            let (px, py) = (offset * c, offset * s);
            let (dx, dy) = (-s, c);
            for r in 0..size {
                let (y0, y1) = (half - (r + 1) as f64, half - r as f64);
                for col in 0..size {
                    let (x0, x1) = (col as f64 - half, (col + 1) as f64 - half);
                    let len = clip_length(px, py, dx, dy, x0, x1, y0, y1);
                    if len > 0.0 {
                        data[row * n + r * size + col] = len;
                    }
                }
            }
        }
    }
    Ok((m, n, data))
}

/// Length of the unit-speed line `p + t d` inside the box, by slab clipping.
#[allow(clippy::too_many_arguments)]
fn clip_length(px: f64, py: f64, dx: f64, dy: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, d, a, b) in [(px, dx, x0, x1), (py, dy, y0, y1)] {
        if d.abs() < 1e-15 {
            if p < a || p > b {
                return 0.0;
            }
        } else {
            let (t0, t1) = ((a - p) / d, (b - p) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (hi - lo).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(
            MatrixSpec::parse("radon:32:24").unwrap(),
            MatrixSpec::Radon { size: 32, angles: 24 }
        );
        assert_eq!(
            MatrixSpec::parse("gaussian:8x12:3").unwrap(),
            MatrixSpec::Gaussian { m: 8, n: 12, seed: 3 }
        );
        assert!(MatrixSpec::parse("radon:32").is_err());
        assert!(MatrixSpec::parse("foo:1").is_err());
    }

    #[test]
    fn every_view_sees_the_whole_image_area() {
        // summing a view over all bins integrates the indicator of each pixel
        // over unit-spaced parallel lines, which is the pixel area
        let size = 8;
        let (m, n, a) = radon_matrix(size, 5).unwrap();
        let bins = m / 5;
        for view in 0..5 {
            for pixel in 0..n {
                let total: f64 = (0..bins).map(|b| a[(view * bins + b) * n + pixel]).sum();
                assert!((total - 1.0).abs() < 0.5, "view {view} pixel {pixel}: {total}");
            }
        }
        // horizontal-detector view: each ray crosses one column of pixels
        for b in 0..bins {
            let row: f64 = (0..n).map(|p| a[b * n + p]).sum();
            assert!(row == 0.0 || (row - size as f64).abs() < 1e-12);
        }
    }
}
