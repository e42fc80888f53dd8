//! Deterministic synthetic test signals.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Piecewise-constant signal of length `n` with values in `[0, 1]`.
///
/// The number of pieces is `max(2, n / 16)`; breakpoints are distinct and
/// drawn uniformly, levels are uniform in `[0, 1]`.
pub fn piecewise_constant(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "piecewise-constant phantom needs n >= 2, got {n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let pieces = (n / 16).max(2).min(n);
    let mut cuts: Vec<usize> = (1..n).collect();
    rng.shuffle(&mut cuts);
    let mut cuts = cuts[..pieces - 1].to_vec();
    cuts.sort_unstable();
    cuts.push(n);
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for end in cuts {
        let level = rng.uniform();
        out.extend(std::iter::repeat_n(level, end - start));
        start = end;
    }
    Ok(out)
}

/// Shepp-like `height × width` image in `[0, 1]`: a bright outer ellipse, a
/// darker interior, and a handful of random elliptical blobs.
pub fn blobs(height: usize, width: usize, seed: u64) -> Result<Vec<f64>> {
    if height < 2 || width < 2 {
        return Err(Error::InvalidParameter(format!(
            "blob phantom needs at least 2x2 pixels, got {height}x{width}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    // (center row, center col, semi-axis rows, semi-axis cols, angle, value),
    // coordinates normalized to [-1, 1]
    let mut shapes = vec![(0.0, 0.0, 0.92, 0.72, 0.0, 1.0), (0.0, 0.0, 0.85, 0.65, 0.0, -0.7)];
    let count = 5 + rng.below(4);
    for _ in 0..count {
        let r = 0.08 + 0.22 * rng.uniform();
        let c = 0.08 + 0.22 * rng.uniform();
        let cy = (2.0 * rng.uniform() - 1.0) * (0.8 - r).max(0.0);
        let cx = (2.0 * rng.uniform() - 1.0) * (0.6 - c).max(0.0);
        let angle = std::f64::consts::PI * rng.uniform();
        let value = 0.1 + 0.5 * rng.uniform();
        shapes.push((cy, cx, r, c, angle, value));
    }
    let mut out = vec![0.0; height * width];
    for row in 0..height {
        let py = 2.0 * (row as f64 + 0.5) / height as f64 - 1.0;
        for col in 0..width {
            let px = 2.0 * (col as f64 + 0.5) / width as f64 - 1.0;
            let mut v = 0.0;
            for &(cy, cx, ry, rx, a, value) in &shapes {
                let (s, c) = a.sin_cos();
                let dy = py - cy;
                let dx = px - cx;
                let u = c * dy + s * dx;
                let w = -s * dy + c * dx;
                if (u / ry).powi(2) + (w / rx).powi(2) <= 1.0 {
                    v += value;
                }
            }
            out[row * width + col] = v.clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_has_requested_pieces() {
        let x = piecewise_constant(128, 3).unwrap();
        assert_eq!(x.len(), 128);
        let jumps = x.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(jumps <= 7);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(x, piecewise_constant(128, 3).unwrap());
        assert!(piecewise_constant(1, 0).is_err());
    }

    #[test]
    fn blobs_are_deterministic_and_bounded() {
        let a = blobs(32, 40, 9).unwrap();
        assert_eq!(a, blobs(32, 40, 9).unwrap());
        assert_ne!(a, blobs(32, 40, 10).unwrap());
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        // corners lie outside the outer ellipse
        assert_eq!(a[0], 0.0);
        assert!(a.iter().any(|&v| v > 0.25));
    }
}
