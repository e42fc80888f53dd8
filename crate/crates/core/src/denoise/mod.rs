//! Denoiser priors `D`, the RED residual operator `H(x) = τ(x − D(x))`,
//! block-wise padded denoising, and empirical block-nonexpansiveness
//! certificates.

mod smoother;
mod tv1d;
mod tv2d;

pub use smoother::{convolve, Kernel};
pub use tv1d::{tv1d_prox, tv1d_value};
pub use tv2d::{tv2d_prox, tv2d_value, Tv2dOutput};

use crate::blocks::{BlockPartition, PartitionKind};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm};
use crate::rng::SplitMix64;

pub const DEFAULT_TV2D_ITERS: usize = 100;
pub const DEFAULT_TV2D_TOL: f64 = 1e-8;
/// Certificates pass when the worst observed ratio stays below this value.
pub const NONEXPANSIVE_LIMIT: f64 = 1.0 + 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Denoiser {
    Identity,
    /// Per-coordinate shrinkage `sign(z) max(|z| − θ, 0)`.
    SoftThreshold { theta: f64 },
    /// Exact prox of `weight · TV₁d`.
    Tv1d { weight: f64 },
    /// Approximate prox of `weight · TV_iso` on a `height × width` image.
    Tv2d {
        weight: f64,
        inner_iters: usize,
        inner_tol: f64,
        height: usize,
        width: usize,
    },
    LinearSmoother {
        kernel: Kernel,
        height: usize,
        width: usize,
    },
    /// `D(x) = x − (1/τ)∇h(x)` for the Tikhonov prior `h = (λ/2)‖x‖²`.
    GradientStep { lambda: f64, tau: f64 },
    /// `D(x) = 2x`. Test fixture for the certifier; rejected by the solvers.
    Expanding,
}

/// Outcome of an empirical block-nonexpansiveness test.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexpansivenessReport {
    pub trials: usize,
    pub max_ratio: f64,
    pub passed: bool,
    pub seed: u64,
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a finite nonnegative number, got {v}"
        )));
    }
    Ok(())
}

impl Denoiser {
    pub fn validate(&self) -> Result<()> {
        match self {
            Denoiser::Identity | Denoiser::Expanding | Denoiser::LinearSmoother { .. } => Ok(()),
            Denoiser::SoftThreshold { theta } => nonneg("theta", *theta),
            Denoiser::Tv1d { weight } => nonneg("tv weight", *weight),
            Denoiser::Tv2d {
                weight, inner_tol, ..
            } => {
                nonneg("tv weight", *weight)?;
                nonneg("inner_tol", *inner_tol)
            }
            Denoiser::GradientStep { lambda, tau } => {
                nonneg("lambda", *lambda)?;
                if !(*tau > 0.0) {
                    return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
                }
                Ok(())
            }
        }
    }

    /// Image dimensions required by the image denoisers.
    pub fn image_shape(&self) -> Option<(usize, usize)> {
        match self {
            Denoiser::Tv2d { height, width, .. } | Denoiser::LinearSmoother { height, width, .. } => {
                Some((*height, *width))
            }
            _ => None,
        }
    }

    /// Denoisers acting coordinate by coordinate, so `[D(x)]_i = D(x_i)`.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            Denoiser::Identity
                | Denoiser::SoftThreshold { .. }
                | Denoiser::GradientStep { .. }
                | Denoiser::Expanding
        )
    }

    /// Whether the denoiser is nonexpansive by construction (proximal maps,
    /// averaging smoothers, gradient steps with `λ ≤ 2τ`). The truncated 2-D
    /// TV prox is not included.
    pub fn is_provably_nonexpansive(&self) -> bool {
        match self {
            Denoiser::Identity
            | Denoiser::SoftThreshold { .. }
            | Denoiser::Tv1d { .. }
            | Denoiser::LinearSmoother { .. } => true,
            Denoiser::GradientStep { lambda, tau } => *lambda <= 2.0 * tau,
            Denoiser::Tv2d { .. } | Denoiser::Expanding => false,
        }
    }

    pub fn denoise(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        if let Some((h, w)) = self.image_shape() {
            if h * w != x.len() {
                return Err(Error::DimensionMismatch(format!(
                    "denoiser expects a {h}x{w} image, got {} values",
                    x.len()
                )));
            }
            return Ok(self.denoise_shaped(x, h, w));
        }
        Ok(self.denoise_shaped(x, 1, x.len()))
    }

    /// Apply the denoiser to a row-major `h × w` patch; shape-free kinds ignore
    /// the dimensions. Parameters must already be validated.
    fn denoise_shaped(&self, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        match self {
            Denoiser::Identity => x.to_vec(),
            Denoiser::SoftThreshold { theta } => x.iter().map(|&z| soft_threshold(z, *theta)).collect(),
            Denoiser::Tv1d { weight } => tv1d_prox(x, *weight),
            Denoiser::Tv2d {
                weight,
                inner_iters,
                inner_tol,
                ..
            } => tv2d_prox(x, h, w, *weight, *inner_iters, *inner_tol, false).image,
            Denoiser::LinearSmoother { kernel, .. } => convolve(kernel, x, h, w),
            Denoiser::GradientStep { lambda, tau } => {
                x.iter().map(|&v| v - (1.0 / tau) * (lambda * v)).collect()
            }
            Denoiser::Expanding => x.iter().map(|&v| 2.0 * v).collect(),
        }
    }

    /// `H(x) = τ(x − D(x))`.
    ///
    /// For the gradient-step kind evaluated at its own `τ` this is `∇h(x) = λx`,
    /// returned in that exact form.
    pub fn red_operator(&self, x: &[f64], tau: f64) -> Result<Vec<f64>> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if let Denoiser::GradientStep { lambda, tau: own } = self {
            if *own == tau {
                self.validate()?;
                return Ok(x.iter().map(|&v| lambda * v).collect());
            }
        }
        let d = self.denoise(x)?;
        Ok(x.iter().zip(&d).map(|(&a, &b)| tau * (a - b)).collect())
    }

    /// Residual on the block coordinates only, `τ(x_i − D(x_i))`, for
    /// pointwise denoisers. Matches [`Denoiser::red_operator`] restricted to
    /// the block bit-for-bit.
    pub(crate) fn red_operator_pointwise(&self, xi: &[f64], tau: f64) -> Vec<f64> {
        debug_assert!(self.is_pointwise());
        if let Denoiser::GradientStep { lambda, tau: own } = self {
            if *own == tau {
                return xi.iter().map(|&v| lambda * v).collect();
            }
        }
        let d = self.denoise_shaped(xi, 1, xi.len());
        xi.iter().zip(&d).map(|(&a, &b)| tau * (a - b)).collect()
    }

    /// Denoise the tile of block `i` with `pad` pixels of surrounding context
    /// (clipped at the image border) and return the crop matching the tile.
    pub fn blockwise_denoise(
        &self,
        x: &[f64],
        partition: &BlockPartition,
        i: usize,
        pad: usize,
    ) -> Result<Vec<f64>> {
        self.validate()?;
        let PartitionKind::Tiles { height, width, .. } = partition.kind() else {
            return Err(Error::Incompatible(
                "block-wise denoising needs a tile partition".into(),
            ));
        };
        if x.len() != partition.dim() {
            return Err(Error::LengthMismatch {
                expected: partition.dim(),
                got: x.len(),
            });
        }
        let rect = partition.tile_rect(i).ok_or(Error::IndexOutOfRange {
            index: i,
            blocks: partition.num_blocks(),
        })?;
        let r0 = rect.row.saturating_sub(pad);
        let c0 = rect.col.saturating_sub(pad);
        let r1 = (rect.row + rect.rows + pad).min(height);
        let c1 = (rect.col + rect.cols + pad).min(width);
        let (ph, pw) = (r1 - r0, c1 - c0);
        let mut patch = Vec::with_capacity(ph * pw);
        for r in r0..r1 {
            patch.extend_from_slice(&x[r * width + c0..r * width + c1]);
        }
        let den = self.denoise_shaped(&patch, ph, pw);
        let mut out = Vec::with_capacity(rect.rows * rect.cols);
        for r in rect.row..rect.row + rect.rows {
            let pr = r - r0;
            let start = pr * pw + (rect.col - c0);
            out.extend_from_slice(&den[start..start + rect.cols]);
        }
        Ok(out)
    }

    /// `h(x) = (τ/2) xᵀ(x − Wx)`, the explicit regularizer of a symmetric
    /// linear smoother. Its gradient is `τ(I − W)x = H(x)`.
    pub fn red_objective_linear(&self, x: &[f64], tau: f64) -> Result<f64> {
        if !matches!(self, Denoiser::LinearSmoother { .. }) {
            return Err(Error::Incompatible(
                "the explicit RED regularizer is only available for linear smoothers".into(),
            ));
        }
        let wx = self.denoise(x)?;
        let diff: Vec<f64> = x.iter().zip(&wx).map(|(a, b)| a - b).collect();
        Ok(0.5 * tau * dot(x, &diff))
    }
}

pub fn soft_threshold(z: f64, theta: f64) -> f64 {
    let mag = z.abs() - theta;
    if mag > 0.0 {
        mag.copysign(z)
    } else {
        0.0
    }
}

/// Empirical block-nonexpansiveness certificate.
///
/// Each trial draws `y ~ N(0, I)`, picks block `i = trial mod b`, draws a
/// Gaussian direction on that block rescaled to norm `magnitude · u` with `u`
/// uniform in `(0, 1]`, sets `x = y + U_i h_i`, and records
/// `‖[D(x)]_i − [D(y)]_i‖ / ‖h_i‖`. The `block_denoise(x, i)` callback returns
/// `[D(x)]_i`, so padded block-wise denoisers can be certified too.
pub fn certify_block_nonexpansive<F>(
    partition: &BlockPartition,
    trials: usize,
    seed: u64,
    magnitude: f64,
    mut block_denoise: F,
) -> Result<NonexpansivenessReport>
where
    F: FnMut(&[f64], usize) -> Result<Vec<f64>>,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("certificate needs at least one trial".into()));
    }
    let n = partition.dim();
    let b = partition.num_blocks();
    let mut rng = SplitMix64::new(seed);
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let i = t % b;
        let y = rng.normal_vec(n);
        let dir = rng.normal_vec(partition.block_len(i)?);
        let scale = magnitude * (1.0 - rng.uniform()) / norm(&dir);
        let h: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        let hn = norm(&h);
        if hn == 0.0 {
            continue;
        }
        let mut x = y.clone();
        for (&j, &v) in partition.block(i)?.iter().zip(&h) {
            x[j] += v;
        }
        let dx = block_denoise(&x, i)?;
        let dy = block_denoise(&y, i)?;
        max_ratio = max_ratio.max(dist(&dx, &dy) / hn);
    }
    Ok(NonexpansivenessReport {
        trials,
        max_ratio,
        passed: max_ratio <= NONEXPANSIVE_LIMIT,
        seed,
    })
}

/// Certificate for the full-image denoiser restricted to each block.
pub fn check_block_nonexpansive(
    denoiser: &Denoiser,
    partition: &BlockPartition,
    trials: usize,
    seed: u64,
    magnitude: f64,
) -> Result<NonexpansivenessReport> {
    certify_block_nonexpansive(partition, trials, seed, magnitude, |x, i| {
        partition.extract(&denoiser.denoise(x)?, i)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::PartitionSpec;

    fn tiles(h: usize, w: usize, th: usize, tw: usize) -> BlockPartition {
        BlockPartition::new(
            h * w,
            PartitionSpec::Tiles {
                height: h,
                width: w,
                tile_height: th,
                tile_width: tw,
            },
        )
        .unwrap()
    }

    #[test]
    fn soft_threshold_values() {
        let d = Denoiser::SoftThreshold { theta: 0.5 };
        assert_eq!(d.denoise(&[2.0, 0.0, -0.3, -1.0]).unwrap(), vec![1.5, 0.0, 0.0, -0.5]);
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(matches!(
            Denoiser::SoftThreshold { theta: -1.0 }.denoise(&[1.0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(Denoiser::Tv1d { weight: f64::NAN }.denoise(&[1.0]).is_err());
    }

    #[test]
    fn image_dimension_checked() {
        let d = Denoiser::LinearSmoother {
            kernel: Kernel::boxcar(3).unwrap(),
            height: 3,
            width: 3,
        };
        assert!(matches!(d.denoise(&[0.0; 8]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn red_operator_special_cases() {
        let x = [1.0, -2.0, 0.5];
        assert_eq!(Denoiser::Identity.red_operator(&x, 3.0).unwrap(), vec![0.0; 3]);
        let gs = Denoiser::GradientStep { lambda: 0.1, tau: 1.0 };
        assert_eq!(gs.red_operator(&x, 1.0).unwrap(), vec![0.1, -0.2, 0.05]);
        assert!(gs.red_operator(&x, 0.0).is_err());
        let soft = Denoiser::SoftThreshold { theta: 0.0 };
        assert_eq!(soft.red_operator(&[0.0; 3], 2.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn tv2d_constant_image() {
        let d = Denoiser::Tv2d {
            weight: 0.3,
            inner_iters: DEFAULT_TV2D_ITERS,
            inner_tol: DEFAULT_TV2D_TOL,
            height: 4,
            width: 4,
        };
        let x = vec![1.25; 16];
        let out = d.denoise(&x).unwrap();
        assert!(out.iter().all(|v| (v - 1.25).abs() <= DEFAULT_TV2D_TOL));
    }

    #[test]
    fn blockwise_pad_zero_is_bare_tile() {
        let p = tiles(6, 6, 3, 3);
        let d = Denoiser::LinearSmoother {
            kernel: Kernel::boxcar(3).unwrap(),
            height: 6,
            width: 6,
        };
        let mut rng = SplitMix64::new(4);
        let x = rng.normal_vec(36);
        for i in 0..4 {
            let tile = p.extract(&x, i).unwrap();
            let bare = convolve(&Kernel::boxcar(3).unwrap(), &tile, 3, 3);
            assert_eq!(d.blockwise_denoise(&x, &p, i, 0).unwrap(), bare);
        }
    }

    #[test]
    fn blockwise_huge_pad_is_full_image() {
        let p = tiles(5, 7, 2, 3);
        let d = Denoiser::Tv2d {
            weight: 0.2,
            inner_iters: 50,
            inner_tol: 0.0,
            height: 5,
            width: 7,
        };
        let mut rng = SplitMix64::new(6);
        let x = rng.normal_vec(35);
        let full = d.denoise(&x).unwrap();
        for i in 0..p.num_blocks() {
            assert_eq!(
                d.blockwise_denoise(&x, &p, i, 7).unwrap(),
                p.extract(&full, i).unwrap()
            );
        }
    }

    #[test]
    fn blockwise_interior_tile_matches_full_smoothing() {
        let p = tiles(9, 9, 3, 3);
        let kernel = Kernel::new(3, 3, vec![1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0].into_iter().map(|v| v / 16.0).collect()).unwrap();
        let d = Denoiser::LinearSmoother {
            kernel,
            height: 9,
            width: 9,
        };
        let mut rng = SplitMix64::new(10);
        let x = rng.normal_vec(81);
        let full = d.denoise(&x).unwrap();
        // block 4 is the centre tile
        assert_eq!(
            d.blockwise_denoise(&x, &p, 4, 1).unwrap(),
            p.extract(&full, 4).unwrap()
        );
    }

    #[test]
    fn blockwise_needs_tiles() {
        let p = BlockPartition::new(4, PartitionSpec::Contiguous { blocks: 2 }).unwrap();
        assert!(matches!(
            Denoiser::Identity.blockwise_denoise(&[0.0; 4], &p, 0, 1),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn certificates() {
        let p = BlockPartition::new(12, PartitionSpec::Contiguous { blocks: 3 }).unwrap();
        let id = check_block_nonexpansive(&Denoiser::Identity, &p, 50, 1, 1.0).unwrap();
        assert!(id.passed);
        assert!((id.max_ratio - 1.0).abs() < 1e-12);
        let exp = check_block_nonexpansive(&Denoiser::Expanding, &p, 50, 1, 1.0).unwrap();
        assert!(!exp.passed);
        assert!((exp.max_ratio - 2.0).abs() < 1e-12);
        let soft =
            check_block_nonexpansive(&Denoiser::SoftThreshold { theta: 0.5 }, &p, 1000, 2, 1.0)
                .unwrap();
        assert!(soft.passed);
        assert!(check_block_nonexpansive(&Denoiser::Identity, &p, 0, 1, 1.0).is_err());
    }

    #[test]
    fn red_objective_requires_smoother() {
        assert!(matches!(
            Denoiser::Identity.red_objective_linear(&[1.0], 1.0),
            Err(Error::Incompatible(_))
        ));
        let delta = Denoiser::LinearSmoother {
            kernel: Kernel::row(vec![0.0, 1.0, 0.0]).unwrap(),
            height: 1,
            width: 4,
        };
        assert_eq!(delta.red_objective_linear(&[1.0, -2.0, 3.0, 0.5], 2.0).unwrap(), 0.0);
        let avg = Denoiser::LinearSmoother {
            kernel: Kernel::row(vec![1.0 / 3.0; 3]).unwrap(),
            height: 1,
            width: 5,
        };
        assert!(avg.red_objective_linear(&[0.4; 5], 1.0).unwrap().abs() < 1e-15);
    }
}
