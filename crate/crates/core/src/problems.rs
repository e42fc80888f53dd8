//! Small reference problems shared by the property checks, the examples in
//! the README and the integration tests.

use crate::denoise::Denoiser;
use crate::error::Result;
use crate::forward::{ForwardModel, ForwardSpec};
use crate::metrics::add_noise_at_input_snr;
use crate::moreau::SmoothableFunction;
use crate::phantom::piecewise_constant;
use crate::rng::SplitMix64;
use crate::solver::{Prior, Problem};

/// Measurements `y = A x_true + e` at 30 dB input SNR (noise seed = `seed`).
pub fn measure(model: &ForwardModel, x_true: &[f64], seed: u64) -> Result<Vec<f64>> {
    let clean = model.apply(x_true)?;
    Ok(add_noise_at_input_snr(&clean, 30.0, seed)?.y)
}

/// Ridge regression as RED: Gaussian `A` (32 × 64, seed 1), piecewise-constant
/// truth, gradient-step Tikhonov denoiser with `λ = 0.1` at `τ = 1`, so
/// `G(x) = Aᵀ(Ax − y) + 0.1 x`.
pub fn ridge() -> Result<Problem> {
    let model = ForwardModel::build(&ForwardSpec::Gaussian { m: 32, n: 64, seed: 1 })?;
    let truth = piecewise_constant(64, 1)?;
    let y = measure(&model, &truth, 1)?;
    Ok(Problem::new(model, y, Denoiser::GradientStep { lambda: 0.1, tau: 1.0 })?
        .with_prior(Prior::Function(SmoothableFunction::Tikhonov { lambda: 0.1 })))
}

pub const RIDGE_LAMBDA: f64 = 0.1;

/// Lasso: Gaussian `A` (16 × 32, seed 2), 4-sparse truth, `h = 0.05‖x‖₁`,
/// RED with the soft-threshold denoiser `θ = λ/τ`.
pub fn lasso(tau: f64) -> Result<Problem> {
    let lambda = LASSO_LAMBDA;
    let model = ForwardModel::build(&ForwardSpec::Gaussian { m: 16, n: 32, seed: 2 })?;
    let mut rng = SplitMix64::new(2);
    let mut truth = vec![0.0; 32];
    let mut support: Vec<usize> = (0..32).collect();
    rng.shuffle(&mut support);
    for &j in &support[..4] {
        truth[j] = rng.normal();
    }
    let y = measure(&model, &truth, 2)?;
    let h = SmoothableFunction::L1 { lambda };
    Ok(Problem::new(model, y, h.prox_denoiser(tau)?)?.with_prior(Prior::Function(h)))
}

pub const LASSO_LAMBDA: f64 = 0.05;

/// 1-D total variation: Gaussian `A` (32 × 64, seed 3), piecewise-constant
/// truth, `h = λ TV` with `λ = 0.05`, RED with the exact TV prox `w = λ/τ`.
pub fn tv1d(tau: f64) -> Result<Problem> {
    let lambda = TV_LAMBDA;
    let model = ForwardModel::build(&ForwardSpec::Gaussian { m: 32, n: 64, seed: 3 })?;
    let truth = piecewise_constant(64, 3)?;
    let y = measure(&model, &truth, 3)?;
    let h = SmoothableFunction::Tv1d { lambda };
    Ok(Problem::new(model, y, h.prox_denoiser(tau)?)?.with_prior(Prior::Function(h)))
}

pub const TV_LAMBDA: f64 = 0.05;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problems_build() {
        let p = ridge().unwrap();
        assert_eq!((p.model.rows(), p.dim()), (32, 64));
        let Denoiser::SoftThreshold { theta } = lasso(10.0).unwrap().denoiser else {
            panic!("lasso uses soft-thresholding");
        };
        assert!((theta - 0.005).abs() < 1e-18);
        assert_eq!(tv1d(1.0).unwrap().dim(), 64);
    }
}
