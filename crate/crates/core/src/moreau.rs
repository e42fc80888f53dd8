//! Moreau envelopes of prox-representable convex regularizers.
//!
//! For `μ > 0` the envelope is `h_μ(x) = min_z ½‖z − x‖² + μ h(z)`, attained at
//! `p = prox_{μh}(x)`. It is smooth with 1-Lipschitz gradient `x − p`, and
//! `0 ≤ h(x) − h_μ(x)/μ ≤ (μ/2) G²` whenever every subgradient at `x` has norm
//! at most `G`.

use crate::denoise::{soft_threshold, tv1d_prox, tv1d_value, Denoiser};
use crate::error::{Error, Result};
use crate::forward::LeastSquares;
use crate::linalg::{dist, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothableFunction {
    /// `λ‖x‖₁`
    L1 { lambda: f64 },
    /// `λ Σ |x_{j+1} − x_j|`
    Tv1d { lambda: f64 },
    /// `(λ/2)‖x‖²`
    Tikhonov { lambda: f64 },
}

fn positive_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

impl SmoothableFunction {
    pub fn lambda(&self) -> f64 {
        match *self {
            SmoothableFunction::L1 { lambda }
            | SmoothableFunction::Tv1d { lambda }
            | SmoothableFunction::Tikhonov { lambda } => lambda,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            SmoothableFunction::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            SmoothableFunction::Tv1d { lambda } => lambda * tv1d_value(x),
            SmoothableFunction::Tikhonov { lambda } => 0.5 * lambda * norm_sq(x),
        }
    }

    /// `prox_{μh}(x)`.
    pub fn prox(&self, mu: f64, x: &[f64]) -> Result<Vec<f64>> {
        positive_mu(mu)?;
        Ok(match *self {
            SmoothableFunction::L1 { lambda } => {
                let theta = mu * lambda;
                x.iter().map(|&v| soft_threshold(v, theta)).collect()
            }
            SmoothableFunction::Tv1d { lambda } => tv1d_prox(x, mu * lambda),
            SmoothableFunction::Tikhonov { lambda } => {
                let s = 1.0 / (1.0 + mu * lambda);
                x.iter().map(|v| s * v).collect()
            }
        })
    }

    /// Bound on the norm of every subgradient of `h` over the ball of radius
    /// `radius` in `ℝⁿ`. Only the Tikhonov kind depends on the radius.
    pub fn subgradient_bound(&self, n: usize, radius: f64) -> f64 {
        let root_n = (n as f64).sqrt();
        match *self {
            SmoothableFunction::L1 { lambda } => lambda * root_n,
            SmoothableFunction::Tv1d { lambda } => 2.0 * lambda * root_n,
            SmoothableFunction::Tikhonov { lambda } => lambda * radius,
        }
    }

    /// The denoiser `prox_{(1/τ)h}` used by RED to descend on the smoothed
    /// objective.
    pub fn prox_denoiser(&self, tau: f64) -> Result<Denoiser> {
        positive_mu(tau)?;
        let weight = (1.0 / tau) * self.lambda();
        match self {
            SmoothableFunction::L1 { .. } => Ok(Denoiser::SoftThreshold { theta: weight }),
            SmoothableFunction::Tv1d { .. } => Ok(Denoiser::Tv1d { weight }),
            SmoothableFunction::Tikhonov { .. } => Err(Error::Incompatible(
                "Tikhonov priors are used through the gradient-step denoiser".into(),
            )),
        }
    }
}

/// `h_μ(x) = ½‖p − x‖² + μ h(p)` with `p = prox_{μh}(x)`.
pub fn moreau_value(h: &SmoothableFunction, mu: f64, x: &[f64]) -> Result<f64> {
    let p = h.prox(mu, x)?;
    let d = dist(&p, x);
    Ok(0.5 * d * d + mu * h.value(&p))
}

/// `∇h_μ(x) = x − prox_{μh}(x)`.
pub fn moreau_gradient(h: &SmoothableFunction, mu: f64, x: &[f64]) -> Result<Vec<f64>> {
    let p = h.prox(mu, x)?;
    Ok(x.iter().zip(&p).map(|(a, b)| a - b).collect())
}

/// `h(x) − h_μ(x)/μ`, always in `[0, (μ/2) G²]`.
pub fn envelope_gap(h: &SmoothableFunction, mu: f64, x: &[f64]) -> Result<f64> {
    Ok(h.value(x) - moreau_value(h, mu, x)? / mu)
}

/// `f_{1/τ}(x) = g(x) + τ h_{1/τ}(x)`, the smooth surrogate that RED with the
/// denoiser `prox_{(1/τ)h}` descends on. Its gradient is `∇g(x) + H(x)`.
pub fn smoothed_objective(
    data: &LeastSquares<'_>,
    h: &SmoothableFunction,
    tau: f64,
    x: &[f64],
) -> Result<f64> {
    positive_mu(tau)?;
    Ok(data.value(x)? + tau * moreau_value(h, 1.0 / tau, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{ForwardModel, ForwardSpec};
    use crate::rng::SplitMix64;

    #[test]
    fn huber_spot_values() {
        let h = SmoothableFunction::L1 { lambda: 1.0 };
        assert_eq!(moreau_value(&h, 1.0, &[3.0]).unwrap(), 2.5);
        assert_eq!(envelope_gap(&h, 1.0, &[3.0]).unwrap(), 0.5);
        assert_eq!(moreau_value(&h, 0.7, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_vanishes_at_prox_fixed_point() {
        let h = SmoothableFunction::L1 { lambda: 2.0 };
        assert_eq!(moreau_gradient(&h, 0.3, &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn gap_is_zero_at_origin() {
        for h in [
            SmoothableFunction::L1 { lambda: 0.4 },
            SmoothableFunction::Tv1d { lambda: 0.4 },
            SmoothableFunction::Tikhonov { lambda: 0.4 },
        ] {
            assert!(envelope_gap(&h, 2.0, &[0.0; 5]).unwrap().abs() < 1e-30);
        }
    }

    #[test]
    fn nonpositive_mu_rejected() {
        let h = SmoothableFunction::L1 { lambda: 1.0 };
        assert!(moreau_value(&h, 0.0, &[1.0]).is_err());
        assert!(moreau_gradient(&h, -1.0, &[1.0]).is_err());
        assert!(envelope_gap(&h, f64::NAN, &[1.0]).is_err());
    }

    #[test]
    fn gap_monotone_in_mu() {
        let mut rng = SplitMix64::new(13);
        for h in [
            SmoothableFunction::L1 { lambda: 0.3 },
            SmoothableFunction::Tv1d { lambda: 0.3 },
            SmoothableFunction::Tikhonov { lambda: 0.3 },
        ] {
            for _ in 0..20 {
                let x = rng.normal_vec(9);
                let gaps: Vec<f64> = [0.01, 0.1, 1.0, 10.0]
                    .iter()
                    .map(|&mu| envelope_gap(&h, mu, &x).unwrap())
                    .collect();
                for w in gaps.windows(2) {
                    assert!(w[1] >= w[0] - 1e-12, "{h:?}: {gaps:?}");
                }
            }
        }
    }

    #[test]
    fn smoothed_objective_at_origin() {
        let a = ForwardModel::build(&ForwardSpec::Identity { n: 3 }).unwrap();
        let y = [0.0; 3];
        let g = LeastSquares::new(&a, &y).unwrap();
        let h = SmoothableFunction::L1 { lambda: 1.0 };
        assert_eq!(smoothed_objective(&g, &h, 2.0, &[0.0; 3]).unwrap(), 0.0);
        assert!(smoothed_objective(&g, &h, 0.0, &[0.0; 3]).is_err());
    }
}
