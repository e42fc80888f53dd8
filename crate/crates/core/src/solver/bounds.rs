//! Worst-case rate bounds for the block-coordinate iteration.

use crate::error::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
    }
    Ok(())
}

/// Bound on `E[(1/t) Σ_{k=1}^t ‖G(x^{k-1})‖²]` after `t` block updates with
/// i.i.d. selection: `b (L_max + 2τ) R₀² / (γ t)`.
pub fn theorem1_bound(blocks: usize, l_max: f64, tau: f64, gamma: f64, r0: f64, t: usize) -> Result<f64> {
    positive("b", blocks as f64)?;
    nonnegative("L_max", l_max)?;
    positive("tau", tau)?;
    positive("gamma", gamma)?;
    nonnegative("R0", r0)?;
    positive("t", t as f64)?;
    Ok(blocks as f64 * (l_max + 2.0 * tau) * r0 * r0 / (gamma * t as f64))
}

/// Bound on `E[f(x^t)] − f*` for a proximal denoiser after `t` block updates:
/// `2b R₀² / (γ t) + G₀² / (2τ)`. `tau = ∞` gives the plain coordinate-descent
/// bound.
pub fn theorem2_bound(blocks: usize, gamma: f64, r0: f64, g0: f64, tau: f64, t: usize) -> Result<f64> {
    positive("b", blocks as f64)?;
    positive("gamma", gamma)?;
    nonnegative("R0", r0)?;
    nonnegative("G0", g0)?;
    positive("tau", tau)?;
    positive("t", t as f64)?;
    Ok(coordinate_descent_term(blocks, gamma, r0, t) + g0 * g0 / (2.0 * tau))
}

/// `2b R₀² / (γ t)`, the objective bound for gradient-step denoisers.
pub fn coordinate_descent_bound(blocks: usize, gamma: f64, r0: f64, t: usize) -> Result<f64> {
    positive("b", blocks as f64)?;
    positive("gamma", gamma)?;
    nonnegative("R0", r0)?;
    positive("t", t as f64)?;
    Ok(coordinate_descent_term(blocks, gamma, r0, t))
}

fn coordinate_descent_term(blocks: usize, gamma: f64, r0: f64, t: usize) -> f64 {
    2.0 * blocks as f64 * r0 * r0 / (gamma * t as f64)
}

/// Parameters that balance both terms of [`theorem2_bound`] for a budget of
/// `t` updates: `τ = √t` and `γ = 1/(L_max + 2√t)`.
pub fn theorem2_schedule(t: usize, l_max: f64) -> (f64, f64) {
    let tau = (t as f64).sqrt();
    (tau, 1.0 / (l_max + 2.0 * tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem1_arithmetic() {
        let v = theorem1_bound(16, 1.0, 1.0, 1.0 / 3.0, 1.0, 100).unwrap();
        assert!((v - 1.44).abs() < 1e-12);
        // b = 1 with γ = 1/(L+2τ) gives (L+2τ)² R₀² / t
        let (l, tau, r0, t) = (2.5, 0.75, 1.3, 40);
        let g = 1.0 / (l + 2.0 * tau);
        let v = theorem1_bound(1, l, tau, g, r0, t).unwrap();
        let expect = (l + 2.0 * tau) * (l + 2.0 * tau) * r0 * r0 / t as f64;
        assert!((v - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn theorem2_arithmetic() {
        assert_eq!(theorem2_bound(1, 1.0, 1.0, 1.0, 1.0, 1).unwrap(), 2.5);
        let limit = theorem2_bound(4, 0.2, 1.5, 3.0, f64::INFINITY, 10).unwrap();
        assert_eq!(limit, coordinate_descent_bound(4, 0.2, 1.5, 10).unwrap());
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        assert!(theorem1_bound(0, 1.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(theorem1_bound(1, 1.0, 0.0, 1.0, 1.0, 1).is_err());
        assert!(theorem1_bound(1, 1.0, 1.0, -1.0, 1.0, 1).is_err());
        assert!(theorem1_bound(1, 1.0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(theorem2_bound(1, 0.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(theorem2_bound(1, 1.0, 1.0, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn schedule() {
        let (tau, gamma) = theorem2_schedule(100, 3.0);
        assert_eq!(tau, 10.0);
        assert_eq!(gamma, 1.0 / 23.0);
    }
}
