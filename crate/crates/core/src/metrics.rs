//! Measurement noise at a prescribed input SNR and reconstruction SNR.
//!
//! SNR convention: `10 log10(‖reference‖² / ‖reference − estimate‖²)`, no
//! mean removal.

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::rng::SplitMix64;

/// Requested input SNRs above this value (including `+∞`) are clamped to it.
pub const MAX_INPUT_SNR_DB: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NoisySystem {
    pub y: Vec<f64>,
    pub y_clean: Vec<f64>,
    pub input_snr_db: f64,
    pub noise_seed: u64,
}

/// Add white Gaussian noise rescaled so that the realized input SNR equals
/// `snr_db` exactly: `e = e₀ ‖y_clean‖ / (‖e₀‖ 10^{snr/20})`.
pub fn add_noise_at_input_snr(y_clean: &[f64], snr_db: f64, seed: u64) -> Result<NoisySystem> {
    let signal = norm(y_clean);
    if signal == 0.0 {
        return Err(Error::ZeroSignal("clean measurements have zero energy"));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("input SNR is NaN".into()));
    }
    let snr = snr_db.min(MAX_INPUT_SNR_DB);
    let mut rng = SplitMix64::new(seed);
    let e0 = rng.normal_vec(y_clean.len());
    let scale = signal / (norm(&e0) * 10f64.powf(snr / 20.0));
    let y = y_clean
        .iter()
        .zip(&e0)
        .map(|(c, e)| c + scale * e)
        .collect();
    Ok(NoisySystem {
        y,
        y_clean: y_clean.to_vec(),
        input_snr_db: snr,
        noise_seed: seed,
    })
}

/// Reconstruction SNR in decibels; `+∞` when the estimate is exact.
pub fn snr_db(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    let signal = norm(reference);
    if signal == 0.0 {
        return Err(Error::ZeroSignal("reference has zero energy"));
    }
    let err = dist(reference, estimate);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (signal / err).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_sq, sub};

    #[test]
    fn noise_energy_is_exact() {
        let mut rng = SplitMix64::new(1);
        let clean = rng.normal_vec(64);
        let sys = add_noise_at_input_snr(&clean, 30.0, 5).unwrap();
        let e = sub(&sys.y, &clean);
        let ratio = norm_sq(&e) / (norm_sq(&clean) / 1000.0);
        assert!((ratio - 1.0).abs() < 1e-12, "{ratio}");
        let back = snr_db(&sys.y, &clean).unwrap();
        assert!((back - 30.0).abs() < 1e-9);
    }

    #[test]
    fn infinite_snr_is_capped() {
        let clean = vec![1.0; 10];
        let sys = add_noise_at_input_snr(&clean, f64::INFINITY, 2).unwrap();
        assert_eq!(sys.input_snr_db, MAX_INPUT_SNR_DB);
        let err = norm(&sub(&sys.y, &clean));
        // 10^(-300/20) = 1e-15, plus rounding of the sums
        assert!(err <= 2e-15 * norm(&clean));
    }

    #[test]
    fn noise_is_deterministic() {
        let clean = [1.0, 2.0, -3.0];
        let a = add_noise_at_input_snr(&clean, 20.0, 9).unwrap();
        let b = add_noise_at_input_snr(&clean, 20.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(add_noise_at_input_snr(&[0.0; 3], 20.0, 9).is_err());
    }

    #[test]
    fn snr_spot_values() {
        let r = [3.0, 4.0];
        assert_eq!(snr_db(&r, &r).unwrap(), f64::INFINITY);
        assert!((snr_db(&[0.0, 0.0], &r).unwrap()).abs() < 1e-15);
        // ‖δ‖ = ‖r‖/10
        let est = [3.0 + 0.3, 4.0 + 0.4];
        assert!((snr_db(&est, &r).unwrap() - 20.0).abs() < 1e-12);
        assert!(snr_db(&r, &[0.0, 0.0]).is_err());
    }
}
