//! Exact proximal operator of 1-D total variation,
//! `argmin_z ½‖z − x‖² + w Σ |z_{j+1} − z_j|`.
//!
//! Direct taut-string scan (Condat's formulation): the dual variable is
//! tracked as a running tube bound and segments are emitted as soon as the
//! string must bend, so the cost is linear in practice and the output is exact
//! up to floating-point rounding.

pub fn tv1d_prox(input: &[f64], weight: f64) -> Vec<f64> {
    let n = input.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if n == 1 || weight <= 0.0 {
        out.copy_from_slice(input);
        return out;
    }
    let lambda = weight;
    let two_lambda = 2.0 * lambda;
    let neg_lambda = -lambda;

    // k: current position, k0: start of the open segment
    let mut k = 0usize;
    let mut k0 = 0usize;
    // last positions where umax hit -lambda / umin hit +lambda
    let mut kplus = 0usize;
    let mut kminus = 0usize;
    let mut umin = lambda;
    let mut umax = neg_lambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;

    loop {
        while k == n - 1 {
            if umin < 0.0 {
                // vmin too high: negative jump
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                // vmax too low: positive jump
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = neg_lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                for o in &mut out[k0..=k] {
                    *o = vmin;
                }
                return out;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < neg_lambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = input[k0];
            vmax = vmin + two_lambda;
            umin = lambda;
            umax = neg_lambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = input[k0];
            vmin = vmax - two_lambda;
            umin = lambda;
            umax = neg_lambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= neg_lambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = neg_lambda;
        }
    }
}

/// `Σ |x_{j+1} − x_j|`.
pub fn tv1d_value(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_closed_form() {
        let z = tv1d_prox(&[0.0, 1.0], 0.25);
        assert!((z[0] - 0.25).abs() < 1e-15);
        assert!((z[1] - 0.75).abs() < 1e-15);
        // large weight merges both samples at their mean
        let z = tv1d_prox(&[0.0, 1.0], 10.0);
        assert!((z[0] - 0.5).abs() < 1e-15 && (z[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_signal_is_fixed() {
        let x = vec![0.7; 9];
        for z in tv1d_prox(&x, 3.0) {
            assert!((z - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn preserves_mean() {
        let x = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, 6.0];
        for w in [0.1, 0.5, 2.0, 50.0] {
            let z = tv1d_prox(&x, w);
            let (sx, sz): (f64, f64) = (x.iter().sum(), z.iter().sum());
            assert!((sx - sz).abs() < 1e-12, "w={w}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(tv1d_prox(&[], 1.0).is_empty());
        assert_eq!(tv1d_prox(&[2.5], 1.0), vec![2.5]);
        assert_eq!(tv1d_prox(&[1.0, 5.0], 0.0), vec![1.0, 5.0]);
    }
}
