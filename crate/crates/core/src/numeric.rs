//! Log-domain helpers.

/// `log(sum(exp(v)))`, shifted by the maximum. Returns `-inf` for an empty
/// slice or when every term is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Softmax of log-weights, in place. Returns `false` if no weight is
/// positive and finite.
pub fn normalize_log_weights(log_w: &mut [f64]) -> bool {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return false;
    }
    let mut total = 0.0;
    for w in log_w.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    if !(total.is_finite() && total > 0.0) {
        return false;
    }
    log_w.iter_mut().for_each(|w| *w /= total);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_and_survives_underflow() {
        let v = [0.1, -2.0, 3.5];
        let naive = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - naive).abs() < 1e-14);
        let shifted: Vec<f64> = v.iter().map(|x| x - 2000.0).collect();
        assert!((log_sum_exp(&shifted) - (naive - 2000.0)).abs() < 1e-10);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn weights_sum_to_one() {
        let mut w = [-1000.0, -1001.0, f64::NEG_INFINITY];
        assert!(normalize_log_weights(&mut w));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[2], 0.0);
        assert!(!normalize_log_weights(&mut [f64::NEG_INFINITY]));
    }
}
