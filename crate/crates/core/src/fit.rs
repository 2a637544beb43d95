/// Least-squares slope of `ln y` against `ln x`.
///
/// Returns `None` for fewer than two usable points (nonpositive or
/// non-finite values are skipped).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// True if the sequence is strictly decreasing.
pub fn strictly_decreasing(y: &[f64]) -> bool {
    y.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let x = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(2.0)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
        assert_eq!(loglog_slope(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(loglog_slope(&[1.0, 2.0], &[0.0, 2.0]), None);
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(p in -4.0f64..4.0, c in 1e-3f64..1e3) {
            let x = [0.3, 0.2, 0.1, 0.05];
            let y: Vec<f64> = x.iter().map(|v: &f64| c * v.powf(p)).collect();
            prop_assert!((loglog_slope(&x, &y).unwrap() - p).abs() < 1e-9);
        }
    }
}
