//! Least-squares line fits used by the convergence and bound studies.

/// Ordinary least-squares fit `y ≈ intercept + slope * x`.
///
/// Returns `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len(), "linear_fit: length mismatch");
    assert!(xs.len() >= 2, "linear_fit: need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit the observed order of an error model `err ≈ C * x^p` from samples,
/// i.e. the slope of `log err` against `log x`.
///
/// Returns `(order, log_coefficient, r_squared)`. Samples with non-positive
/// error are dropped (they sit at machine precision).
pub fn loglog_slope(xs: &[f64], errs: &[f64]) -> (f64, f64, f64) {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(errs)
        .filter(|(&x, &e)| x > 0.0 && e > 0.0)
        .map(|(&x, &e)| (x.ln(), e.ln()))
        .collect();
    assert!(
        pairs.len() >= 2,
        "loglog_slope: need at least two positive samples"
    );
    let lx: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let le: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    linear_fit(&lx, &le)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, b, r2) = linear_fit(&xs, &ys);
        assert_abs_diff_eq!(s, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn recovers_power_law() {
        let hs = [0.4, 0.2, 0.1, 0.05];
        let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        let (p, logc, _) = loglog_slope(&hs, &errs);
        assert_abs_diff_eq!(p, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(logc.exp(), 3.0, epsilon = 1e-10);
    }
}
