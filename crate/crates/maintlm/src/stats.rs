//! Classical statistics used as the linear baseline: Pearson correlation,
//! simple OLS regression with R², adjusted R² and standard error of the
//! estimate, plus MSE and error-histogram binning.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("constant predictor: xs has zero variance")]
    ConstantPredictor,
    #[error("empty input")]
    Empty,
    #[error("histogram needs at least one bin")]
    ZeroBins,
}

/// Simple (one-predictor) OLS regression summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub r2: f64,
    /// `1 - (1 - r2) (n-1)/(n-2)`, the one-predictor adjusted form.
    pub adj_r2: f64,
    /// `sqrt(SSE_residual / (n-2))`, in y units.
    pub se_estimate: f64,
    pub n: usize,
}

/// Equal-width residual histogram with a zero-error reference position.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorHistogram {
    /// `B+1` edges; bins are `[edge_i, edge_{i+1})`, last bin right-closed.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Residual value of the zero-error reference line (always 0).
    pub zero_mark: f64,
}

/// Pearson product-moment correlation of two equal-length series.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { required: 2, got: n });
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Simple linear regression of `ys` on `xs` with the usual model-summary
/// statistics.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<RegressionSummary, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { required: 3, got: n });
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantPredictor);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let (r, r2) = if syy == 0.0 {
        // Flat targets: no variance to explain, keep r2 = r^2 at zero.
        (0.0, 0.0)
    } else {
        let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
        (r, r * r)
    };
    let sse_residual = (syy - slope * sxy).max(0.0);
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - 2.0);
    let se_estimate = (sse_residual / (n as f64 - 2.0)).sqrt();
    Ok(RegressionSummary {
        slope,
        intercept,
        r,
        r2,
        adj_r2,
        se_estimate,
        n,
    })
}

/// Mean squared error of a residual vector.
pub fn mse(residuals: &[f64]) -> Result<f64, StatsError> {
    if residuals.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64)
}

/// Equal-width histogram over `[min, max]` of the residuals.
///
/// Bins are left-inclusive; the last bin also includes its right edge. An
/// all-equal input collapses to a single zero-width bin holding every count.
pub fn error_histogram(residuals: &[f64], bins: usize) -> Result<ErrorHistogram, StatsError> {
    if residuals.is_empty() {
        return Err(StatsError::Empty);
    }
    if bins == 0 {
        return Err(StatsError::ZeroBins);
    }
    let lo = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(ErrorHistogram {
            bin_edges: vec![lo, hi],
            counts: vec![residuals.len()],
            zero_mark: 0.0,
        });
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for &r in residuals {
        let idx = (((r - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(ErrorHistogram {
        bin_edges,
        counts,
        zero_mark: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const FOUR_PERIOD_X: [f64; 4] = [10.0, 20.0, 13.0, 9.0];
    const FOUR_PERIOD_Y: [f64; 4] = [25.0, 43.0, 37.0, 26.0];

    #[test]
    fn pearson_trivial_cases() {
        let xs = [1.0, 2.0, 5.0];
        assert_relative_eq!(pearson_r(&xs, &xs).unwrap(), 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson_r(&xs, &neg).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_on_four_period_sample() {
        // Hand derivation: sum dx*dy = 122, sum dx^2 = 74, sum dy^2 = 228.75,
        // r = 122 / sqrt(74 * 228.75).
        let expected = 122.0 / (74.0f64 * 228.75).sqrt();
        assert_relative_eq!(
            pearson_r(&FOUR_PERIOD_X, &FOUR_PERIOD_Y).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_relative_eq!(expected, 0.9377, epsilon = 1e-4);
    }

    #[test]
    fn pearson_error_paths_are_distinct() {
        assert!(matches!(
            pearson_r(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            pearson_r(&[1.0], &[1.0]),
            Err(StatsError::TooFewSamples { required: 2, got: 1 })
        ));
        assert!(matches!(
            pearson_r(&[1.0, 1.0], &[1.0, 2.0]),
            Err(StatsError::ZeroVariance)
        ));
    }

    #[test]
    fn ols_on_four_period_sample() {
        let s = ols_fit(&FOUR_PERIOD_X, &FOUR_PERIOD_Y).unwrap();
        assert_relative_eq!(s.slope, 122.0 / 74.0, epsilon = 1e-12);
        assert_relative_eq!(s.intercept, 32.75 - (122.0 / 74.0) * 13.0, epsilon = 1e-12);
        assert_relative_eq!(s.slope, 1.6486, epsilon = 1e-4);
        assert_relative_eq!(s.intercept, 11.318, epsilon = 1e-3);
        assert_relative_eq!(s.r2, 0.8793, epsilon = 1e-4);
        assert_relative_eq!(s.adj_r2, 0.8189, epsilon = 1e-4);
        assert_relative_eq!(s.se_estimate, 3.716, epsilon = 1e-3);
    }

    #[test]
    fn ols_perfect_line() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        let s = ols_fit(&xs, &ys).unwrap();
        assert_relative_eq!(s.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.intercept, 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.r2, 1.0, epsilon = 1e-12);
        assert!(s.se_estimate < 1e-9);
    }

    #[test]
    fn ols_error_paths() {
        assert!(matches!(
            ols_fit(&[1.0, 2.0], &[1.0, 2.0]),
            Err(StatsError::TooFewSamples { required: 3, got: 2 })
        ));
        assert!(matches!(
            ols_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::ConstantPredictor)
        ));
    }

    #[test]
    fn mse_basic() {
        assert_eq!(mse(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(mse(&[3.0, -4.0]).unwrap(), 12.5);
        assert!(matches!(mse(&[]), Err(StatsError::Empty)));
    }

    #[test]
    fn histogram_inclusion_rule() {
        let h = error_histogram(&[-1.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(h.bin_edges, vec![-1.0, 0.0, 1.0]);
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.zero_mark, 0.0);
    }

    #[test]
    fn histogram_degenerate_and_errors() {
        let h = error_histogram(&[5.0, 5.0, 5.0], 3).unwrap();
        assert_eq!(h.bin_edges, vec![5.0, 5.0]);
        assert_eq!(h.counts, vec![3]);
        assert!(matches!(error_histogram(&[], 2), Err(StatsError::Empty)));
        assert!(matches!(error_histogram(&[1.0], 0), Err(StatsError::ZeroBins)));
    }

    proptest! {
        #[test]
        fn pearson_symmetric_bounded_affine_invariant(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40),
            a in 0.1f64..10.0,
            b in -100.0f64..100.0,
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let Ok(r) = pearson_r(&xs, &ys) else { return Ok(()) };
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert_eq!(r, pearson_r(&ys, &xs).unwrap());
            let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            prop_assert!((pearson_r(&scaled, &ys).unwrap() - r).abs() < 1e-9);
            let flipped: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
            prop_assert!((pearson_r(&flipped, &ys).unwrap() + r).abs() < 1e-9);
        }

        #[test]
        fn ols_normal_equation_identities(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40),
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let Ok(s) = ols_fit(&xs, &ys) else { return Ok(()) };
            let res: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .map(|(&x, &y)| y - (s.intercept + s.slope * x))
                .collect();
            let mean_y_abs = ys.iter().map(|v| v.abs()).sum::<f64>() / ys.len() as f64;
            let scale = (xs.len() as f64) * mean_y_abs.max(1.0);
            prop_assert!(res.iter().sum::<f64>().abs() <= 1e-9 * scale);
            let dot: f64 = xs.iter().zip(&res).map(|(&x, &r)| x * r).sum();
            let x_scale = xs.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(dot.abs() <= 1e-9 * scale * x_scale);
            // r2 agrees with pearson squared.
            if let Ok(r) = pearson_r(&xs, &ys) {
                prop_assert!((s.r2 - r * r).abs() < 1e-12);
            }
        }

        #[test]
        fn histogram_conserves_counts(
            residuals in prop::collection::vec(-1e3f64..1e3, 1..200),
            bins in 1usize..30,
        ) {
            let h = error_histogram(&residuals, bins).unwrap();
            prop_assert_eq!(h.counts.iter().sum::<usize>(), residuals.len());
            for w in h.bin_edges.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }
    }
}
