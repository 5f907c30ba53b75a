//! Small statistics helpers shared by the experiment harness and tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square of observed category counts against the uniform
/// distribution over all categories. Returns `(statistic, p_value)` with
/// `len - 1` degrees of freedom.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    chi_square_expected(counts, expected)
}

/// Pearson chi-square against a common expected count per category.
pub fn chi_square_expected(counts: &[u64], expected: f64) -> (f64, f64) {
    assert!(counts.len() >= 2, "need at least two categories");
    assert!(expected > 0.0, "expected count must be positive");
    let stat: f64 = counts
        .iter()
        .map(|&o| {
            let diff = o as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let df = (counts.len() - 1) as f64;
    let dist = ChiSquared::new(df).expect("df >= 1");
    let p = 1.0 - dist.cdf(stat);
    (stat, p)
}

/// Sample mean; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the sample mean (unbiased variance). 0 when fewer than
/// two samples or when all samples coincide.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Percentile by the nearest-rank method on a sorted copy. `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in samples"));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_zero_statistic_gives_p_one() {
        let counts = vec![10u64; 8];
        let (stat, p) = chi_square_uniform(&counts);
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_matches_reference_value() {
        // Hand-checked: counts [28,31,40,35], uniform over 4 cells.
        let (stat, p) = chi_square_uniform(&[28, 31, 40, 35]);
        assert!((stat - 2.417_910_447_761_194).abs() < 1e-9);
        assert!((p - 0.490_309_306_965_388_3).abs() < 1e-9);
    }

    #[test]
    fn gross_nonuniformity_is_detected() {
        let mut counts = vec![100u64; 16];
        counts[0] = 0;
        let (_, p) = chi_square_uniform(&counts);
        assert!(p < 0.001);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
    }

    #[test]
    fn standard_error_of_constant_sample_is_zero() {
        assert_eq!(standard_error(&[2.0, 2.0, 2.0]), 0.0);
    }
}
