//! Interval estimates and goodness-of-fit tests for experiment reports.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided p-value of a 3 sigma normal deviation.
pub const THREE_SIGMA_P: f64 = 0.0027;

/// Wilson score interval for `hits` successes in `n` trials at normal quantile `z`.
pub fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let mid = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on count vectors over the same
/// categories; categories empty in both samples are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len(), "samples need the same categories");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cats = 0;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        cats += 1;
        for (obs, size) in [(x, na), (y, nb)] {
            let exp = tot * size as f64 / n;
            stat += (obs as f64 - exp).powi(2) / exp;
        }
    }
    let dof = cats.max(2) - 1;
    let p_value = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(stat)).unwrap_or(1.0);
    ChiSquare { statistic: stat, dof, p_value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_estimate() {
        let (lo, hi) = wilson(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        assert_eq!(wilson(0, 10, 1.96).0, 0.0);
        assert_eq!(wilson(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn chi_square_detects_shift() {
        let same = chi_square_two_sample(&[500, 300, 200], &[510, 290, 200]);
        assert_eq!(same.dof, 2);
        assert!(same.p_value > THREE_SIGMA_P);
        let shifted = chi_square_two_sample(&[500, 300, 200], &[300, 300, 400]);
        assert!(shifted.p_value < 1e-6);
    }
}
