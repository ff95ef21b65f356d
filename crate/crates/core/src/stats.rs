//! Monte Carlo summaries.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub trials: u64,
}

impl Estimate {
    /// Bernoulli frequency `successes / trials`.
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let n = trials.max(1) as f64;
        let p = successes as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        Self::with_se(p, se, trials)
    }

    /// Sample mean of a quantity from its first two power sums.
    pub fn from_sums(sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials.max(1) as f64;
        let mean = sum / n;
        let var = if trials > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self::with_se(mean, (var / n).sqrt(), trials)
    }

    fn with_se(mean: f64, std_error: f64, trials: u64) -> Self {
        Self {
            mean,
            std_error,
            half_width: Z95 * std_error,
            trials,
        }
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// `P(Poisson(mean) <= k)`, summed in log space.
pub fn poisson_cdf(mean: f64, k: u64) -> f64 {
    if mean <= 0.0 {
        return 1.0;
    }
    let mut term = (-mean).exp();
    let mut total = term;
    for i in 1..=k {
        term *= mean / i as f64;
        total += term;
    }
    total.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let e = Estimate::from_counts(25, 100);
        assert_eq!(e.mean, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_has_zero_width() {
        let e = Estimate::from_sums(20.0, 40.0, 10);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn poisson_cdf_small_cases() {
        assert!((poisson_cdf(1.0, 0) - (-1f64).exp()).abs() < 1e-15);
        assert!((poisson_cdf(2.0, 1) - 3.0 * (-2f64).exp()).abs() < 1e-15);
        assert!(poisson_cdf(50.0, 200) > 1.0 - 1e-12);
    }
}
