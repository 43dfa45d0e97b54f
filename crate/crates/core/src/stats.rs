//! Small estimators shared by the Monte Carlo modules.

use serde::{Deserialize, Serialize};

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    /// Standardized distance from `expected`; zero when both the error and
    /// the distance vanish.
    pub fn z(&self, expected: f64) -> f64 {
        z_score(self.value, expected, self.stderr)
    }

    /// Whether `expected` lies within `k` standard errors.
    pub fn within(&self, expected: f64, k: f64) -> bool {
        self.z(expected).abs() <= k
    }
}

pub fn z_score(observed: f64, expected: f64, stderr: f64) -> f64 {
    let d = observed - expected;
    if d == 0.0 {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY.copysign(d)
    } else {
        d / stderr
    }
}

/// Sample proportion `hits / n` with binomial standard error.
pub fn proportion(hits: u64, n: u64) -> Estimate {
    if n == 0 {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    Estimate::new(p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Mean and variance accumulated from weighted integer observations.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64, count: u64) {
        self.n += count;
        self.sum += x * count as f64;
        self.sum_sq += x * x * count as f64;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance (0 for fewer than two observations).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn mean_estimate(&self) -> Estimate {
        Estimate::new(self.mean(), (self.variance() / self.n as f64).sqrt())
    }
}

/// Pooled two-proportion z statistic.
pub fn two_proportion_z(hits1: u64, n1: u64, hits2: u64, n2: u64) -> f64 {
    let (p1, p2) = (hits1 as f64 / n1 as f64, hits2 as f64 / n2 as f64);
    let pooled = (hits1 + hits2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    z_score(p1, p2, se)
}

/// z statistic for the difference of two independent estimates.
pub fn two_sample_z(a: Estimate, b: Estimate) -> f64 {
    z_score(a.value, b.value, (a.stderr.powi(2) + b.stderr.powi(2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_hand_values() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x, 1);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn z_edge_cases() {
        assert_eq!(z_score(1.0, 1.0, 0.0), 0.0);
        assert_eq!(z_score(1.0, 0.0, 0.0), f64::INFINITY);
        assert_eq!(two_proportion_z(50, 100, 50, 100), 0.0);
        assert!(two_proportion_z(60, 100, 40, 100) > 2.0);
    }
}
