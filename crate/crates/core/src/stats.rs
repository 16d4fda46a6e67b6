//! Small statistics helpers shared by the sampling and protocol modules.

use serde::{Deserialize, Serialize};

/// Two-sided 99% quantile of the standard normal distribution.
pub const Z_99: f64 = 2.575829303548901;

/// A Wilson score confidence interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub lo: f64,
    pub hi: f64,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Wilson score interval at confidence multiplier `z` for `successes`
/// observed out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> WilsonInterval {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        lo: (centre - half).max(0.0),
        hi: (centre + half).min(1.0),
    }
}

/// Wilson score interval at the 99% level.
pub fn wilson_99(successes: u64, trials: u64) -> WilsonInterval {
    wilson_interval(successes, trials, Z_99)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_point_estimate() {
        let iv = wilson_99(37, 100);
        assert!(iv.lo < 0.37 && 0.37 < iv.hi);
        assert!(iv.lo >= 0.0 && iv.hi <= 1.0);
    }

    #[test]
    fn wilson_extremes_stay_in_unit_interval() {
        let zero = wilson_99(0, 50);
        assert_eq!(zero.lo, 0.0);
        assert!(zero.hi > 0.0 && zero.hi < 0.25);
        let all = wilson_99(50, 50);
        assert_eq!(all.hi, 1.0);
        assert!(all.lo > 0.75);
    }

    #[test]
    fn wilson_width_shrinks_roughly_as_sqrt_trials() {
        let w1 = wilson_99(500, 1000).width();
        let w2 = wilson_99(1000, 2000).width();
        let ratio = w1 / w2;
        assert!((ratio - std::f64::consts::SQRT_2).abs() < 0.01);
    }
}
