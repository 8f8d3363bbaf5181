//! Streaming, mergeable statistics.

use serde::{Deserialize, Serialize};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.5758;

/// Values that can absorb another partial aggregate of the same kind.
pub trait Mergeable {
    fn merge(&mut self, other: Self);
}

/// Count, mean and sum of squared deviations (Welford), mergeable by the
/// pairwise update of Chan et al.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// 99% normal-approximation half-width for the mean.
    pub fn ci99_halfwidth(&self) -> f64 {
        Z99 * self.std_error()
    }
}

impl Mergeable for RunningMoments {
    fn merge(&mut self, other: Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
    }
}

impl Extend<f64> for RunningMoments {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for RunningMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Self::new();
        m.extend(iter);
        m
    }
}

/// Binomial proportion with its 99% normal-approximation interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliCI {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub halfwidth: f64,
}

impl BernoulliCI {
    pub fn lower(&self) -> f64 {
        self.estimate - self.halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.halfwidth
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

/// `p = successes / trials` with half-width `Z99 * sqrt(p (1 - p) / trials)`.
///
/// At `p = 0` or `p = 1` the normal approximation degenerates to a zero
/// half-width; that is reported as-is.
///
/// # Panics
/// If `trials == 0` or `successes > trials`.
pub fn bernoulli_ci99(successes: u64, trials: u64) -> BernoulliCI {
    assert!(trials >= 1, "bernoulli_ci99 needs at least one trial");
    assert!(successes <= trials, "more successes than trials");
    let p = successes as f64 / trials as f64;
    BernoulliCI {
        successes,
        trials,
        estimate: p,
        halfwidth: Z99 * (p * (1.0 - p) / trials as f64).sqrt(),
    }
}
