//! Streaming moment accumulators with an associative merge.

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. parallel combination.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / n;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        libm::sqrt(self.variance() / self.count as f64)
    }
}

/// Running covariance of a pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningCov {
    pub x: RunningStats,
    pub y: RunningStats,
    c2: f64,
}

impl RunningCov {
    pub fn push(&mut self, x: f64, y: f64) {
        let dx = x - self.x.mean();
        self.x.push(x);
        self.y.push(y);
        self.c2 += dx * (y - self.y.mean());
    }

    pub fn merge(&mut self, other: &Self) {
        if other.x.count() == 0 {
            return;
        }
        if self.x.count() == 0 {
            *self = *other;
            return;
        }
        let na = self.x.count() as f64;
        let nb = other.x.count() as f64;
        let dx = other.x.mean() - self.x.mean();
        let dy = other.y.mean() - self.y.mean();
        self.c2 += other.c2 + dx * dy * na * nb / (na + nb);
        self.x.merge(&other.x);
        self.y.merge(&other.y);
    }

    pub fn covariance(&self) -> f64 {
        let n = self.x.count();
        if n < 2 {
            0.0
        } else {
            self.c2 / (n - 1) as f64
        }
    }

    pub fn correlation(&self) -> f64 {
        let d = libm::sqrt(self.x.variance() * self.y.variance());
        if d == 0.0 {
            0.0
        } else {
            self.covariance() / d
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }

    /// `|self - target| <= k * se` (with an absolute floor for exact cases).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se + 1e-12 * (1.0 + target.abs())
    }
}

impl From<&RunningStats> for Estimate {
    fn from(s: &RunningStats) -> Self {
        Estimate { value: s.mean(), se: s.se() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let xs: alloc::vec::Vec<f64> = (0..101).map(|i| ((i * 37) % 17) as f64 * 0.3 - 1.0).collect();
        let mut all = RunningStats::new();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = RunningStats::new();
        let mut b = RunningStats::new();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean() - all.mean()).abs() < 1e-13);
        assert!((a.variance() - all.variance()).abs() < 1e-12);

        let mut c = RunningCov::default();
        let mut c1 = RunningCov::default();
        let mut c2 = RunningCov::default();
        for (i, &x) in xs.iter().enumerate() {
            let y = 2.0 * x + (i % 3) as f64;
            c.push(x, y);
            if i < 55 {
                c1.push(x, y)
            } else {
                c2.push(x, y)
            }
        }
        c1.merge(&c2);
        assert!((c1.covariance() - c.covariance()).abs() < 1e-12);
    }
}
