//! Binomial frequency estimates for Monte-Carlo checks.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Frequency {
    pub hits: u64,
    pub trials: u64,
}

impl Frequency {
    pub fn new(hits: u64, trials: u64) -> Self {
        Frequency { hits, trials }
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    /// Standard deviation of the observed rate if the true rate is `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    /// `|rate - p| <= k·σ(p)`. When `σ(p) = 0` the rate must equal `p`.
    pub fn within(&self, p: f64, k: f64) -> bool {
        (self.rate() - p).abs() <= k * self.sigma(p) + 1e-12
    }

    /// Normal-approximation interval `rate ± k·σ(rate)`, clipped to `[0, 1]`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        let r = self.rate();
        let s = self.sigma(r);
        ((r - k * s).max(0.0), (r + k * s).min(1.0))
    }
}
