//! Order policies: the certified rule and the uncertified baselines.

use crate::bounds::{Gain, PolicyGain};
use crate::error::Result;
use crate::inventory::is_critical;

/// `min(max(0, w_hat - X + g), w_max - X)`; a saturated gain orders up to
/// capacity.
pub fn certified_order(w_hat: f64, stock: f64, gain: Gain, w_max: f64) -> f64 {
    let room = (w_max - stock).max(0.0);
    match gain {
        Gain::Infinite => room,
        Gain::Finite(g) => (w_hat - stock + g).max(0.0).min(room),
    }
}

/// Always restock to capacity.
pub fn trivial_order(stock: f64, w_max: f64) -> f64 {
    (w_max - stock).max(0.0)
}

/// Order the predicted shortfall, `max(0, w_hat - X)`.
pub fn uncertified_order(w_hat: f64, stock: f64) -> f64 {
    (w_hat - stock).max(0.0)
}

/// Running state of the certified policy over one run.
///
/// `errors` counts critical stock events at `t = 1..=now`; the event at the
/// current stock is counted before the order for that step is placed.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedPolicy {
    gain: PolicyGain,
    threshold: f64,
    w_max: f64,
    errors: u64,
}

impl CertifiedPolicy {
    pub fn new(horizon: usize, alpha: f64, threshold: f64, w_max: f64) -> Result<Self> {
        Ok(Self {
            gain: PolicyGain::new(horizon, alpha)?,
            threshold,
            w_max,
            errors: 0,
        })
    }

    pub fn gain(&self) -> &PolicyGain {
        &self.gain
    }

    pub fn errors(&self) -> u64 {
        self.errors
    }

    /// Registers the stock observed at a step `t >= 1`; returns whether it
    /// was a critical event.
    pub fn observe(&mut self, stock: f64) -> bool {
        let critical = is_critical(stock, self.threshold);
        if critical {
            self.errors += 1;
        }
        critical
    }

    pub fn current_gain(&self, t: usize) -> Gain {
        self.gain.eval(self.errors, t)
    }

    pub fn order(&self, w_hat: f64, stock: f64, t: usize) -> f64 {
        certified_order(w_hat, stock, self.current_gain(t), self.w_max)
    }
}
