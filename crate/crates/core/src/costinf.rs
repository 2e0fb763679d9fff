//! Online prediction intervals for the `H`-step operating cost.
//!
//! A nominal interval built from empirical residual quantiles of a point
//! predictor is widened (or shrunk) by `q_t = g_t(E_t)`, where `E_t` counts
//! observed miscoverages plus every still-pending interval from the last
//! `H - 1` steps that is not the full interval `[0, C_max]`. A full interval
//! can never miscover, so a saturated gain freezes `E_t` and the number of
//! miscoverages over `T - H + 1` intervals stays below `beta * (T - H + 1)`
//! for any cost sequence in `[0, C_max]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bounds::{Gain, InferenceGain};
use crate::error::{Error, Result};
use crate::inventory::HistoryLog;
use crate::predict::{FeatureMap, Rls, SortedSample};

/// A cost interval inside `[0, C_max]`.
///
/// `full` marks exactly `[0, C_max]`; `empty` marks an interval inverted by a
/// negative adjustment, which contains nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostInterval {
    pub lo: f64,
    pub hi: f64,
    pub full: bool,
    pub empty: bool,
}

impl CostInterval {
    pub fn full(c_max: f64) -> Self {
        Self {
            lo: 0.0,
            hi: c_max,
            full: true,
            empty: false,
        }
    }

    pub fn contains(&self, cost: f64) -> bool {
        !self.empty && self.lo <= cost && cost <= self.hi
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.hi - self.lo
        }
    }
}

/// Clamps `[lo, hi]` into `[0, c_max]`, flagging it full when both ends were
/// clipped and empty when it came out inverted.
fn clamp_interval(lo: f64, hi: f64, c_max: f64) -> CostInterval {
    let clip_lo = lo <= 0.0;
    let clip_hi = hi >= c_max;
    let lo = if clip_lo { 0.0 } else { lo };
    let hi = if clip_hi { c_max } else { hi };
    CostInterval {
        lo,
        hi,
        full: clip_lo && clip_hi,
        empty: lo > hi,
    }
}

/// `[c + q_{beta/2}, c + q_{1-beta/2}]` from the residual sample, each end
/// projected onto `[0, C_max]`. With no residuals yet the full interval is
/// returned.
pub fn nominal_interval(point: f64, residuals: &SortedSample, beta: f64, c_max: f64) -> CostInterval {
    match (residuals.quantile(beta / 2.0), residuals.quantile(1.0 - beta / 2.0)) {
        (Some(lo), Some(hi)) => clamp_interval(
            (point + lo).min(c_max),
            (point + hi).max(0.0),
            c_max,
        ),
        _ => CostInterval::full(c_max),
    }
}

/// `[max(0, lo - q), min(hi + q, C_max)]`; an infinite `q` gives the full
/// interval.
pub fn adjust_interval(nominal: CostInterval, q: Gain, c_max: f64) -> CostInterval {
    match q {
        Gain::Infinite => CostInterval::full(c_max),
        Gain::Finite(q) => clamp_interval(nominal.lo - q, nominal.hi + q, c_max),
    }
}

/// Observed and potential miscoverage accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct MiscoverageLedger {
    horizon: usize,
    pending: VecDeque<(usize, CostInterval)>,
    covered: Vec<bool>,
    observed: u64,
}

impl MiscoverageLedger {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            pending: VecDeque::new(),
            covered: Vec::new(),
            observed: 0,
        }
    }

    fn next_tau(&self) -> usize {
        self.covered.len() + self.pending.len()
    }

    /// Registers the interval emitted at `tau`; steps must arrive in order.
    pub fn push(&mut self, tau: usize, interval: CostInterval) -> Result<()> {
        if tau != self.next_tau() {
            return Err(Error::Precondition(format!(
                "expected interval for step {}, got {tau}",
                self.next_tau()
            )));
        }
        self.pending.push_back((tau, interval));
        Ok(())
    }

    /// Resolves the oldest pending interval against its realized cost and
    /// returns whether it covered. Empty intervals always miscover.
    pub fn resolve(&mut self, tau: usize, realized: f64) -> Result<bool> {
        match self.pending.front() {
            Some(&(front, interval)) if front == tau => {
                self.pending.pop_front();
                let covered = interval.contains(realized);
                if !covered {
                    self.observed += 1;
                }
                self.covered.push(covered);
                Ok(covered)
            }
            _ => Err(Error::NotPending(tau)),
        }
    }

    /// Observed miscoverages among resolved intervals.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    /// Pending intervals that are not the full interval.
    pub fn potential(&self) -> u64 {
        self.pending.iter().filter(|(_, i)| !i.full).count() as u64
    }

    /// The inference error process: observed plus potential miscoverages.
    pub fn errors(&self) -> u64 {
        self.observed + self.potential()
    }

    pub fn resolved(&self) -> &[bool] {
        &self.covered
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// `q_t = g_t(E_t)`. The ledger must already be resolved through `t - H`,
/// so its pending intervals all lie in `t-H+1 ..= t-1`.
pub fn compute_q(ledger: &MiscoverageLedger, t: usize, gain: &InferenceGain) -> Result<Gain> {
    if let Some(&(oldest, _)) = ledger.pending.front() {
        if oldest + ledger.horizon <= t {
            return Err(Error::Precondition(format!(
                "interval {oldest} should have been resolved before step {t}"
            )));
        }
    }
    Ok(gain.eval(ledger.errors(), t))
}

/// How the adjustment `q_t` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    /// `q_t` from the associated gain.
    #[default]
    Certified,
    /// `q_t = 0`: the raw nominal interval (negative control, no guarantee).
    Nominal,
}

/// Everything emitted for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub point: f64,
    pub nominal: CostInterval,
    pub q: Gain,
    pub interval: CostInterval,
}

/// The outcome of resolving one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub tau: usize,
    pub realized: f64,
    pub covered: bool,
}

/// The full online engine: cost point predictor, residual quantiles, gain and
/// ledger, driven step by step from a [`HistoryLog`].
#[derive(Debug, Clone)]
pub struct CostInference {
    features: FeatureMap,
    model: Rls,
    residuals: SortedSample,
    ledger: MiscoverageLedger,
    gain: InferenceGain,
    beta: f64,
    c_max: f64,
    mode: InferenceMode,
    awaiting: VecDeque<(usize, Vec<f64>, f64)>,
}

impl CostInference {
    /// `model` should start at `[C_max / 2, 0, ...]` so early predictions
    /// sit mid-range.
    pub fn new(
        features: FeatureMap,
        model: Rls,
        gain: InferenceGain,
        horizon: usize,
        beta: f64,
        c_max: f64,
        mode: InferenceMode,
    ) -> Result<Self> {
        if features.dim() != model.dim() {
            return Err(Error::Dimension {
                expected: features.dim(),
                got: model.dim(),
            });
        }
        if horizon < 2 {
            return Err(Error::Config(format!("cost horizon must be >= 2, got {horizon}")));
        }
        Ok(Self {
            features,
            model,
            residuals: SortedSample::new(),
            ledger: MiscoverageLedger::new(horizon),
            gain,
            beta,
            c_max,
            mode,
            awaiting: VecDeque::new(),
        })
    }

    pub fn ledger(&self) -> &MiscoverageLedger {
        &self.ledger
    }

    pub fn gain(&self) -> &InferenceGain {
        &self.gain
    }

    pub fn residuals(&self) -> &SortedSample {
        &self.residuals
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// At step `t`, resolves the interval for `t - H` once its horizon cost is
    /// in the log, then feeds the delayed target to the cost model.
    pub fn resolve_due(&mut self, log: &HistoryLog, t: usize) -> Result<Option<Resolution>> {
        let horizon = self.ledger.horizon();
        let Some(tau) = t.checked_sub(horizon) else {
            return Ok(None);
        };
        if self.ledger.pending.front().map(|p| p.0) != Some(tau) {
            return Ok(None);
        }
        let realized = log.horizon_cost(tau as i64).ok_or_else(|| {
            Error::Precondition(format!("horizon cost for step {tau} not yet in the log"))
        })?;
        let covered = self.ledger.resolve(tau, realized)?;
        let (stamped, phi, point) = self
            .awaiting
            .pop_front()
            .expect("every pending interval has a stored prediction");
        debug_assert_eq!(stamped, tau);
        self.residuals.insert(realized - point);
        self.model.update(&phi, realized)?;
        Ok(Some(Resolution {
            tau,
            realized,
            covered,
        }))
    }

    /// Current inference error process `E_t`.
    pub fn errors(&self) -> u64 {
        self.ledger.errors()
    }

    pub fn bound_at(&self, t: usize) -> f64 {
        self.gain.bound().at(t)
    }

    /// Emits the adjusted interval for `C^H_t`.
    pub fn emit(&mut self, log: &HistoryLog, t: usize) -> Result<Emission> {
        let phi = self.features.features(log, t as i64);
        let point = self.model.predict(&phi)?;
        let nominal = nominal_interval(point, &self.residuals, self.beta, self.c_max);
        let q = match self.mode {
            InferenceMode::Certified => compute_q(&self.ledger, t, &self.gain)?,
            InferenceMode::Nominal => Gain::Finite(0.0),
        };
        let interval = adjust_interval(nominal, q, self.c_max);
        self.ledger.push(t, interval)?;
        self.awaiting.push_back((t, phi, point));
        Ok(Emission {
            point,
            nominal,
            q,
            interval,
        })
    }
}
