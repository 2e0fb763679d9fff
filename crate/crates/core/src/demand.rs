//! Seeded demand generators.
//!
//! Every generator sees the current step, the stock and the order just placed
//! (so feedback and adversarial demand can react to them) and emits one demand
//! value. Each owns a `ChaCha8Rng`, so a seed plus a stock trajectory fully
//! determines the demand sequence.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

/// What a demand process may observe before emitting `W_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandContext {
    pub t: i64,
    pub stock: f64,
    pub order: f64,
}

pub trait DemandSource {
    fn next_demand(&mut self, ctx: &DemandContext) -> Result<f64>;
}

/// `clip(20 + 20 sin(2 pi t / 50) + noise, 0, 50)`.
pub fn periodic_demand(t: i64, noise: f64) -> f64 {
    (20.0 + 20.0 * (TAU * t as f64 / 50.0).sin() + noise).clamp(0.0, 50.0)
}

/// Population fractions of the stochastic SIR model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirState {
    pub susceptible: f64,
    pub infected: f64,
    pub removed: f64,
}

impl Default for SirState {
    fn default() -> Self {
        Self {
            susceptible: 0.999,
            infected: 0.001,
            removed: 0.0,
        }
    }
}

/// One SIR step. `reinfect` is the Bernoulli shock: immunity is lost and
/// 0.1% of the population gets infected. Returns `W = 50 * I_new` and the
/// advanced state.
pub fn sir_step(state: SirState, reinfect: bool) -> (f64, SirState) {
    let e = if reinfect { 1.0 } else { 0.0 };
    let s_shock = state.susceptible + (state.removed - 0.001) * e;
    let i_shock = state.infected + 0.001 * e;
    let contacts = 0.5 * s_shock * i_shock;
    let susceptible = s_shock - contacts;
    let infected = (i_shock + contacts - 0.2 * i_shock).max(0.0);
    let removed = (1.0 - e) * state.removed + 0.2 * (state.infected + 0.001 * e);
    let next = SirState {
        susceptible,
        infected,
        removed,
    };
    (50.0 * infected, next)
}

/// Upper clip for feedback demand, just below the 50-item capacity.
pub const FEEDBACK_CAP: f64 = 49.999;

/// `min(5 + X_prev + noise, 49.999)`.
pub fn feedback_demand(prev_stock: f64, noise: f64) -> f64 {
    (5.0 + prev_stock + noise).min(FEEDBACK_CAP)
}

#[derive(Debug, Clone)]
pub struct Periodic {
    rng: ChaCha8Rng,
}

impl Periodic {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl DemandSource for Periodic {
    fn next_demand(&mut self, ctx: &DemandContext) -> Result<f64> {
        let noise: f64 = self.rng.sample(StandardNormal);
        Ok(periodic_demand(ctx.t, noise))
    }
}

#[derive(Debug, Clone)]
pub struct Sir {
    state: SirState,
    shock: Bernoulli,
    rng: ChaCha8Rng,
}

impl Sir {
    pub fn new(seed: u64, initial: SirState) -> Self {
        Self {
            state: initial,
            shock: Bernoulli::new(0.03).expect("0.03 is a valid probability"),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn state(&self) -> SirState {
        self.state
    }
}

impl DemandSource for Sir {
    fn next_demand(&mut self, _ctx: &DemandContext) -> Result<f64> {
        let reinfect = self.shock.sample(&mut self.rng);
        let (w, next) = sir_step(self.state, reinfect);
        if !w.is_finite() {
            return Err(Error::NonFinite("SIR state"));
        }
        self.state = next;
        Ok(w)
    }
}

/// Demand reacting to the previous period's stock.
#[derive(Debug, Clone)]
pub struct Feedback {
    prev_stock: Option<f64>,
    noise: ChiSquared<f64>,
    rng: ChaCha8Rng,
}

impl Feedback {
    pub fn new(seed: u64) -> Self {
        Self {
            prev_stock: None,
            noise: ChiSquared::new(1.0).expect("one degree of freedom is valid"),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl DemandSource for Feedback {
    fn next_demand(&mut self, ctx: &DemandContext) -> Result<f64> {
        // the very first draw has no previous stock; use the current one
        let prev = self.prev_stock.unwrap_or(ctx.stock);
        let noise = self.noise.sample(&mut self.rng);
        self.prev_stock = Some(ctx.stock);
        Ok(feedback_demand(prev, noise))
    }
}

/// Picks `W_t` in `{0, w_max - margin}` after seeing the order: whenever the
/// large value empties the stock it is chosen, otherwise a coin flip decides.
#[derive(Debug, Clone)]
pub struct Adversarial {
    high: f64,
    rng: ChaCha8Rng,
}

impl Adversarial {
    pub fn new(seed: u64, w_max: f64, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin < w_max) {
            return Err(Error::Config(format!(
                "adversarial margin must lie in (0, w_max), got {margin}"
            )));
        }
        Ok(Self {
            high: w_max - margin,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl DemandSource for Adversarial {
    fn next_demand(&mut self, ctx: &DemandContext) -> Result<f64> {
        if ctx.stock + ctx.order <= self.high || self.rng.random_bool(0.5) {
            Ok(self.high)
        } else {
            Ok(0.0)
        }
    }
}

/// Replays a recorded series; step `t` reads `series[t + offset]`.
#[derive(Debug, Clone)]
pub struct Replay {
    series: Vec<f64>,
    offset: i64,
}

impl Replay {
    pub fn new(series: Vec<f64>, offset: i64) -> Self {
        Self { series, offset }
    }
}

impl DemandSource for Replay {
    fn next_demand(&mut self, ctx: &DemandContext) -> Result<f64> {
        usize::try_from(ctx.t + self.offset)
            .ok()
            .and_then(|i| self.series.get(i).copied())
            .ok_or(Error::SeriesTooShort {
                needed: (ctx.t + self.offset + 1).max(0) as usize,
                have: self.series.len(),
            })
    }
}
