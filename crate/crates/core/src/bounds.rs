//! Error bound functions and the nonlinear gains associated with them.
//!
//! An error process `E_t` starts at zero and grows by at most one per step.
//! An error bound function `b(t)` is nondecreasing with `0 <= b(t) <= rate * T`.
//! A gain `g_t(E)` is *associated* with `b` when `E + 1 >= b(t)` forces
//! `g_t(E) >= g_sat`. If saturation stops error growth, induction over `t`
//! gives `E_t <= b(t) <= rate * T`; [`lemma1_oracle`] checks exactly that by
//! simulation.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A gain value on the extended real line.
///
/// `tan(pi/2)` and the "else" branches of the gain definitions map to
/// [`Gain::Infinite`] so consumers can branch on saturation structurally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gain {
    Finite(f64),
    Infinite,
}

impl Gain {
    pub fn is_infinite(self) -> bool {
        matches!(self, Gain::Infinite)
    }

    /// The gain as an `f64`, with [`Gain::Infinite`] mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Gain::Finite(v) => v,
            Gain::Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Gain::Infinite, Gain::Infinite) => Some(Ordering::Equal),
            (Gain::Infinite, Gain::Finite(_)) => Some(Ordering::Greater),
            (Gain::Finite(_), Gain::Infinite) => Some(Ordering::Less),
            (Gain::Finite(a), Gain::Finite(b)) => a.partial_cmp(b),
        }
    }
}

/// Piecewise-linear error bound.
///
/// `b(t) = 0` during a burn-in `t <= t_star` (only when `t_star > 0`), then
/// `b(t) = b_star + (rate*T - b_star) * (t - t_star) / (T - t_star)`.
/// With `t_star = 0` there is no zero region, so `b(0) = b_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    b_star: f64,
    t_star: usize,
    rate: f64,
    horizon: usize,
}

impl ErrorBound {
    pub fn new(b_star: f64, t_star: usize, rate: f64, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("error bound horizon must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!("rate must lie in [0, 1], got {rate}")));
        }
        if t_star >= horizon {
            return Err(Error::Config(format!(
                "burn-in end {t_star} must be < horizon {horizon}"
            )));
        }
        let cap = rate * horizon as f64;
        if !(b_star.is_finite() && (0.0..=cap).contains(&b_star)) {
            return Err(Error::Config(format!(
                "initial bound {b_star} must lie in [0, rate * T] = [0, {cap}]; \
                 a larger value would make the bound decrease"
            )));
        }
        Ok(Self {
            b_star,
            t_star,
            rate,
            horizon,
        })
    }

    pub fn b_star(&self) -> f64 {
        self.b_star
    }

    pub fn t_star(&self) -> usize {
        self.t_star
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `rate * T`, the final value of the bound.
    pub fn cap(&self) -> f64 {
        self.rate * self.horizon as f64
    }

    /// Evaluates `b(t)`. Past the horizon the bound stays at `rate * T`.
    pub fn at(&self, t: usize) -> f64 {
        if self.t_star > 0 && t <= self.t_star {
            return 0.0;
        }
        let t = t.min(self.horizon);
        let frac = (t - self.t_star) as f64 / (self.horizon - self.t_star) as f64;
        (self.b_star + (self.cap() - self.b_star) * frac).min(self.cap())
    }
}

/// The order-policy gain:
/// `tan(pi/2 * r)` with `r = (E + 1) / ((t/T)(alpha*T - 2) + 2)` when
/// `r in [0, 1)`, and `+inf` otherwise (including `r = 1`).
pub fn policy_gain(errors: u64, t: usize, horizon: usize, alpha: f64) -> Gain {
    let denom = (t as f64 / horizon as f64) * (alpha * horizon as f64 - 2.0) + 2.0;
    let ratio = (errors as f64 + 1.0) / denom;
    if denom > 0.0 && (0.0..1.0).contains(&ratio) {
        Gain::Finite((FRAC_PI_2 * ratio).tan())
    } else {
        Gain::Infinite
    }
}

/// The cost-inference gain:
/// `tan(pi/2 * (2 (E + 1) / b - 1))` when `b > 0` and `E + 1 < b`, else `+inf`.
///
/// Negative when `(E + 1) / b < 1/2`, which shrinks the nominal interval.
pub fn inference_gain(errors: u64, bound: f64) -> Gain {
    let next = errors as f64 + 1.0;
    if bound > 0.0 && next < bound {
        Gain::Finite((FRAC_PI_2 * (2.0 * next / bound - 1.0)).tan())
    } else {
        Gain::Infinite
    }
}

/// Validated order-policy gain for a run of `T` steps at rate `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyGain {
    horizon: usize,
    alpha: f64,
}

impl PolicyGain {
    pub fn new(horizon: usize, alpha: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("policy horizon T must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if alpha * (horizon as f64) < 2.0 {
            return Err(Error::Config(format!(
                "alpha * T = {} < 2: the policy gain's denominator would decrease in t",
                alpha * horizon as f64
            )));
        }
        Ok(Self { horizon, alpha })
    }

    pub fn eval(&self, errors: u64, t: usize) -> Gain {
        policy_gain(errors, t, self.horizon, self.alpha)
    }

    /// The error bound this gain is associated with (`b_star = 2`, no burn-in).
    pub fn bound(&self) -> ErrorBound {
        ErrorBound::new(2.0, 0, self.alpha, self.horizon)
            .expect("alpha * T >= 2 was checked at construction")
    }
}

/// Cost-inference gain bound to a specific error bound function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceGain {
    bound: ErrorBound,
}

impl InferenceGain {
    pub fn new(bound: ErrorBound) -> Self {
        Self { bound }
    }

    pub fn bound(&self) -> &ErrorBound {
        &self.bound
    }

    pub fn eval(&self, errors: u64, t: usize) -> Gain {
        inference_gain(errors, self.bound.at(t))
    }
}

/// Brute-force check that a gain associated with `bound` keeps any error
/// process below the bound, provided saturation stops error growth.
///
/// First verifies the association property on the whole `(E, t)` grid that
/// matters, returning [`Error::NotAssociated`] if it fails. Then runs
/// `trials` random error processes: while the gain is below `saturation` the
/// process grows with a per-trial probability (every eighth trial grows
/// whenever allowed); a saturated gain freezes it. Returns `Ok(true)` iff
/// `E_t <= b(t) <= rate * T` held at every step of every trial.
pub fn lemma1_oracle<G>(
    bound: &ErrorBound,
    gain: G,
    saturation: Gain,
    trials: usize,
    seed: u64,
) -> Result<bool>
where
    G: Fn(u64, usize) -> Gain,
{
    let horizon = bound.horizon();
    let max_errors = bound.cap().ceil() as u64 + 2;
    for t in 0..=horizon {
        let b = bound.at(t);
        for errors in 0..=max_errors {
            if errors as f64 + 1.0 >= b && gain(errors, t) < saturation {
                return Err(Error::NotAssociated { errors, t, bound: b });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let p_grow = if trial % 8 == 0 { 1.0 } else { rng.random::<f64>() };
        let mut errors = 0u64;
        for t in 0..=horizon {
            let b = bound.at(t);
            if errors as f64 > b || b > bound.cap() {
                return Ok(false);
            }
            if t == horizon {
                break;
            }
            if gain(errors, t) < saturation && rng.random_bool(p_grow) {
                errors += 1;
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn linear_bound_examples() {
        let b = ErrorBound::new(2.0, 0, 0.05, 300).unwrap();
        assert_close(b.at(0), 2.0);
        assert_close(b.at(300), 15.0);
        assert_close(b.at(150), 2.0 + 13.0 * 0.5);

        let burn = ErrorBound::new(10.0, 40, 0.05, 291).unwrap();
        assert_eq!(burn.at(0), 0.0);
        assert_eq!(burn.at(40), 0.0);
        assert!(burn.at(41) >= 10.0);
    }

    #[test]
    fn bound_is_capped_past_horizon() {
        let b = ErrorBound::new(2.0, 0, 0.05, 300).unwrap();
        assert_eq!(b.at(10_000), b.cap());
    }

    #[test]
    fn bound_rejects_invalid_parameters() {
        assert!(ErrorBound::new(20.0, 0, 0.05, 300).is_err());
        assert!(ErrorBound::new(-1.0, 0, 0.05, 300).is_err());
        assert!(ErrorBound::new(2.0, 300, 0.05, 300).is_err());
        assert!(ErrorBound::new(2.0, 0, 1.5, 300).is_err());
        assert!(ErrorBound::new(0.0, 0, 0.0, 0).is_err());
    }

    #[test]
    fn policy_gain_examples() {
        assert_close(policy_gain(0, 0, 300, 0.05).value(), 1.0);
        assert_eq!(policy_gain(1, 0, 300, 0.05), Gain::Infinite);
        assert_eq!(policy_gain(100, 0, 300, 0.05), Gain::Infinite);
    }

    #[test]
    fn policy_gain_requires_alpha_t_at_least_two() {
        assert!(PolicyGain::new(300, 0.005).is_err());
        assert!(PolicyGain::new(40, 0.05).is_ok());
        assert!(PolicyGain::new(39, 0.05).is_err());
    }

    #[test]
    fn policy_gain_matches_generic_form_over_its_bound() {
        let g = PolicyGain::new(300, 0.05).unwrap();
        let b = g.bound();
        for t in 0..=300 {
            for e in 0..20u64 {
                let r = (e as f64 + 1.0) / b.at(t);
                let expected = if r < 1.0 {
                    (FRAC_PI_2 * r).tan()
                } else {
                    f64::INFINITY
                };
                let got = g.eval(e, t).value();
                if expected.is_infinite() {
                    assert!(got.is_infinite(), "t={t} e={e}");
                } else {
                    assert!((got - expected).abs() <= 1e-9 * expected.max(1.0));
                }
            }
        }
    }

    #[test]
    fn inference_gain_examples() {
        assert_close(inference_gain(4, 10.0).value(), 0.0);
        assert!((inference_gain(0, 10.0).value() - (-3.077_683_537_175_254)).abs() < 1e-9);
        assert_eq!(inference_gain(0, 0.0), Gain::Infinite);
        assert_eq!(inference_gain(9, 10.0), Gain::Infinite);
        assert_eq!(inference_gain(12, 10.0), Gain::Infinite);
    }

    #[test]
    fn gain_ordering_treats_infinite_as_top() {
        assert!(Gain::Infinite > Gain::Finite(1e300));
        assert!(Gain::Finite(-1.0) < Gain::Finite(0.0));
        assert!(Gain::Infinite >= Gain::Infinite);
    }

    #[test]
    fn lemma1_holds_for_policy_pair() {
        let g = PolicyGain::new(300, 0.05).unwrap();
        let ok = lemma1_oracle(&g.bound(), |e, t| g.eval(e, t), Gain::Infinite, 200, 7).unwrap();
        assert!(ok);
    }

    #[test]
    fn lemma1_degenerate_always_saturated_gain() {
        let b = ErrorBound::new(2.0, 0, 0.05, 300).unwrap();
        assert!(lemma1_oracle(&b, |_, _| Gain::Infinite, Gain::Infinite, 50, 1).unwrap());
    }

    #[test]
    fn lemma1_rejects_unassociated_gain() {
        let b = ErrorBound::new(2.0, 0, 0.05, 300).unwrap();
        let err = lemma1_oracle(&b, |_, _| Gain::Finite(0.0), Gain::Finite(100.0), 10, 1);
        assert!(matches!(err, Err(Error::NotAssociated { .. })));
    }
}
