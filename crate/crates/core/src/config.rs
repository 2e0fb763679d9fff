//! Run configuration, scenario presets and flat key/value overrides.
//!
//! A configuration is resolved in three layers: the scenario preset, then the
//! keys of an optional TOML file, then command-line overrides. Every layer
//! uses the same flat key names, and unknown keys are rejected by name.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::ErrorBound;
use crate::error::{Error, Result};
use crate::ingest::{DEFAULT_COLUMN, SAMPLES_PER_DAY};
use crate::inventory::cost_ceiling;

pub use crate::costinf::InferenceMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Periodic,
    Sir,
    Feedback,
    Adversarial,
    Elec2,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Periodic,
        Scenario::Sir,
        Scenario::Feedback,
        Scenario::Adversarial,
        Scenario::Elec2,
    ];

    pub const SYNTHETIC: [Scenario; 3] = [Scenario::Periodic, Scenario::Sir, Scenario::Feedback];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Periodic => "periodic",
            Scenario::Sir => "sir",
            Scenario::Feedback => "feedback",
            Scenario::Adversarial => "adversarial",
            Scenario::Elec2 => "elec2",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Periodic => "seasonal sine demand with Gaussian shocks",
            Scenario::Sir => "spiking demand proportional to a stochastic SIR infected population",
            Scenario::Feedback => "demand driven by the previous stock level plus chi-squared noise",
            Scenario::Adversarial => "demand that empties the stock whenever the placed order allows it",
            Scenario::Elec2 => "NSW electricity demand replayed from the Elec2 dataset",
        }
    }

    pub fn requires_data(self) -> bool {
        matches!(self, Scenario::Elec2)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scenario `{s}` (expected periodic, sir, feedback, adversarial or elec2)"
                ))
            })
    }
}

/// Which order rule drives the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Certified,
    /// Predicted shortfall only; no service-level guarantee.
    Uncertified,
    /// Always restock to capacity.
    Trivial,
}

/// All parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Number of controlled steps `T`.
    pub steps: usize,
    /// Cost horizon `H`.
    pub cost_horizon: usize,
    /// Tolerated rate of critical stock events.
    pub alpha: f64,
    /// Tolerated rate of cost-interval miscoverage.
    pub beta: f64,
    /// Demand upper bound, also the stock capacity.
    pub w_max: f64,
    pub critical_stock: f64,
    pub holding_cost: f64,
    /// Length of the pretraining window run under the quantile baseline.
    pub history: usize,
    pub seed: u64,
    /// Stock at the start of the pretraining window.
    pub initial_stock: f64,
    pub demand_lags: usize,
    pub stock_lags: usize,
    pub demand_forgetting: f64,
    pub cost_forgetting: f64,
    pub cost_ar_order: usize,
    /// Fourier periods (in steps) added to the cost features.
    pub fourier_periods: Vec<f64>,
    /// Steps during which the cost bound is zero (full intervals).
    pub inference_burn_in: usize,
    /// Cost bound value right after burn-in; defaults to `cost_horizon`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inference_initial_bound: Option<f64>,
    /// Initial RLS covariance is `prior_scale * I`.
    pub prior_scale: f64,
    pub policy: PolicyKind,
    pub inference: InferenceMode,
    /// `[S, I, R]` at the start of the SIR scenario.
    pub sir_initial: [f64; 3],
    pub adversarial_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub column: String,
    pub out: PathBuf,
}

impl RunConfig {
    /// The preset for a scenario.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let synthetic = RunConfig {
            scenario,
            steps: 300,
            cost_horizon: 10,
            alpha: 0.05,
            beta: 0.05,
            w_max: 50.0,
            critical_stock: 0.0,
            holding_cost: 1.0,
            history: 150,
            seed: 0,
            initial_stock: 0.0,
            demand_lags: 2,
            stock_lags: 2,
            demand_forgetting: 0.99,
            cost_forgetting: 0.99,
            cost_ar_order: 5,
            fourier_periods: Vec::new(),
            inference_burn_in: 40,
            inference_initial_bound: None,
            prior_scale: 100.0,
            policy: PolicyKind::Certified,
            inference: InferenceMode::Certified,
            sir_initial: [0.999, 0.001, 0.0],
            adversarial_margin: 1e-3,
            data: None,
            column: DEFAULT_COLUMN.to_string(),
            out: PathBuf::from("out"),
        };
        match scenario {
            Scenario::Periodic | Scenario::Adversarial => synthetic,
            Scenario::Sir => RunConfig {
                cost_forgetting: 0.995,
                inference_burn_in: 50,
                ..synthetic
            },
            Scenario::Feedback => RunConfig {
                cost_forgetting: 0.95,
                inference_burn_in: 30,
                ..synthetic
            },
            Scenario::Elec2 => {
                let day = SAMPLES_PER_DAY;
                let hour = day as f64 / 24.0;
                RunConfig {
                    steps: 12 * 7 * day,
                    cost_horizon: day,
                    history: 3 * day,
                    w_max: 1.0,
                    demand_lags: day,
                    stock_lags: 0,
                    demand_forgetting: 0.99,
                    cost_forgetting: 0.995,
                    cost_ar_order: 24,
                    fourier_periods: vec![3.0 * hour, 6.0 * hour, 12.0 * hour, 24.0 * hour, 7.0 * day as f64],
                    inference_burn_in: 10 * day,
                    ..synthetic
                }
            }
        }
    }

    /// Layers a flat key/value table over the preset of the scenario named in
    /// the table (or `fallback` when it names none), then validates.
    pub fn resolve(fallback: Scenario, overrides: &toml::Table) -> Result<Self> {
        let scenario = match overrides.get("scenario") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(other) => {
                return Err(Error::Config(format!("`scenario` must be a string, got {other}")))
            }
            None => fallback,
        };
        let base = RunConfig::for_scenario(scenario);
        let mut table = toml::Table::try_from(&base)
            .map_err(|e| Error::Config(format!("cannot serialize preset: {e}")))?;
        for (key, value) in overrides {
            table.insert(key.clone(), value.clone());
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Parses a flat TOML document of overrides.
    pub fn parse_overrides(text: &str) -> Result<toml::Table> {
        text.parse::<toml::Table>()
            .map_err(|e| Error::Config(e.message().to_string()))
    }

    /// `C_max = H * w_max * (1 + h)`.
    pub fn cost_ceiling(&self) -> f64 {
        cost_ceiling(self.cost_horizon, self.w_max, self.holding_cost)
    }

    /// Number of emitted cost intervals, `T - H + 1`.
    pub fn interval_count(&self) -> usize {
        self.steps + 1 - self.cost_horizon
    }

    /// Bound on critical stock events: `b_star = 2`, no burn-in, rate `alpha`.
    pub fn policy_bound(&self) -> Result<ErrorBound> {
        ErrorBound::new(2.0, 0, self.alpha, self.steps)
    }

    /// Bound on the inference error process over `T - H + 1` steps.
    pub fn inference_bound(&self) -> Result<ErrorBound> {
        ErrorBound::new(
            self.inference_initial_bound
                .unwrap_or(self.cost_horizon as f64),
            self.inference_burn_in,
            self.beta,
            self.interval_count(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.steps == 0 {
            return fail("steps must be >= 1".into());
        }
        if self.cost_horizon < 2 {
            return fail(format!("cost_horizon must be >= 2, got {}", self.cost_horizon));
        }
        if self.cost_horizon > self.steps {
            return fail(format!(
                "cost_horizon {} exceeds steps {}",
                self.cost_horizon, self.steps
            ));
        }
        for (name, rate) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&rate) {
                return fail(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        if !(self.w_max.is_finite() && self.w_max > 0.0) {
            return fail(format!("w_max must be positive, got {}", self.w_max));
        }
        if self.alpha * (self.steps as f64) < 2.0 {
            return fail(format!(
                "alpha * steps must be >= 2, got {}",
                self.alpha * self.steps as f64
            ));
        }
        if !(self.critical_stock.is_finite() && self.critical_stock >= 0.0) {
            return fail(format!("critical_stock must be >= 0, got {}", self.critical_stock));
        }
        if !(self.holding_cost.is_finite() && self.holding_cost > 0.0) {
            return fail(format!("holding_cost must be > 0, got {}", self.holding_cost));
        }
        if !(0.0..=self.w_max).contains(&self.initial_stock) {
            return fail(format!(
                "initial_stock must lie in [0, w_max], got {}",
                self.initial_stock
            ));
        }
        for (name, lambda) in [
            ("demand_forgetting", self.demand_forgetting),
            ("cost_forgetting", self.cost_forgetting),
        ] {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return fail(format!("{name} must lie in (0, 1], got {lambda}"));
            }
        }
        if !(self.prior_scale.is_finite() && self.prior_scale > 0.0) {
            return fail(format!("prior_scale must be > 0, got {}", self.prior_scale));
        }
        if let Some(p) = self.fourier_periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return fail(format!("fourier periods must be positive, got {p}"));
        }
        if !(self.adversarial_margin > 0.0 && self.adversarial_margin < self.w_max) {
            return fail(format!(
                "adversarial_margin must lie in (0, w_max), got {}",
                self.adversarial_margin
            ));
        }
        if self.sir_initial.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return fail("sir_initial fractions must be finite and >= 0".into());
        }
        self.policy_bound()?;
        self.inference_bound()?;
        Ok(())
    }
}
