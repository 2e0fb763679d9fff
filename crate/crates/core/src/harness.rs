//! The closed-loop simulation.
//!
//! Per step `t = 0, 1, ..., T - 1`:
//!
//! 1. observe `X_t`; for `t >= 1` count a critical event if `X_t <= x_c`;
//! 2. resolve the cost interval emitted at `t - H` (its last period cost
//!    arrived at the end of step `t - 1`) and feed the cost model;
//! 3. predict demand and place the order;
//! 4. for `t <= T - H`, emit the adjusted interval for `C^H_t`;
//! 5. draw `W_t`, advance the stock and record `c_t = U_t + h X_t`;
//! 6. update the demand model with `W_t`.
//!
//! A final observation at `t = T` counts the last critical event and resolves
//! the interval for `T - H`. Before `t = 0` the demand model is pretrained
//! over `T_hist` steps run under the empirical-quantile baseline policy.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::bounds::ErrorBound;
use crate::config::{PolicyKind, RunConfig, Scenario};
use crate::costinf::{CostInference, CostInterval};
use crate::demand::{Adversarial, DemandContext, DemandSource, Feedback, Periodic, Replay, Sir, SirState};
use crate::error::{Error, Result};
use crate::ingest::{load_elec2, split_windows};
use crate::inventory::{period_cost, step_dynamics, HistoryLog};
use crate::policy::{trivial_order, uncertified_order, CertifiedPolicy};
use crate::predict::{baseline_quantile_order, FeatureMap, Rls};

/// One row of the trajectory. Row `T` carries only the final stock and error
/// counts; interval fields exist for `t <= T - H`, inference error fields for
/// `t <= T - H + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub stock: f64,
    pub order: Option<f64>,
    pub demand: Option<f64>,
    pub cost: Option<f64>,
    pub policy_errors: u64,
    pub policy_bound: f64,
    pub horizon_cost: Option<f64>,
    pub interval: Option<CostInterval>,
    pub inference_errors: Option<u64>,
    pub inference_bound: Option<f64>,
}

pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "t",
    "stock",
    "order",
    "demand",
    "cost",
    "policy_errors",
    "policy_bound",
    "horizon_cost",
    "interval_lo",
    "interval_hi",
    "interval_full",
    "interval_empty",
    "inference_errors",
    "inference_bound",
];

/// Aggregates over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub intervals: usize,
    pub alpha: f64,
    pub beta: f64,
    pub critical_events: u64,
    pub service_level: f64,
    pub miscoverages: u64,
    pub coverage: f64,
    pub mean_cost: f64,
    pub mean_interval_width: f64,
    pub full_intervals: usize,
    pub empty_intervals: usize,
    pub max_policy_errors: u64,
    pub max_inference_errors: u64,
    pub max_horizon_cost: f64,
    pub cost_ceiling: f64,
    pub policy_bound_held: bool,
    pub inference_bound_held: bool,
    pub cost_bound_held: bool,
}

/// `count <= rate * n`, i.e. a fraction of at least `1 - rate` succeeded.
pub fn within_rate(count: u64, n: usize, rate: f64) -> bool {
    count as f64 <= rate * n as f64
}

impl Summary {
    pub fn service_certified(&self) -> bool {
        within_rate(self.critical_events, self.steps, self.alpha)
    }

    pub fn coverage_certified(&self) -> bool {
        within_rate(self.miscoverages, self.intervals, self.beta)
    }

    /// Both boxed criteria plus the error-process and cost bounds.
    pub fn certified(&self) -> bool {
        self.service_certified()
            && self.coverage_certified()
            && self.policy_bound_held
            && self.inference_bound_held
            && self.cost_bound_held
    }

    pub fn to_metrics(&self) -> BTreeMap<&'static str, Value> {
        let flag = |b: bool| Value::from(u8::from(b));
        BTreeMap::from([
            ("steps", Value::from(self.steps)),
            ("intervals", Value::from(self.intervals)),
            ("alpha", Value::from(self.alpha)),
            ("beta", Value::from(self.beta)),
            ("critical_events", Value::from(self.critical_events)),
            ("service_level", Value::from(self.service_level)),
            ("miscoverages", Value::from(self.miscoverages)),
            ("coverage", Value::from(self.coverage)),
            ("mean_cost", Value::from(self.mean_cost)),
            ("mean_interval_width", Value::from(self.mean_interval_width)),
            ("full_intervals", Value::from(self.full_intervals)),
            ("empty_intervals", Value::from(self.empty_intervals)),
            ("max_policy_errors", Value::from(self.max_policy_errors)),
            ("max_inference_errors", Value::from(self.max_inference_errors)),
            ("max_horizon_cost", Value::from(self.max_horizon_cost)),
            ("cost_ceiling", Value::from(self.cost_ceiling)),
            ("policy_bound_held", flag(self.policy_bound_held)),
            ("inference_bound_held", flag(self.inference_bound_held)),
            ("cost_bound_held", flag(self.cost_bound_held)),
            ("service_certified", flag(self.service_certified())),
            ("coverage_certified", flag(self.coverage_certified())),
            ("certified", flag(self.certified())),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub records: Vec<StepRecord>,
    pub summary: Summary,
    pub log: HistoryLog,
}

fn demand_features(config: &RunConfig) -> FeatureMap {
    FeatureMap::Arx {
        demand_lags: config.demand_lags,
        stock_lags: config.stock_lags,
    }
}

/// Runs `T_hist` steps before `t = 0` under the quantile baseline, tracking
/// the demand model on them. The cost model is not touched.
pub fn pretrain(config: &RunConfig, source: &mut dyn DemandSource) -> Result<(Rls, HistoryLog)> {
    let features = demand_features(config);
    let mut model = Rls::zeros(features.dim(), config.prior_scale, config.demand_forgetting)?;
    let origin = -(config.history as i64);
    let mut log = HistoryLog::new(origin, config.initial_stock, config.cost_horizon)?;
    for t in origin..0 {
        let mut step = |log: &mut HistoryLog, model: &mut Rls| -> Result<()> {
            let stock = log.current_stock();
            let order = baseline_quantile_order(log.demands(), config.alpha, stock, config.w_max);
            let phi = features.features(log, t);
            let demand = source.next_demand(&DemandContext { t, stock, order })?;
            let next = step_dynamics(stock, order, demand)?;
            let cost = period_cost(order, stock, config.holding_cost)?;
            log.record(order, demand, cost, next)?;
            model.update(&phi, demand)
        };
        step(&mut log, &mut model).map_err(|e| e.at_step(t))?;
    }
    Ok((model, log))
}

/// Builds the demand source a scenario calls for.
pub fn demand_source(config: &RunConfig) -> Result<Box<dyn DemandSource>> {
    let seed = config.seed;
    Ok(match config.scenario {
        Scenario::Periodic => Box::new(Periodic::new(seed)),
        Scenario::Sir => {
            let [s, i, r] = config.sir_initial;
            Box::new(Sir::new(
                seed,
                SirState {
                    susceptible: s,
                    infected: i,
                    removed: r,
                },
            ))
        }
        Scenario::Feedback => Box::new(Feedback::new(seed)),
        Scenario::Adversarial => Box::new(Adversarial::new(seed, config.w_max, config.adversarial_margin)?),
        Scenario::Elec2 => {
            let path = config
                .data
                .as_ref()
                .ok_or_else(|| Error::Config("scenario elec2 requires a data file (--data PATH)".into()))?;
            let series = load_elec2(path, &config.column)?;
            let (_, evaluation) = split_windows(&series.values, config.history, config.steps)?;
            Box::new(Replay::new(evaluation.to_vec(), config.history as i64))
        }
    })
}

/// Runs the configured scenario with its own demand source.
pub fn run_scenario(config: &RunConfig) -> Result<RunResult> {
    let mut source = demand_source(config)?;
    run(config, source.as_mut())
}

/// Runs one closed-loop simulation against `source`.
pub fn run(config: &RunConfig, source: &mut dyn DemandSource) -> Result<RunResult> {
    config.validate()?;
    let steps = config.steps;
    let horizon = config.cost_horizon;
    let last_interval = steps - horizon;
    let intervals = config.interval_count();
    let c_max = config.cost_ceiling();

    let (mut demand_model, mut log) = pretrain(config, source)?;
    let features = demand_features(config);
    let policy_bound: ErrorBound = config.policy_bound()?;
    let mut policy = CertifiedPolicy::new(steps, config.alpha, config.critical_stock, config.w_max)?;

    let cost_features = FeatureMap::CostAr {
        order: config.cost_ar_order,
        periods: config.fourier_periods.clone(),
    };
    let mut theta0 = vec![0.0; cost_features.dim()];
    theta0[0] = c_max / 2.0;
    let cost_model = Rls::new(theta0, config.prior_scale, config.cost_forgetting)?;
    let mut inference = CostInference::new(
        cost_features,
        cost_model,
        crate::bounds::InferenceGain::new(config.inference_bound()?),
        horizon,
        config.beta,
        c_max,
        config.inference,
    )?;

    let mut records = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        let mut step = || -> Result<StepRecord> {
            let stock = log.current_stock();
            if t >= 1 {
                policy.observe(stock);
            }
            inference.resolve_due(&log, t)?;
            let (inference_errors, inference_bound) = if t <= intervals {
                (Some(inference.errors()), Some(inference.bound_at(t)))
            } else {
                (None, None)
            };
            let mut record = StepRecord {
                t,
                stock,
                order: None,
                demand: None,
                cost: None,
                policy_errors: policy.errors(),
                policy_bound: policy_bound.at(t),
                horizon_cost: None,
                interval: None,
                inference_errors,
                inference_bound,
            };
            if t == steps {
                return Ok(record);
            }

            let phi = features.features(&log, t as i64);
            let w_hat = demand_model.predict(&phi)?;
            let order = match config.policy {
                PolicyKind::Certified => policy.order(w_hat, stock, t),
                PolicyKind::Uncertified => uncertified_order(w_hat, stock).min(config.w_max - stock),
                PolicyKind::Trivial => trivial_order(stock, config.w_max),
            };
            if t <= last_interval {
                record.interval = Some(inference.emit(&log, t)?.interval);
            }
            let demand = source.next_demand(&DemandContext {
                t: t as i64,
                stock,
                order,
            })?;
            let next = step_dynamics(stock, order, demand)?;
            let cost = period_cost(order, stock, config.holding_cost)?;
            log.record(order, demand, cost, next)?;
            demand_model.update(&phi, demand)?;

            record.order = Some(order);
            record.demand = Some(demand);
            record.cost = Some(cost);
            Ok(record)
        };
        records.push(step().map_err(|e| e.at_step(t as i64))?);
    }

    for record in records.iter_mut().take(last_interval + 1) {
        record.horizon_cost = log.horizon_cost(record.t as i64);
    }

    let resolved = inference.ledger().resolved();
    if resolved.len() != intervals {
        return Err(Error::Precondition(format!(
            "resolved {} of {intervals} cost intervals",
            resolved.len()
        )));
    }
    let summary = summarize(config, &records, resolved, &log, &policy_bound);
    Ok(RunResult {
        config: config.clone(),
        records,
        summary,
        log,
    })
}

fn summarize(
    config: &RunConfig,
    records: &[StepRecord],
    resolved: &[bool],
    log: &HistoryLog,
    policy_bound: &ErrorBound,
) -> Summary {
    let steps = config.steps;
    let intervals = resolved.len();
    let critical_events = records.last().map_or(0, |r| r.policy_errors);
    let miscoverages = resolved.iter().filter(|c| !**c).count() as u64;
    let issued: Vec<&CostInterval> = records.iter().filter_map(|r| r.interval.as_ref()).collect();
    let costs: Vec<f64> = records.iter().filter_map(|r| r.cost).collect();
    let c_max = config.cost_ceiling();
    let max_horizon_cost = log.horizon_costs().iter().copied().fold(0.0, f64::max);

    let policy_bound_held = records.iter().all(|r| {
        r.policy_errors as f64 <= r.policy_bound && r.policy_bound <= policy_bound.cap()
    });
    let inference_cap = config.beta * intervals as f64;
    let inference_bound_held = records.iter().all(|r| match (r.inference_errors, r.inference_bound) {
        (Some(e), Some(b)) => e as f64 <= b && b <= inference_cap,
        _ => true,
    });

    Summary {
        steps,
        intervals,
        alpha: config.alpha,
        beta: config.beta,
        critical_events,
        service_level: (steps as u64 - critical_events) as f64 / steps as f64,
        miscoverages,
        coverage: (intervals as u64 - miscoverages) as f64 / intervals as f64,
        mean_cost: costs.iter().sum::<f64>() / costs.len() as f64,
        mean_interval_width: issued.iter().map(|i| i.width()).sum::<f64>() / issued.len() as f64,
        full_intervals: issued.iter().filter(|i| i.full).count(),
        empty_intervals: issued.iter().filter(|i| i.empty).count(),
        max_policy_errors: records.iter().map(|r| r.policy_errors).max().unwrap_or(0),
        max_inference_errors: records.iter().filter_map(|r| r.inference_errors).max().unwrap_or(0),
        max_horizon_cost,
        cost_ceiling: c_max,
        policy_bound_held,
        inference_bound_held,
        cost_bound_held: log.horizon_costs().iter().all(|&c| (0.0..=c_max).contains(&c)),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl RunResult {
    /// Writes the trajectory as CSV with the [`TRAJECTORY_COLUMNS`] header.
    pub fn write_trajectory<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Csv {
            path: PathBuf::from("trajectory.csv"),
            source: e,
        };
        out.write_record(TRAJECTORY_COLUMNS).map_err(to_err)?;
        for r in &self.records {
            let flag = |b: bool| if b { "1" } else { "0" }.to_string();
            out.write_record([
                r.t.to_string(),
                r.stock.to_string(),
                opt(r.order),
                opt(r.demand),
                opt(r.cost),
                r.policy_errors.to_string(),
                r.policy_bound.to_string(),
                opt(r.horizon_cost),
                opt(r.interval.map(|i| i.lo)),
                opt(r.interval.map(|i| i.hi)),
                opt(r.interval.map(|i| flag(i.full))),
                opt(r.interval.map(|i| flag(i.empty))),
                opt(r.inference_errors),
                opt(r.inference_bound),
            ])
            .map_err(to_err)?;
        }
        out.flush().map_err(|source| Error::Io {
            path: PathBuf::from("trajectory.csv"),
            source,
        })
    }

    pub fn trajectory_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_trajectory(&mut buf)?;
        Ok(buf)
    }

    pub fn metrics_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary.to_metrics()).expect("metrics are plain numbers")
    }

    /// Writes `trajectory.csv` and `metrics.json` into `dir`, creating it.
    pub fn write_outputs(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let trajectory = dir.join("trajectory.csv");
        fs::write(&trajectory, self.trajectory_csv()?).map_err(io(&trajectory))?;
        let metrics = dir.join("metrics.json");
        fs::write(&metrics, self.metrics_json() + "\n").map_err(io(&metrics))?;
        Ok((trajectory, metrics))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(f64);

    impl DemandSource for Constant {
        fn next_demand(&mut self, _ctx: &DemandContext) -> Result<f64> {
            Ok(self.0)
        }
    }

    fn small(scenario: Scenario) -> RunConfig {
        RunConfig {
            steps: 120,
            history: 30,
            inference_burn_in: 10,
            cost_horizon: 5,
            alpha: 0.1,
            beta: 0.1,
            ..RunConfig::for_scenario(scenario)
        }
    }

    #[test]
    fn pretrain_without_history_leaves_prior() {
        let config = RunConfig {
            history: 0,
            ..RunConfig::for_scenario(Scenario::Periodic)
        };
        let (model, log) = pretrain(&config, &mut Constant(5.0)).unwrap();
        assert!(model.theta().iter().all(|&v| v == 0.0));
        assert!(log.is_empty());
    }

    #[test]
    fn pretrain_log_length_matches_window() {
        let config = RunConfig::for_scenario(Scenario::Periodic);
        let (_, log) = pretrain(&config, &mut Periodic::new(1)).unwrap();
        assert_eq!(log.len(), 150);
        assert_eq!(log.now(), 0);
    }

    #[test]
    fn pretrain_learns_constant_demand() {
        let config = RunConfig {
            history: 400,
            demand_forgetting: 1.0,
            ..RunConfig::for_scenario(Scenario::Periodic)
        };
        let (model, log) = pretrain(&config, &mut Constant(5.0)).unwrap();
        let phi = demand_features(&config).features(&log, 0);
        assert!((model.predict(&phi).unwrap() - 5.0).abs() < 1e-3);
    }

    #[test]
    fn trivial_policy_never_stocks_out() {
        let config = RunConfig {
            policy: PolicyKind::Trivial,
            ..small(Scenario::Adversarial)
        };
        let result = run_scenario(&config).unwrap();
        assert_eq!(result.summary.critical_events, 0);
        assert_eq!(result.summary.service_level, 1.0);
        assert!(result.records[1..].iter().all(|r| r.stock > 0.0));
    }

    #[test]
    fn trajectory_shape() {
        let config = small(Scenario::Periodic);
        let result = run_scenario(&config).unwrap();
        assert_eq!(result.records.len(), config.steps + 1);
        let last = result.records.last().unwrap();
        assert!(last.order.is_none() && last.interval.is_none());
        let emitted = result.records.iter().filter(|r| r.interval.is_some()).count();
        assert_eq!(emitted, config.interval_count());
        assert!(result.records[..=config.steps - config.cost_horizon]
            .iter()
            .all(|r| r.horizon_cost.is_some()));
        // burn-in intervals are full
        assert!(result.records[..=10].iter().all(|r| r.interval.unwrap().full));
    }

    #[test]
    fn small_runs_are_certified() {
        for scenario in [Scenario::Periodic, Scenario::Sir, Scenario::Feedback, Scenario::Adversarial] {
            for seed in 0..5 {
                let config = RunConfig {
                    seed,
                    ..small(scenario)
                };
                let s = run_scenario(&config).unwrap().summary;
                assert!(s.certified(), "{scenario} seed {seed}: {s:?}");
            }
        }
    }

    #[test]
    fn csv_header_and_row_count() {
        let result = run_scenario(&small(Scenario::Sir)).unwrap();
        let text = String::from_utf8(result.trajectory_csv().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS.join(","));
        assert_eq!(lines.count(), 121);
    }

    #[test]
    fn elec2_without_data_is_an_error() {
        let config = RunConfig::for_scenario(Scenario::Elec2);
        assert!(matches!(run_scenario(&config), Err(Error::Config(_))));
    }
}
