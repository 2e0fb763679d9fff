//! Single-item stock dynamics, per-period operating cost and the history log.

use crate::error::{Error, Result};

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Precondition(format!("{name} must be finite, got {v}")));
    }
    if v < 0.0 {
        return Err(Error::Precondition(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// Advances the stock by one period: `max(0, stock + order - demand)`.
///
/// Unmet demand is lost, there are no backorders.
pub fn step_dynamics(stock: f64, order: f64, demand: f64) -> Result<f64> {
    check_nonneg("stock", stock)?;
    check_nonneg("order", order)?;
    check_nonneg("demand", demand)?;
    Ok((stock + order - demand).max(0.0))
}

/// Purchase plus holding cost of one period, `order + holding * stock`.
pub fn period_cost(order: f64, stock: f64, holding: f64) -> Result<f64> {
    check_nonneg("order", order)?;
    check_nonneg("stock", stock)?;
    if !(holding.is_finite() && holding > 0.0) {
        return Err(Error::Precondition(format!(
            "holding cost rate must be > 0, got {holding}"
        )));
    }
    Ok(order + holding * stock)
}

/// Sum of exactly `horizon` consecutive period costs.
pub fn horizon_cost(costs: &[f64], horizon: usize) -> Result<f64> {
    if costs.len() != horizon {
        return Err(Error::HorizonLength {
            expected: horizon,
            got: costs.len(),
        });
    }
    for &c in costs {
        check_nonneg("period cost", c)?;
    }
    Ok(costs.iter().sum())
}

/// A critical stock event: the stock is at or below the safety threshold.
pub fn is_critical(stock: f64, threshold: f64) -> bool {
    stock <= threshold
}

/// A priori upper bound on the `H`-step operating cost, `H * w_max * (1 + h)`.
pub fn cost_ceiling(horizon: usize, w_max: f64, holding: f64) -> f64 {
    horizon as f64 * w_max * (1.0 + holding)
}

/// Append-only record of the information available to the controller.
///
/// Times are signed so the pretraining window can live at negative indices;
/// `origin` is the time of the first stock entry. The stock vector is always
/// one entry ahead of the order/demand/cost vectors: after `n` recorded steps
/// it holds `X_origin ..= X_{origin + n}`.
///
/// Horizon costs `C^H_tau = c_tau + ... + c_{tau+H-1}` are kept only for
/// `tau >= 0` and appear as soon as their last period cost is recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryLog {
    origin: i64,
    horizon: usize,
    stock: Vec<f64>,
    order: Vec<f64>,
    demand: Vec<f64>,
    cost: Vec<f64>,
    horizon_cost: Vec<f64>,
}

impl HistoryLog {
    pub fn new(origin: i64, initial_stock: f64, horizon: usize) -> Result<Self> {
        check_nonneg("initial stock", initial_stock)?;
        if horizon == 0 {
            return Err(Error::Precondition("cost horizon must be >= 1".into()));
        }
        Ok(Self {
            origin,
            horizon,
            stock: vec![initial_stock],
            order: Vec::new(),
            demand: Vec::new(),
            cost: Vec::new(),
            horizon_cost: Vec::new(),
        })
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The current time, i.e. the index of the latest stock entry.
    pub fn now(&self) -> i64 {
        self.origin + self.order.len() as i64
    }

    pub fn current_stock(&self) -> f64 {
        *self.stock.last().expect("log always holds the initial stock")
    }

    fn index(&self, t: i64) -> Option<usize> {
        usize::try_from(t - self.origin).ok()
    }

    pub fn stock(&self, t: i64) -> Option<f64> {
        self.index(t).and_then(|i| self.stock.get(i).copied())
    }

    pub fn order(&self, t: i64) -> Option<f64> {
        self.index(t).and_then(|i| self.order.get(i).copied())
    }

    pub fn demand(&self, t: i64) -> Option<f64> {
        self.index(t).and_then(|i| self.demand.get(i).copied())
    }

    pub fn cost(&self, t: i64) -> Option<f64> {
        self.index(t).and_then(|i| self.cost.get(i).copied())
    }

    /// Realized `C^H_tau`, if every period cost in its window is recorded.
    pub fn horizon_cost(&self, tau: i64) -> Option<f64> {
        usize::try_from(tau)
            .ok()
            .and_then(|i| self.horizon_cost.get(i).copied())
    }

    pub fn horizon_costs(&self) -> &[f64] {
        &self.horizon_cost
    }

    /// Demands recorded so far, oldest first.
    pub fn demands(&self) -> &[f64] {
        &self.demand
    }

    /// Records the order, demand and cost of the current period together with
    /// the resulting next stock level.
    pub fn record(&mut self, order: f64, demand: f64, cost: f64, next_stock: f64) -> Result<()> {
        check_nonneg("order", order)?;
        check_nonneg("demand", demand)?;
        check_nonneg("cost", cost)?;
        check_nonneg("stock", next_stock)?;
        let t = self.now();
        self.order.push(order);
        self.demand.push(demand);
        self.cost.push(cost);
        self.stock.push(next_stock);

        let tau = t - self.horizon as i64 + 1;
        if tau >= 0 {
            debug_assert_eq!(tau as usize, self.horizon_cost.len());
            let end = self.cost.len();
            let window = &self.cost[end - self.horizon..end];
            self.horizon_cost.push(horizon_cost(window, self.horizon)?);
        }
        Ok(())
    }

    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
