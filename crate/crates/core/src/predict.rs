//! Linear-in-parameters predictors tracked by recursive least squares, the
//! feature maps that feed them, and the empirical quantile estimator.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::inventory::HistoryLog;

/// Recursive least squares with exponential forgetting.
///
/// With forgetting factor `lambda`, prior mean `theta_0` and prior covariance
/// `P_0`, after `n` updates `theta` minimizes
/// `sum_i lambda^(n-i) (y_i - phi_i' theta)^2 + lambda^n (theta - theta_0)' P_0^-1 (theta - theta_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rls {
    theta: DVector<f64>,
    cov: DMatrix<f64>,
    lambda: f64,
}

impl Rls {
    /// Starts from `theta0` with covariance `prior_scale * I`.
    pub fn new(theta0: Vec<f64>, prior_scale: f64, lambda: f64) -> Result<Self> {
        if theta0.is_empty() {
            return Err(Error::Config("RLS needs at least one parameter".into()));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(format!(
                "forgetting factor must lie in (0, 1], got {lambda}"
            )));
        }
        if !(prior_scale.is_finite() && prior_scale > 0.0) {
            return Err(Error::Config(format!(
                "prior covariance scale must be positive, got {prior_scale}"
            )));
        }
        if theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial parameters"));
        }
        let d = theta0.len();
        Ok(Self {
            theta: DVector::from_vec(theta0),
            cov: DMatrix::identity(d, d) * prior_scale,
            lambda,
        })
    }

    pub fn zeros(dim: usize, prior_scale: f64, lambda: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], prior_scale, lambda)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        self.theta.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn check_features(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: phi.len(),
            });
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(())
    }

    /// `phi' theta`.
    pub fn predict(&self, phi: &[f64]) -> Result<f64> {
        self.check_features(phi)?;
        Ok(phi.iter().zip(self.theta.iter()).map(|(a, b)| a * b).sum())
    }

    /// One RLS step on the pair `(phi, y)`.
    pub fn update(&mut self, phi: &[f64], y: f64) -> Result<()> {
        self.check_features(phi)?;
        if !y.is_finite() {
            return Err(Error::NonFinite("RLS target"));
        }
        let phi = DVector::from_column_slice(phi);
        let p_phi = &self.cov * &phi;
        let denom = self.lambda + phi.dot(&p_phi);
        let gain = &p_phi / denom;
        let innovation = y - phi.dot(&self.theta);
        self.theta += &gain * innovation;
        // P symmetric, so phi' P = (P phi)'
        self.cov -= &gain * p_phi.transpose();
        self.cov /= self.lambda;
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        self.cov = sym;
        Ok(())
    }

    /// True when the covariance admits a Cholesky factorization.
    pub fn covariance_is_positive_definite(&self) -> bool {
        self.cov.clone().cholesky().is_some()
    }
}

/// Declarative feature maps over the [`HistoryLog`].
///
/// Lags that reach before the start of the log are filled with zeros.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// `[1, W_{t-1}, ..., W_{t-dW}, X_t, ..., X_{t-dX}]`.
    Arx {
        demand_lags: usize,
        stock_lags: usize,
    },
    /// `[1, C^H_{t-H-order+1}, ..., C^H_{t-H}]` followed by a
    /// `(sin(2 pi t / p), cos(2 pi t / p))` pair for each period `p`.
    CostAr { order: usize, periods: Vec<f64> },
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Arx {
                demand_lags,
                stock_lags,
            } => 1 + demand_lags + stock_lags + 1,
            FeatureMap::CostAr { order, periods } => 1 + order + 2 * periods.len(),
        }
    }

    pub fn features(&self, log: &HistoryLog, t: i64) -> Vec<f64> {
        let mut phi = Vec::with_capacity(self.dim());
        phi.push(1.0);
        match self {
            FeatureMap::Arx {
                demand_lags,
                stock_lags,
            } => {
                for lag in 1..=*demand_lags as i64 {
                    phi.push(log.demand(t - lag).unwrap_or(0.0));
                }
                for lag in 0..=*stock_lags as i64 {
                    phi.push(log.stock(t - lag).unwrap_or(0.0));
                }
            }
            FeatureMap::CostAr { order, periods } => {
                let newest = t - log.horizon() as i64;
                for k in (0..*order as i64).rev() {
                    phi.push(log.horizon_cost(newest - k).unwrap_or(0.0));
                }
                for &p in periods {
                    let angle = TAU * t as f64 / p;
                    phi.push(angle.sin());
                    phi.push(angle.cos());
                }
            }
        }
        phi
    }
}

/// `inf { p : #{x <= p} / n >= level }` over an ascending slice.
///
/// This is the `ceil(level * n)`-th smallest element for `level > 0` and the
/// minimum for `level = 0`. `None` when the slice is empty.
pub fn quantile_of_sorted(sorted: &[f64], level: f64) -> Option<f64> {
    assert!(
        (0.0..=1.0).contains(&level),
        "quantile level must lie in [0, 1], got {level}"
    );
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let reaches = |k: usize| k as f64 / n as f64 >= level;
    // ceil(level * n) may be off by one under rounding; settle on the exact k
    let mut k = ((level * n as f64).ceil() as usize).clamp(1, n);
    while k > 1 && reaches(k - 1) {
        k -= 1;
    }
    while k < n && !reaches(k) {
        k += 1;
    }
    Some(sorted[k - 1])
}

/// Empirical quantile of an unsorted sample; see [`quantile_of_sorted`].
pub fn empirical_quantile(values: &[f64], level: f64) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_of_sorted(&sorted, level)
}

/// A growing sample kept in ascending order so quantiles are O(1) to read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, value: f64) {
        let at = self.values.partition_point(|v| v.total_cmp(&value).is_le());
        self.values.insert(at, value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn quantile(&self, level: f64) -> Option<f64> {
        quantile_of_sorted(&self.values, level)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Order-up-to policy on the empirical `(1 - alpha)`-quantile of past demand,
/// capped so the stock never exceeds `w_max`. With no history it orders up to
/// capacity.
pub fn baseline_quantile_order(demand_history: &[f64], alpha: f64, stock: f64, w_max: f64) -> f64 {
    let room = (w_max - stock).max(0.0);
    match empirical_quantile(demand_history, 1.0 - alpha) {
        None => room,
        Some(q) => (q - stock).max(0.0).min(room),
    }
}
