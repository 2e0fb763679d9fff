//! Inventory control with certified service levels.
//!
//! The crate provides an order policy that wraps any demand predictor with a
//! nonlinear integral action on the count of critical stock events, so that the
//! fraction of non-critical periods over a horizon of `T` steps is at least
//! `1 - alpha` for *every* bounded demand sequence. A companion engine emits
//! online prediction intervals for the policy's `H`-step operating cost whose
//! long-run coverage is at least `1 - beta`, again for every demand sequence.
//!
//! Module map:
//!
//! - [`inventory`]: stock dynamics, period cost and the append-only history log.
//! - [`bounds`]: error bound functions and their associated gains.
//! - [`predict`]: recursive least squares, feature maps, empirical quantiles.
//! - [`policy`]: the certified order rule plus uncertified baselines.
//! - [`costinf`]: adjusted cost intervals and miscoverage accounting.
//! - [`demand`]: seeded synthetic demand generators.
//! - [`ingest`]: Elec2 loading and windowing.
//! - [`config`]: run configuration and scenario presets.
//! - [`harness`]: the closed-loop simulation, metrics and exports.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod config;
pub mod costinf;
pub mod demand;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod inventory;
pub mod policy;
pub mod predict;

pub use bounds::{ErrorBound, Gain, InferenceGain, PolicyGain};
pub use config::{InferenceMode, PolicyKind, RunConfig, Scenario};
pub use costinf::{CostInference, CostInterval, MiscoverageLedger};
pub use demand::DemandSource;
pub use error::{Error, Result};
pub use harness::{run, run_scenario, RunResult, StepRecord, Summary};
pub use inventory::HistoryLog;
pub use predict::{FeatureMap, Rls};
