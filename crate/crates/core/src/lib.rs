//! Evaluation of large technical trading rule universes under a discrete
//! false-discovery-rate procedure.
//!
//! The crate is organised as a pipeline:
//!
//! * [`market_data`] loads prices, risk-free quotes and stress indices and
//!   derives aligned log returns.
//! * [`rules`] enumerates a parameterised rule universe (filter, RSI, moving
//!   average, support/resistance and channel breakout families) and turns it
//!   into lagged position signals.
//! * [`backtest`] converts signals into after-cost excess returns and
//!   performance metrics, including break-even transaction costs.
//! * [`bootstrap`] runs the stationary bootstrap with draws shared across the
//!   cross-section and produces discrete two-sided p-values.
//! * [`mht`] estimates the null proportion with the right-boundary rule and
//!   selects outperforming rules at a target FDR⁺, alongside the fixed-λ
//!   Storey and Romano–Wolf StepM baselines.
//! * [`harness`] builds equal-weight portfolios and runs rolling in-sample /
//!   out-of-sample experiments, persistence, cross-validation and stress
//!   conditioning.
//! * [`montecarlo`] is the controlled simulation study used to measure power
//!   and realised FDR⁺ of the procedures.

pub mod backtest;
pub mod bootstrap;
pub mod error;
pub mod harness;
pub mod market_data;
pub mod mht;
pub mod montecarlo;
pub mod rules;

mod rng;

pub use backtest::{CostModel, ExcessReturnPanel, Performance};
pub use bootstrap::{BootstrapPlan, PValueSet, Statistic};
pub use error::{Error, Result};
pub use harness::{RollingConfig, WindowResult};
pub use market_data::{MarketData, PriceSeries, ReturnSeries, RiskFreeSeries, StressSeries};
pub use mht::{DfdrSelection, LambdaGrid, ProportionEstimate, RwSelection};
pub use montecarlo::{SimDesign, SimOutcome};
pub use rules::{Family, RuleSpec, SignalMatrix, UniverseGrid};

/// Trading days per calendar year used for every annualisation.
pub const TRADING_DAYS_PER_YEAR: f64 = 260.0;
