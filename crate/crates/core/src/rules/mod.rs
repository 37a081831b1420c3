//! Technical trading rule universe and signal generation.

mod grid;
pub mod signals;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::PriceSeries;

pub use grid::{
    enumerate_universe, ChannelBreakoutGrid, FilterGrid, MovingAverageGrid, RsiGrid, SupportResistanceGrid,
    Universe, UniverseGrid, DEFAULT_GRID_TOML, DEFAULT_UNIVERSE_SIZE,
};

/// Longest lookback any rule may use, one trading year.
pub const MAX_LOOKBACK: usize = 260;

/// Rule families in universe enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "FR")]
    Filter,
    #[serde(rename = "RSI")]
    Rsi,
    #[serde(rename = "MA")]
    MovingAverage,
    #[serde(rename = "SR")]
    SupportResistance,
    #[serde(rename = "CB")]
    ChannelBreakout,
}

impl Family {
    /// Enumeration order of the universe.
    pub const ALL: [Family; 5] = [
        Family::Filter,
        Family::Rsi,
        Family::MovingAverage,
        Family::SupportResistance,
        Family::ChannelBreakout,
    ];

    /// Column order of family breakdown tables.
    pub const REPORT_ORDER: [Family; 5] = [
        Family::Rsi,
        Family::Filter,
        Family::MovingAverage,
        Family::SupportResistance,
        Family::ChannelBreakout,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Family::Filter => "FR",
            Family::Rsi => "RSI",
            Family::MovingAverage => "MA",
            Family::SupportResistance => "SR",
            Family::ChannelBreakout => "CB",
        }
    }

    /// Trend-following families bet on continuation; RSI is contrarian.
    pub fn is_trend_following(self) -> bool {
        self != Family::Rsi
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Parameters of a single rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Filter {
        threshold: f64,
        hold_days: u32,
    },
    Rsi {
        lookback: usize,
        overbought: f64,
        oversold: f64,
    },
    MovingAverage {
        fast: usize,
        slow: usize,
        band: f64,
        neutral_in_band: bool,
    },
    SupportResistance {
        lookback: usize,
        threshold: f64,
    },
    ChannelBreakout {
        length: usize,
        width: f64,
    },
}

/// A rule together with its stable index in the universe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleSpec {
    pub id: usize,
    pub kind: RuleKind,
}

impl RuleSpec {
    pub fn family(&self) -> Family {
        match self.kind {
            RuleKind::Filter { .. } => Family::Filter,
            RuleKind::Rsi { .. } => Family::Rsi,
            RuleKind::MovingAverage { .. } => Family::MovingAverage,
            RuleKind::SupportResistance { .. } => Family::SupportResistance,
            RuleKind::ChannelBreakout { .. } => Family::ChannelBreakout,
        }
    }

    /// Number of leading days whose position is forced to neutral.
    pub fn warmup(&self) -> usize {
        match self.kind {
            RuleKind::Filter { .. } => 1,
            RuleKind::Rsi { lookback, .. } => lookback,
            RuleKind::MovingAverage { slow, .. } => slow - 1,
            RuleKind::SupportResistance { lookback, .. } => lookback,
            RuleKind::ChannelBreakout { length, .. } => length,
        }
    }

    /// Named parameters in declaration order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            RuleKind::Filter { threshold, hold_days } => {
                vec![("threshold", threshold), ("hold_days", f64::from(hold_days))]
            }
            RuleKind::Rsi {
                lookback,
                overbought,
                oversold,
            } => vec![
                ("lookback", lookback as f64),
                ("overbought", overbought),
                ("oversold", oversold),
            ],
            RuleKind::MovingAverage {
                fast,
                slow,
                band,
                neutral_in_band,
            } => vec![
                ("fast", fast as f64),
                ("slow", slow as f64),
                ("band", band),
                ("neutral_in_band", if neutral_in_band { 1.0 } else { 0.0 }),
            ],
            RuleKind::SupportResistance { lookback, threshold } => {
                vec![("lookback", lookback as f64), ("threshold", threshold)]
            }
            RuleKind::ChannelBreakout { length, width } => {
                vec![("length", length as f64), ("width", width)]
            }
        }
    }

    /// `key=value` pairs separated by spaces.
    pub fn params_string(&self) -> String {
        self.params()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Daily positions of this rule on `prices` (no lag applied).
    pub fn positions(&self, prices: &[f64]) -> Vec<i8> {
        match self.kind {
            RuleKind::Filter { threshold, hold_days } => signals::filter_rule(prices, threshold, hold_days),
            RuleKind::Rsi {
                lookback,
                overbought,
                oversold,
            } => signals::rsi(prices, lookback, overbought, oversold),
            RuleKind::MovingAverage {
                fast,
                slow,
                band,
                neutral_in_band,
            } => signals::moving_average(prices, fast, slow, band, neutral_in_band),
            RuleKind::SupportResistance { lookback, threshold } => {
                signals::support_resistance(prices, lookback, threshold)
            }
            RuleKind::ChannelBreakout { length, width } => signals::channel_breakout(prices, length, width),
        }
    }
}

/// Lagged positions for a universe, one row per return date.
///
/// Row `t` holds the positions formed at the close before return `t`, i.e.
/// `s_{j,t-1}` in the excess-return sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    dates: Vec<NaiveDate>,
    rules: Vec<RuleSpec>,
    data: Vec<i8>,
    warmup: Vec<usize>,
}

impl SignalMatrix {
    /// Builds a matrix from row-major positions. Mostly useful for tests and
    /// for callers with externally generated signals.
    pub fn from_rows(dates: Vec<NaiveDate>, rules: Vec<RuleSpec>, data: Vec<i8>, warmup: Vec<usize>) -> Result<Self> {
        if data.len() != dates.len() * rules.len() || warmup.len() != rules.len() {
            return Err(Error::Shape(format!(
                "{} signals for {} dates x {} rules",
                data.len(),
                dates.len(),
                rules.len()
            )));
        }
        if data.iter().any(|s| !(-1..=1).contains(s)) {
            return Err(Error::Validation("signals must be -1, 0 or +1".into()));
        }
        Ok(Self {
            dates,
            rules,
            data,
            warmup,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rules(&self) -> &[RuleSpec] {
        &self.rules
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn warmup(&self) -> &[usize] {
        &self.warmup
    }

    pub fn row(&self, t: usize) -> &[i8] {
        let l = self.rules.len();
        &self.data[t * l..(t + 1) * l]
    }

    pub fn get(&self, t: usize, j: usize) -> i8 {
        self.data[t * self.rules.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<i8> {
        (0..self.n_rows()).map(|t| self.get(t, j)).collect()
    }
}

/// Shared intermediate series, computed once per distinct window length.
#[derive(Default)]
struct IndicatorCache {
    deviations: BTreeMap<usize, Vec<f64>>,
    extremes: BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
    rsi: BTreeMap<usize, Vec<f64>>,
}

impl IndicatorCache {
    fn build(rules: &[RuleSpec], prices: &[f64]) -> Self {
        let mut dev_windows = BTreeSet::new();
        let mut ext_windows = BTreeSet::new();
        let mut rsi_windows = BTreeSet::new();
        for r in rules {
            match r.kind {
                RuleKind::MovingAverage { fast, slow, .. } => {
                    dev_windows.insert(fast);
                    dev_windows.insert(slow);
                }
                RuleKind::SupportResistance { lookback, .. } => {
                    ext_windows.insert(lookback);
                }
                RuleKind::ChannelBreakout { length, .. } => {
                    ext_windows.insert(length);
                }
                RuleKind::Rsi { lookback, .. } => {
                    rsi_windows.insert(lookback);
                }
                RuleKind::Filter { .. } => {}
            }
        }
        Self {
            deviations: dev_windows
                .into_iter()
                .map(|w| (w, signals::anchored_mean_deviation(prices, w)))
                .collect(),
            extremes: ext_windows
                .into_iter()
                .map(|w| (w, signals::trailing_extremes(prices, w)))
                .collect(),
            rsi: rsi_windows
                .into_iter()
                .map(|w| (w, signals::rsi_series(prices, w)))
                .collect(),
        }
    }

    fn positions(&self, rule: &RuleSpec, prices: &[f64]) -> Vec<i8> {
        match rule.kind {
            RuleKind::Filter { threshold, hold_days } => signals::filter_rule(prices, threshold, hold_days),
            RuleKind::Rsi {
                lookback,
                overbought,
                oversold,
            } => signals::rsi_from_series(&self.rsi[&lookback], lookback, overbought, oversold),
            RuleKind::MovingAverage {
                fast,
                slow,
                band,
                neutral_in_band,
            } => signals::moving_average_from_deviations(
                prices,
                &self.deviations[&fast],
                &self.deviations[&slow],
                slow,
                band,
                neutral_in_band,
            ),
            RuleKind::SupportResistance { lookback, threshold } => {
                let (hi, lo) = &self.extremes[&lookback];
                signals::support_resistance_from_extremes(prices, hi, lo, lookback, threshold)
            }
            RuleKind::ChannelBreakout { length, width } => {
                let (hi, lo) = &self.extremes[&length];
                signals::channel_breakout_from_extremes(prices, hi, lo, length, width)
            }
        }
    }
}

/// Evaluates every rule on `prices` and lags the result by one day so that
/// row `t` (return date `t`) carries the position formed at close `t - 1`.
pub fn generate_signal_matrix(rules: &[RuleSpec], prices: &PriceSeries) -> Result<SignalMatrix> {
    if rules.is_empty() {
        return Err(Error::Config("rule universe is empty".into()));
    }
    let p = prices.prices();
    let max_warmup = rules.iter().map(RuleSpec::warmup).max().unwrap_or(0);
    if p.len() <= max_warmup + 1 {
        return Err(Error::InsufficientData(format!(
            "{} prices cannot cover a warm-up of {max_warmup} days",
            p.len()
        )));
    }
    let cache = IndicatorCache::build(rules, p);
    let columns: Vec<Vec<i8>> = rules.par_iter().map(|r| cache.positions(r, p)).collect();

    let rows = p.len() - 1;
    let l = rules.len();
    let mut data = vec![0i8; rows * l];
    for (j, col) in columns.iter().enumerate() {
        for t in 0..rows {
            data[t * l + j] = col[t];
        }
    }
    Ok(SignalMatrix {
        dates: prices.dates()[1..].to_vec(),
        rules: rules.to_vec(),
        data,
        warmup: rules.iter().map(RuleSpec::warmup).collect(),
    })
}
