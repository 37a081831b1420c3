use serde::{Deserialize, Serialize};

use super::{RuleKind, RuleSpec, MAX_LOOKBACK};
use crate::error::{Error, Result};

/// The shipped universe grid, also the documented config schema.
pub const DEFAULT_GRID_TOML: &str = include_str!("../default_grid.toml");

/// Number of rules [`DEFAULT_GRID_TOML`] enumerates to.
pub const DEFAULT_UNIVERSE_SIZE: usize = 1250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterGrid {
    pub thresholds: Vec<f64>,
    #[serde(default = "zero_hold")]
    pub hold_days: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsiGrid {
    pub lookbacks: Vec<usize>,
    pub overbought: Vec<f64>,
    pub oversold: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingAverageGrid {
    pub fast: Vec<usize>,
    pub slow: Vec<usize>,
    #[serde(default = "zero_band")]
    pub bands: Vec<f64>,
    #[serde(default)]
    pub neutral_in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportResistanceGrid {
    pub lookbacks: Vec<usize>,
    #[serde(default = "zero_band")]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBreakoutGrid {
    pub lengths: Vec<usize>,
    pub widths: Vec<f64>,
}

fn zero_hold() -> Vec<u32> {
    vec![0]
}

fn zero_band() -> Vec<f64> {
    vec![0.0]
}

/// Parameter grids per family; a missing section drops the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseGrid {
    pub filter: Option<FilterGrid>,
    pub rsi: Option<RsiGrid>,
    pub moving_average: Option<MovingAverageGrid>,
    pub support_resistance: Option<SupportResistanceGrid>,
    pub channel_breakout: Option<ChannelBreakoutGrid>,
}

impl Default for UniverseGrid {
    fn default() -> Self {
        Self::from_toml(DEFAULT_GRID_TOML).expect("shipped grid parses")
    }
}

impl UniverseGrid {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Enumerated rules plus the number of degenerate combinations skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    pub rules: Vec<RuleSpec>,
    pub skipped: usize,
}

fn sorted_floats(name: &str, values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Config(format!("grid axis `{name}` is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("grid axis `{name}` has a non-finite value")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn sorted_ints<T: Ord + Copy>(name: &str, values: &[T]) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::Config(format!("grid axis `{name}` is empty")));
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn check_lookbacks(name: &str, values: &[usize], min: usize) -> Result<()> {
    match values.iter().find(|&&v| v < min || v > MAX_LOOKBACK) {
        Some(v) => Err(Error::Config(format!(
            "`{name}` value {v} outside {min}..={MAX_LOOKBACK}"
        ))),
        None => Ok(()),
    }
}

fn check_floats(name: &str, values: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    match values.iter().find(|&&v| !ok(v)) {
        Some(v) => Err(Error::Config(format!("`{name}` value {v} must be {what}"))),
        None => Ok(()),
    }
}

/// Expands the grid into rules. Families come in the order FR, RSI, MA, SR,
/// CB; within a family, parameters vary lexicographically over the sorted,
/// de-duplicated axes. Combinations that cannot form a rule (fast window not
/// below slow, oversold not below overbought) are skipped and counted.
pub fn enumerate_universe(grid: &UniverseGrid) -> Result<Universe> {
    let mut kinds = Vec::new();
    let mut skipped = 0usize;

    if let Some(g) = &grid.filter {
        let thresholds = sorted_floats("filter.thresholds", &g.thresholds)?;
        check_floats("filter.thresholds", &thresholds, |v| v > 0.0, "positive")?;
        let holds = sorted_ints("filter.hold_days", &g.hold_days)?;
        if let Some(h) = holds.iter().find(|&&h| h as usize > MAX_LOOKBACK) {
            return Err(Error::Config(format!("`filter.hold_days` value {h} exceeds {MAX_LOOKBACK}")));
        }
        for &threshold in &thresholds {
            for &hold_days in &holds {
                kinds.push(RuleKind::Filter { threshold, hold_days });
            }
        }
    }

    if let Some(g) = &grid.rsi {
        let lookbacks = sorted_ints("rsi.lookbacks", &g.lookbacks)?;
        check_lookbacks("rsi.lookbacks", &lookbacks, 2)?;
        let ob = sorted_floats("rsi.overbought", &g.overbought)?;
        let os = sorted_floats("rsi.oversold", &g.oversold)?;
        let level = |v: f64| v > 0.0 && v < 100.0;
        check_floats("rsi.overbought", &ob, level, "inside (0, 100)")?;
        check_floats("rsi.oversold", &os, level, "inside (0, 100)")?;
        for &lookback in &lookbacks {
            for &overbought in &ob {
                for &oversold in &os {
                    if oversold < overbought {
                        kinds.push(RuleKind::Rsi {
                            lookback,
                            overbought,
                            oversold,
                        });
                    } else {
                        skipped += 1;
                    }
                }
            }
        }
    }

    if let Some(g) = &grid.moving_average {
        let fast = sorted_ints("moving_average.fast", &g.fast)?;
        check_lookbacks("moving_average.fast", &fast, 1)?;
        let slow = sorted_ints("moving_average.slow", &g.slow)?;
        check_lookbacks("moving_average.slow", &slow, 2)?;
        let bands = sorted_floats("moving_average.bands", &g.bands)?;
        check_floats("moving_average.bands", &bands, |v| v >= 0.0, "non-negative")?;
        for &f in &fast {
            for &s in &slow {
                for &band in &bands {
                    if f < s {
                        kinds.push(RuleKind::MovingAverage {
                            fast: f,
                            slow: s,
                            band,
                            neutral_in_band: g.neutral_in_band,
                        });
                    } else {
                        skipped += 1;
                    }
                }
            }
        }
    }

    if let Some(g) = &grid.support_resistance {
        let lookbacks = sorted_ints("support_resistance.lookbacks", &g.lookbacks)?;
        check_lookbacks("support_resistance.lookbacks", &lookbacks, 2)?;
        let thresholds = sorted_floats("support_resistance.thresholds", &g.thresholds)?;
        check_floats("support_resistance.thresholds", &thresholds, |v| v >= 0.0, "non-negative")?;
        for &lookback in &lookbacks {
            for &threshold in &thresholds {
                kinds.push(RuleKind::SupportResistance { lookback, threshold });
            }
        }
    }

    if let Some(g) = &grid.channel_breakout {
        let lengths = sorted_ints("channel_breakout.lengths", &g.lengths)?;
        check_lookbacks("channel_breakout.lengths", &lengths, 2)?;
        let widths = sorted_floats("channel_breakout.widths", &g.widths)?;
        check_floats("channel_breakout.widths", &widths, |v| v > 0.0, "positive")?;
        for &length in &lengths {
            for &width in &widths {
                kinds.push(RuleKind::ChannelBreakout { length, width });
            }
        }
    }

    let rules = kinds
        .into_iter()
        .enumerate()
        .map(|(id, kind)| RuleSpec { id, kind })
        .collect();
    Ok(Universe { rules, skipped })
}
