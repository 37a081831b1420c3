//! Run configuration: a TOML file with every key optional, overridden by
//! command-line flags. The effective value is echoed into the manifest.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use dfdr_core::harness::StressRule;
use dfdr_core::{BootstrapPlan, CostModel, RollingConfig, SimDesign, UniverseGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed for every bootstrap and simulation draw.
    pub seed: u64,
    pub output: PathBuf,
    pub data: DataConfig,
    pub cost: CostConfig,
    pub bootstrap: BootstrapConfig,
    pub select: SelectConfig,
    pub rolling: RollingConfig,
    pub persistence: PersistenceConfig,
    pub stress: StressConfig,
    pub montecarlo: SimDesign,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output: PathBuf::from("dfdr-out"),
            data: DataConfig::default(),
            cost: CostConfig::default(),
            bootstrap: BootstrapConfig::default(),
            select: SelectConfig::default(),
            rolling: RollingConfig::default(),
            persistence: PersistenceConfig::default(),
            stress: StressConfig::default(),
            montecarlo: SimDesign::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// One `date,close` file per market; the file stem names the market.
    pub prices: Vec<PathBuf>,
    pub risk_free: Option<PathBuf>,
    pub stress: Option<PathBuf>,
    /// Universe grid TOML; the shipped grid when absent.
    pub universe: Option<PathBuf>,
    /// Sample window of `backtest`, `pvalues` and `select`.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostConfig {
    /// One-way cost in basis points.
    pub tc_bps: f64,
    pub flip_charges_both_legs: bool,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            tc_bps: 25.0,
            flip_charges_both_legs: false,
        }
    }
}

impl CostConfig {
    /// The only place basis points become a decimal fraction.
    pub fn model(&self) -> Result<CostModel, CliError> {
        let mut m = CostModel::from_bps(self.tc_bps)?;
        m.flip_charges_both_legs = self.flip_charges_both_legs;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub expected_block: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        let p = BootstrapPlan::default();
        Self {
            replications: p.replications,
            expected_block: p.expected_block,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SelectMethod {
    Dfdr,
    Storey,
    Rw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectConfig {
    pub method: SelectMethod,
    pub target: f64,
    /// Fixed λ of the Storey baseline.
    pub lambda: f64,
    /// Romano–Wolf FWER level.
    pub alpha: f64,
    pub grid_width: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            method: SelectMethod::Dfdr,
            target: 0.10,
            lambda: dfdr_core::mht::DEFAULT_FIXED_LAMBDA,
            alpha: 0.05,
            grid_width: dfdr_core::mht::DEFAULT_GRID_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PersistenceConfig {
    /// Block lengths in months.
    pub horizons: Vec<usize>,
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        Self {
            horizons: vec![1, 3, 6, 12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressConfig {
    pub rule: StressRule,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self { rule: StressRule::Sign }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn plan(&self) -> Result<BootstrapPlan, CliError> {
        Ok(BootstrapPlan::new(
            self.bootstrap.replications,
            self.bootstrap.expected_block,
            self.seed,
        )?)
    }

    pub fn universe_grid(&self) -> Result<UniverseGrid, CliError> {
        match &self.data.universe {
            None => Ok(UniverseGrid::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                    path: p.clone(),
                    source,
                })?;
                UniverseGrid::from_toml(&text).map_err(|e| CliError::Config {
                    path: p.clone(),
                    message: e.to_string(),
                })
            }
        }
    }

    /// Checks everything that can be checked before touching data.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, message: String| CliError::Invalid {
            key: key.into(),
            message,
        };
        self.cost.model().map_err(|e| bad("cost.tc_bps", e.to_string()))?;
        self.plan().map_err(|e| bad("bootstrap", e.to_string()))?;
        self.rolling.validate().map_err(|e| bad("rolling", e.to_string()))?;
        let s = &self.select;
        for (key, v) in [
            ("select.target", s.target),
            ("select.lambda", s.lambda),
            ("select.alpha", s.alpha),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(bad(key, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(s.grid_width > 0.0 && s.grid_width < 0.5) {
            return Err(bad("select.grid_width", format!("must lie in (0, 0.5), got {}", s.grid_width)));
        }
        if self.persistence.horizons.contains(&0) {
            return Err(bad("persistence.horizons", "horizons must be at least one month".into()));
        }
        if self.montecarlo.seed != 0 && self.montecarlo.seed != self.seed {
            return Err(bad("montecarlo.seed", "set the top-level `seed` instead".into()));
        }
        self.montecarlo.validate().map_err(|e| bad("montecarlo", e.to_string()))?;
        if let (Some(a), Some(b)) = (self.data.start, self.data.end) {
            if a >= b {
                return Err(bad("data.start", format!("{a} is not before data.end {b}")));
            }
        }
        Ok(())
    }
}
