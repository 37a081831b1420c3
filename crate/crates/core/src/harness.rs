//! Rolling in-sample / out-of-sample experiments on an excess-return panel:
//! equal-weight portfolios of selected rules, annual aggregates,
//! persistence, cross-validation, stress conditioning and family breakdown.

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::{Datelike, Months, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{excess_returns, CostModel, ExcessReturnPanel, Performance};
use crate::bootstrap::{bootstrap_p_values, BootstrapPlan, PValueSet, Statistic};
use crate::error::{Error, Result};
use crate::market_data::{MarketData, StressSeries};
use crate::mht::{dfdr_procedure, DfdrSelection, LambdaGrid, DEFAULT_GRID_WIDTH};
use crate::rng::derive_seed;
use crate::rules::{generate_signal_matrix, Family, RuleSpec};

const CROSS_VALIDATION_STREAM: u64 = 0x6376_616c;

/// Calendar year to (mean, count).
pub type AnnualMeans = BTreeMap<i32, (f64, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RollingConfig {
    pub is_months: usize,
    pub oos_months: usize,
    pub step_months: usize,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    /// FDR⁺ target of the in-sample selection.
    pub target: f64,
    /// FDR⁺ target of the full-sample selection in cross-validation.
    pub cv_target: f64,
    pub grid_width: f64,
    /// Count windows without survivors as earning the risk-free rate
    /// (zero excess) instead of leaving them out of annual means.
    pub empty_as_risk_free: bool,
    /// Longest out-of-sample span followed by persistence.
    pub persistence_max_months: usize,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            is_months: 24,
            oos_months: 1,
            step_months: 1,
            start: None,
            end: None,
            target: 0.10,
            cv_target: 0.20,
            grid_width: DEFAULT_GRID_WIDTH,
            empty_as_risk_free: false,
            persistence_max_months: 18,
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oos_months == 0 || self.is_months < self.oos_months {
            return Err(Error::Config(format!(
                "need 0 < oos_months <= is_months, got {} and {}",
                self.oos_months, self.is_months
            )));
        }
        if self.step_months == 0 {
            return Err(Error::Config("step_months must be at least 1".into()));
        }
        for (name, v) in [("target", self.target), ("cv_target", self.cv_target)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if s >= e {
                return Err(Error::Config(format!("start {s} is not before end {e}")));
            }
        }
        Ok(())
    }
}

/// Signals and after-cost excess returns of `rules` on one market.
pub fn build_panel(data: &MarketData, rules: &[RuleSpec], cost: CostModel) -> Result<ExcessReturnPanel> {
    let signals = generate_signal_matrix(rules, &data.prices)?;
    excess_returns(&signals, &data.returns, &data.risk_free, cost)
}

/// Row index of the first trading day of every calendar month present in
/// `dates`, followed by `dates.len()` as the closing boundary.
pub fn month_boundaries(dates: &[NaiveDate]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last = None;
    for (i, d) in dates.iter().enumerate() {
        let key = (d.year(), d.month());
        if last != Some(key) {
            out.push(i);
            last = Some(key);
        }
    }
    out.push(dates.len());
    out
}

/// Equal-weight portfolio of panel columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSeries {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    /// Column positions of the members.
    pub members: Vec<usize>,
}

/// Daily mean of the member columns over `rows`; `None` for an empty
/// selection.
pub fn build_portfolio(members: &[usize], panel: &ExcessReturnPanel, rows: Range<usize>) -> Option<PortfolioSeries> {
    if members.is_empty() {
        return None;
    }
    let k = members.len() as f64;
    let returns = rows
        .clone()
        .map(|t| {
            let row = panel.row(t);
            members.iter().map(|&j| row[j]).sum::<f64>() / k
        })
        .collect();
    Some(PortfolioSeries {
        dates: panel.dates()[rows].to_vec(),
        returns,
        members: members.to_vec(),
    })
}

fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// Percentage of selected rules in each family, in report order
/// (RSI, FR, MA, SR, CB); `None` for an empty selection.
pub fn disaggregate_by_family(selected: &[Family]) -> Option<[f64; 5]> {
    if selected.is_empty() {
        return None;
    }
    let n = selected.len() as f64;
    Some(Family::REPORT_ORDER.map(|f| selected.iter().filter(|&&g| g == f).count() as f64 / n * 100.0))
}

/// One rolling window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub id: usize,
    /// Position of the window's first month in the boundary list.
    pub month_index: usize,
    pub is_rows: Range<usize>,
    pub oos_rows: Range<usize>,
    pub is_start: NaiveDate,
    pub oos_start: NaiveDate,
    pub oos_end: NaiveDate,
    pub n_rules: usize,
    pub lambda_star: f64,
    pub selection: DfdrSelection,
    pub is_performance: Option<Performance>,
    pub oos_performance: Option<Performance>,
    pub families: Option<[f64; 5]>,
    /// Daily out-of-sample portfolio excess returns.
    pub oos_excess: Vec<f64>,
}

impl WindowResult {
    pub fn selected(&self) -> &[usize] {
        &self.selection.selected
    }

    pub fn is_empty(&self) -> bool {
        self.selection.selected.is_empty()
    }

    pub fn oos_year(&self) -> i32 {
        self.oos_start.year()
    }

    /// Selected share of the universe, in percent.
    pub fn survivor_pct(&self) -> f64 {
        self.selection.selected.len() as f64 / self.n_rules as f64 * 100.0
    }
}

/// A rolling run over one panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingRun {
    pub windows: Vec<WindowResult>,
    /// Windows not evaluated because the in-sample start falls inside the
    /// rules' warm-up.
    pub skipped_warmup: usize,
}

fn grid_for(cfg: &RollingConfig, plan: &BootstrapPlan) -> Result<LambdaGrid> {
    LambdaGrid::equal_width(cfg.grid_width, plan.replications)
}

/// Bootstrap p-values and right-boundary FDR⁺ selection on `rows`.
pub fn select_on_rows(
    panel: &ExcessReturnPanel,
    rows: Range<usize>,
    target: f64,
    grid: &LambdaGrid,
    plan: &BootstrapPlan,
) -> Result<(PValueSet, f64, DfdrSelection)> {
    let window = panel.window(rows)?;
    let (p, _) = bootstrap_p_values(&window, plan, Statistic::Sharpe)?;
    let (rb, sel) = dfdr_procedure(&p, grid, target)?;
    Ok((p, rb.lambda_star, sel))
}

fn performance_of(p: &Option<PortfolioSeries>) -> Option<Performance> {
    p.as_ref().and_then(|s| Performance::from_returns(&s.returns).ok())
}

/// Evaluates the window whose in-sample period starts at boundary `k`.
pub fn evaluate_window(
    cfg: &RollingConfig,
    panel: &ExcessReturnPanel,
    families: &[Family],
    bounds: &[usize],
    k: usize,
    id: usize,
    plan: &BootstrapPlan,
) -> Result<WindowResult> {
    let (is_m, oos_m) = (cfg.is_months, cfg.oos_months);
    if k + is_m + oos_m >= bounds.len() {
        return Err(Error::InsufficientData(format!("window {id} runs past the data")));
    }
    let is_rows = bounds[k]..bounds[k + is_m];
    let oos_rows = bounds[k + is_m]..bounds[k + is_m + oos_m];
    let plan = plan.with_seed(plan.seed ^ id as u64);
    let grid = grid_for(cfg, &plan)?;
    let (_, lambda_star, selection) = select_on_rows(panel, is_rows.clone(), cfg.target, &grid, &plan)?;
    let is_port = build_portfolio(&selection.selected, panel, is_rows.clone());
    let oos_port = build_portfolio(&selection.selected, panel, oos_rows.clone());
    let fams: Vec<Family> = selection.selected.iter().map(|&j| families[j]).collect();
    let dates = panel.dates();
    Ok(WindowResult {
        id,
        month_index: k,
        is_start: dates[is_rows.start],
        oos_start: dates[oos_rows.start],
        oos_end: dates[oos_rows.end - 1],
        is_rows,
        oos_rows,
        n_rules: panel.n_rules(),
        lambda_star,
        is_performance: performance_of(&is_port),
        oos_performance: performance_of(&oos_port),
        families: disaggregate_by_family(&fams),
        oos_excess: oos_port.map(|p| p.returns).unwrap_or_default(),
        selection,
    })
}

/// In-sample starts (boundary positions) of every window that fits in the
/// data, and how many were dropped for the warm-up.
pub fn window_starts(cfg: &RollingConfig, panel: &ExcessReturnPanel, bounds: &[usize]) -> (Vec<usize>, usize) {
    let warmup = panel.first_usable().iter().copied().max().unwrap_or(0);
    let span = cfg.is_months + cfg.oos_months;
    let mut starts = Vec::new();
    let mut skipped = 0;
    let mut k = 0;
    while k + span < bounds.len() {
        if bounds[k] >= warmup {
            starts.push(k);
        } else {
            skipped += 1;
        }
        k += cfg.step_months;
    }
    (starts, skipped)
}

fn restrict(panel: &ExcessReturnPanel, cfg: &RollingConfig) -> Result<ExcessReturnPanel> {
    let dates = panel.dates();
    let lo = cfg.start.map_or(0, |s| dates.partition_point(|d| *d < s));
    let hi = cfg.end.map_or(dates.len(), |e| dates.partition_point(|d| *d <= e));
    panel.window(lo..hi.max(lo))
}

/// Rolls the in-sample/out-of-sample window forward month by month.
/// `families[j]` is the family of panel column `j`.
pub fn rolling_evaluate(
    cfg: &RollingConfig,
    panel: &ExcessReturnPanel,
    families: &[Family],
    plan: &BootstrapPlan,
) -> Result<RollingRun> {
    cfg.validate()?;
    plan.validate()?;
    if families.len() != panel.n_rules() {
        return Err(Error::Shape(format!(
            "{} families for {} rules",
            families.len(),
            panel.n_rules()
        )));
    }
    let panel = restrict(panel, cfg)?;
    let bounds = month_boundaries(panel.dates());
    let (starts, skipped_warmup) = window_starts(cfg, &panel, &bounds);
    if starts.is_empty() {
        return Err(Error::InsufficientData(format!(
            "data holds no complete {}+{} month window after warm-up",
            cfg.is_months, cfg.oos_months
        )));
    }
    let windows = starts
        .par_iter()
        .enumerate()
        .map(|(id, &k)| evaluate_window(cfg, &panel, families, &bounds, k, id, plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(RollingRun {
        windows,
        skipped_warmup,
    })
}

/// Mean and count per out-of-sample calendar year of `metric`. Windows
/// where `metric` is `None` are left out.
pub fn annual_means(windows: &[WindowResult], metric: impl Fn(&WindowResult) -> Option<f64>) -> AnnualMeans {
    let mut acc: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for w in windows {
        if let Some(v) = metric(w) {
            acc.entry(w.oos_year()).or_default().push(v);
        }
    }
    acc.into_iter()
        .map(|(y, v)| (y, (mean(&v).unwrap_or(f64::NAN), v.len())))
        .collect()
}

/// Annualised OOS return of a window; empty windows give zero excess when
/// `empty_as_risk_free` is set and `None` otherwise.
pub fn oos_return(w: &WindowResult, empty_as_risk_free: bool) -> Option<f64> {
    match &w.oos_performance {
        Some(p) => Some(p.annualized_return),
        None if w.is_empty() && empty_as_risk_free => Some(0.0),
        None => None,
    }
}

/// One cell of a long-format annual table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualRow {
    pub year: i32,
    pub metric: String,
    pub value: f64,
}

/// Annual aggregates of a rolling run: OOS return and Sharpe, IS return,
/// survivor share, window counts and family shares.
pub fn annual_table(run: &RollingRun, cfg: &RollingConfig) -> Vec<AnnualRow> {
    let w = &run.windows;
    let rf = cfg.empty_as_risk_free;
    let mut metrics: Vec<(String, AnnualMeans)> = vec![
        ("oos_annualized_return".into(), annual_means(w, |x| oos_return(x, rf))),
        (
            "oos_annualized_sharpe".into(),
            annual_means(w, |x| x.oos_performance.and_then(|p| p.annualized_sharpe)),
        ),
        (
            "is_annualized_return".into(),
            annual_means(w, |x| x.is_performance.map(|p| p.annualized_return)),
        ),
        ("survivor_pct".into(), annual_means(w, |x| Some(x.survivor_pct()))),
        ("empty_windows".into(), annual_means(w, |x| Some(f64::from(u8::from(x.is_empty()))))),
    ];
    for (i, f) in Family::REPORT_ORDER.iter().enumerate() {
        metrics.push((format!("family_pct_{}", f.code()), annual_means(w, |x| x.families.map(|s| s[i]))));
    }
    let mut rows = Vec::new();
    for (name, by_year) in metrics {
        for (year, (v, n)) in by_year {
            let value = if name == "empty_windows" { v * n as f64 } else { v };
            rows.push(AnnualRow {
                year,
                metric: name.clone(),
                value,
            });
        }
    }
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for x in w {
        *counts.entry(x.oos_year()).or_default() += 1;
    }
    rows.extend(counts.into_iter().map(|(year, n)| AnnualRow {
        year,
        metric: "windows".into(),
        value: n as f64,
    }));
    rows.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.metric.cmp(&b.metric)));
    rows
}

/// Leading run of blocks with positive mean excess return.
pub fn persistence_count(block_means: &[f64]) -> usize {
    block_means.iter().take_while(|&&m| m > 0.0).count()
}

/// Consecutive `horizon_months` blocks, from the OOS start, in which the
/// window's in-sample portfolio beats the risk-free rate. Only complete
/// blocks within `max_months` and the data count; `None` for an empty
/// selection.
pub fn window_persistence(
    w: &WindowResult,
    panel: &ExcessReturnPanel,
    bounds: &[usize],
    cfg: &RollingConfig,
    horizon_months: usize,
) -> Option<usize> {
    if w.is_empty() || horizon_months == 0 {
        return None;
    }
    let start = w.month_index + cfg.is_months;
    let blocks = cfg.persistence_max_months / horizon_months;
    let means: Vec<f64> = (0..blocks)
        .map_while(|b| {
            let (a, z) = (start + b * horizon_months, start + (b + 1) * horizon_months);
            (z < bounds.len()).then(|| {
                let port = build_portfolio(w.selected(), panel, bounds[a]..bounds[z]).expect("non-empty");
                mean(&port.returns).unwrap_or(0.0)
            })
        })
        .collect();
    Some(persistence_count(&means))
}

/// Persistence of every window of a run (same panel and config).
pub fn persistence(
    run: &RollingRun,
    panel: &ExcessReturnPanel,
    cfg: &RollingConfig,
    horizon_months: usize,
) -> Result<Vec<Option<usize>>> {
    let panel = restrict(panel, cfg)?;
    let bounds = month_boundaries(panel.dates());
    Ok(run
        .windows
        .iter()
        .map(|w| window_persistence(w, &panel, &bounds, cfg, horizon_months))
        .collect())
}

/// Outcome of cross-validating one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub window: usize,
    pub is_survivors: Vec<usize>,
    /// In-sample survivors with positive OOS mean excess.
    pub oos_profitable: Vec<usize>,
    /// Selection at the cross-validation target on IS and OOS together.
    pub full_sample: Vec<usize>,
    pub intersection: Vec<usize>,
    /// `|intersection| / |IS survivors|` in percent.
    pub share_pct: Option<f64>,
    pub oos_annualized_return: Option<f64>,
}

/// Intersects OOS-profitable in-sample survivors with a more lenient
/// selection over the combined in- and out-of-sample rows.
pub fn cross_validate(
    cfg: &RollingConfig,
    panel: &ExcessReturnPanel,
    w: &WindowResult,
    plan: &BootstrapPlan,
) -> Result<CrossValidation> {
    let panel = restrict(panel, cfg)?;
    let plan = plan.with_seed(derive_seed(plan.seed ^ w.id as u64, CROSS_VALIDATION_STREAM));
    let grid = grid_for(cfg, &plan)?;
    let is_survivors = w.selected().to_vec();
    let oos_profitable: Vec<usize> = is_survivors
        .iter()
        .copied()
        .filter(|&j| mean(&panel.column_range(j, w.oos_rows.clone())).is_some_and(|m| m > 0.0))
        .collect();
    let (_, _, full) = select_on_rows(&panel, w.is_rows.start..w.oos_rows.end, cfg.cv_target, &grid, &plan)?;
    let intersection: Vec<usize> = oos_profitable
        .iter()
        .copied()
        .filter(|j| full.selected.contains(j))
        .collect();
    let share_pct = (!is_survivors.is_empty()).then(|| intersection.len() as f64 / is_survivors.len() as f64 * 100.0);
    let oos_annualized_return = performance_of(&build_portfolio(&intersection, &panel, w.oos_rows.clone()))
        .map(|p| p.annualized_return);
    Ok(CrossValidation {
        window: w.id,
        is_survivors,
        oos_profitable,
        full_sample: full.selected,
        intersection,
        share_pct,
        oos_annualized_return,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressRule {
    /// High when the mean index level is above zero.
    Sign,
    /// High when the mean index level is above the median across windows.
    MedianSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StressClass {
    High,
    Low,
    /// No index observations before the OOS start.
    Missing,
}

/// Mean index level over the calendar month before `oos_start`.
pub fn pre_oos_stress(stress: &StressSeries, oos_start: NaiveDate) -> Option<f64> {
    let from = oos_start.checked_sub_months(Months::new(1))?;
    let lo = stress.dates.partition_point(|d| *d < from);
    let hi = stress.dates.partition_point(|d| *d < oos_start);
    mean(&stress.values[lo..hi])
}

/// Classifies every window by the stress level preceding its OOS start.
pub fn classify_stress(windows: &[WindowResult], stress: &StressSeries, rule: StressRule) -> Vec<StressClass> {
    let levels: Vec<Option<f64>> = windows.iter().map(|w| pre_oos_stress(stress, w.oos_start)).collect();
    let threshold = match rule {
        StressRule::Sign => 0.0,
        StressRule::MedianSplit => {
            let mut v: Vec<f64> = levels.iter().flatten().copied().collect();
            v.sort_by(f64::total_cmp);
            match v.len() {
                0 => 0.0,
                n if n % 2 == 1 => v[n / 2],
                n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
            }
        }
    };
    levels
        .into_iter()
        .map(|l| match l {
            None => StressClass::Missing,
            Some(v) if v > threshold => StressClass::High,
            Some(_) => StressClass::Low,
        })
        .collect()
}

/// Annual OOS return means within the high- and low-stress classes.
pub fn stress_split(
    windows: &[WindowResult],
    stress: &StressSeries,
    rule: StressRule,
    empty_as_risk_free: bool,
) -> (AnnualMeans, AnnualMeans) {
    let classes = classify_stress(windows, stress, rule);
    let pick = |c: StressClass| {
        let chosen: Vec<WindowResult> = windows
            .iter()
            .zip(&classes)
            .filter(|(_, &k)| k == c)
            .map(|(w, _)| w.clone())
            .collect();
        annual_means(&chosen, |w| oos_return(w, empty_as_risk_free))
    };
    (pick(StressClass::High), pick(StressClass::Low))
}

/// Break-even cost of the rule with the highest in-sample Sharpe ratio,
/// over its in-sample rows and over the OOS rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakEven {
    pub window: usize,
    pub column: usize,
    pub is_sharpe: f64,
    pub is_tc: Option<f64>,
    pub oos_tc: Option<f64>,
}

pub fn best_rule_break_even(panel: &ExcessReturnPanel, w: &WindowResult) -> Option<BreakEven> {
    let best = (0..panel.n_rules())
        .filter_map(|j| {
            let sr = panel.performance(j, w.is_rows.clone()).ok()?.sharpe?;
            Some((j, sr))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))?;
    Some(BreakEven {
        window: w.id,
        column: best.0,
        is_sharpe: best.1,
        is_tc: panel.break_even_tc(best.0, w.is_rows.clone()),
        oos_tc: panel.break_even_tc(best.0, w.oos_rows.clone()),
    })
}
