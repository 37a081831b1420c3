use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use dfdr_core::backtest::ExcessReturnPanel;
use dfdr_core::bootstrap::{bootstrap_p_values, PValueSet, Statistic};
use dfdr_core::harness::{
    self, annual_means, annual_table, best_rule_break_even, build_panel, classify_stress, cross_validate,
    stress_split, RollingRun, StressClass,
};
use dfdr_core::market_data::{load_price_series, load_risk_free, load_stress_series};
use dfdr_core::mht::{dfdr_procedure, rw_stepm_select, storey_fixed_select, LambdaGrid};
use dfdr_core::montecarlo::{run_power_study, Method};
use dfdr_core::rules::enumerate_universe;
use dfdr_core::{BootstrapPlan, Error as CoreError, Family, MarketData, RuleSpec};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SelectMethod};
use crate::error::CliError;
use crate::output::OutputDir;

pub struct Market {
    pub name: String,
    pub data: MarketData,
}

fn market_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "market".into(), |s| s.to_string_lossy().into_owned())
}

fn bps(x: f64) -> f64 {
    x * 1e4
}

pub fn load_markets(cfg: &RunConfig, out: &mut OutputDir) -> Result<Vec<Market>, CliError> {
    if cfg.data.prices.is_empty() {
        return Err(CliError::Usage("no price data: pass --prices or set data.prices".into()));
    }
    let rf = match &cfg.data.risk_free {
        Some(p) => {
            let rf = load_risk_free(p)?;
            out.record_input(p)?;
            Some(rf)
        }
        None => None,
    };
    let mut markets: Vec<Market> = Vec::new();
    for path in &cfg.data.prices {
        let name = market_name(path);
        if markets.iter().any(|m| m.name == name) {
            return Err(CliError::Usage(format!("two price files share the market name `{name}`")));
        }
        let prices = load_price_series(path)?;
        out.record_input(path)?;
        let data = MarketData::new(prices, rf.as_ref())?;
        info!("{name}: {} return days", data.returns.len());
        markets.push(Market { name, data });
    }
    Ok(markets)
}

pub fn universe(cfg: &RunConfig, out: &mut OutputDir) -> Result<Vec<RuleSpec>, CliError> {
    if let Some(p) = &cfg.data.universe {
        out.record_input(p)?;
    }
    let u = enumerate_universe(&cfg.universe_grid()?)?;
    info!("universe: {} rules ({} skipped combinations)", u.rules.len(), u.skipped);
    Ok(u.rules)
}

/// Rows of the configured sample window that lie past every rule's warm-up.
fn sample_rows(panel: &ExcessReturnPanel, start: Option<NaiveDate>, end: Option<NaiveDate>) -> Result<Range<usize>, CliError> {
    let dates = panel.dates();
    let warm = panel.first_usable().iter().copied().max().unwrap_or(0);
    let lo = start.map_or(0, |s| dates.partition_point(|d| *d < s)).max(warm);
    let hi = end.map_or(dates.len(), |e| dates.partition_point(|d| *d <= e));
    if hi < lo + 2 {
        return Err(CoreError::InsufficientData(format!(
            "{} usable rows in the sample window after a {warm}-day warm-up",
            hi.saturating_sub(lo)
        ))
        .into());
    }
    Ok(lo..hi)
}

// -- rules ------------------------------------------------------------------

#[derive(Serialize)]
struct RuleRow<'a> {
    id: usize,
    family: &'a str,
    warmup: usize,
    params: String,
}

pub fn rules(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let rules = universe(cfg, out)?;
    out.write_csv(
        "rules.csv",
        rules.iter().map(|r| RuleRow {
            id: r.id,
            family: r.family().code(),
            warmup: r.warmup(),
            params: r.params_string(),
        }),
    )?;
    Ok(format!("{} rules", rules.len()))
}

// -- backtest ---------------------------------------------------------------

#[derive(Serialize)]
struct BacktestRow<'a> {
    market: &'a str,
    id: usize,
    family: &'a str,
    mean_excess: Option<f64>,
    sharpe: Option<f64>,
    annualized_return: Option<f64>,
    breakeven_bps: Option<f64>,
}

pub fn backtest(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let markets = load_markets(cfg, out)?;
    let rules = universe(cfg, out)?;
    let cost = cfg.cost.model()?;
    let mut rows = Vec::new();
    for m in &markets {
        let panel = build_panel(&m.data, &rules, cost)?;
        let window = sample_rows(&panel, cfg.data.start, cfg.data.end)?;
        for (j, r) in rules.iter().enumerate() {
            let perf = panel.performance(j, window.clone()).ok();
            rows.push(BacktestRow {
                market: &m.name,
                id: r.id,
                family: r.family().code(),
                mean_excess: perf.map(|p| p.mean_excess),
                sharpe: perf.and_then(|p| p.sharpe),
                annualized_return: perf.map(|p| p.annualized_return),
                breakeven_bps: panel.break_even_tc(j, window.clone()).map(bps),
            });
        }
    }
    let n = rows.len();
    out.write_csv("backtest.csv", rows)?;
    Ok(format!("{n} rule-market rows"))
}

// -- pvalues ----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PValueRow {
    id: usize,
    phi: f64,
    sign: i8,
    p: f64,
}

#[derive(Serialize)]
struct SupportRow {
    support_point: f64,
    count: usize,
}

fn market_p_values(
    m: &Market,
    rules: &[RuleSpec],
    cfg: &RunConfig,
    plan: &BootstrapPlan,
) -> Result<(ExcessReturnPanel, PValueSet, Range<usize>), CliError> {
    let panel = build_panel(&m.data, rules, cfg.cost.model()?)?;
    let rows = sample_rows(&panel, cfg.data.start, cfg.data.end)?;
    let window = panel.window(rows.clone())?;
    let (p, _) = bootstrap_p_values(&window, plan, Statistic::Sharpe)?;
    Ok((panel, p, rows))
}

pub fn pvalues(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let markets = load_markets(cfg, out)?;
    let rules = universe(cfg, out)?;
    let plan = cfg.plan()?;
    for m in &markets {
        let (_, p, rows) = market_p_values(m, &rules, cfg, &plan)?;
        info!("{}: p-values over {} rows", m.name, rows.len());
        out.write_csv(
            &format!("pvalues_{}.csv", m.name),
            rules.iter().enumerate().map(|(j, r)| PValueRow {
                id: r.id,
                phi: p.observed()[j],
                sign: p.signs()[j],
                p: p.p(j),
            }),
        )?;
        let hist = p.histogram();
        out.write_csv(
            &format!("support_{}.csv", m.name),
            hist.iter().enumerate().map(|(k, &count)| SupportRow {
                support_point: p.support_point(k + 1),
                count,
            }),
        )?;
    }
    Ok(format!("{} markets, B = {}", markets.len(), plan.replications))
}

// -- select -----------------------------------------------------------------

#[derive(Serialize)]
struct SelectionRow<'a> {
    id: usize,
    family: &'a str,
    p: f64,
    sign: i8,
    selected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectSummary {
    pub market: String,
    pub method: SelectMethod,
    pub lambda_star: Option<f64>,
    pub pi0: Option<f64>,
    pub gamma_star: Option<f64>,
    #[serde(rename = "R_plus")]
    pub r_plus: usize,
    #[serde(rename = "F_plus")]
    pub f_plus: Option<f64>,
    pub fdr_hat: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x}"))
}

impl SelectSummary {
    pub fn line(&self) -> String {
        format!(
            "{} {}: lambda_star={} pi0={} gamma_star={} R_plus={} F_plus={} fdr_hat={}",
            self.market,
            match self.method {
                SelectMethod::Dfdr => "dfdr",
                SelectMethod::Storey => "storey",
                SelectMethod::Rw => "rw",
            },
            fmt_opt(self.lambda_star),
            fmt_opt(self.pi0),
            fmt_opt(self.gamma_star),
            self.r_plus,
            fmt_opt(self.f_plus),
            fmt_opt(self.fdr_hat)
        )
    }
}

/// FDR-style selection on a p-value set; returns the selected positions.
fn select_fdr(p: &PValueSet, cfg: &RunConfig, market: &str) -> Result<(Vec<usize>, SelectSummary), CliError> {
    let s = &cfg.select;
    let (lambda, sel) = match s.method {
        SelectMethod::Dfdr => {
            let grid = LambdaGrid::equal_width(s.grid_width, p.replications())?;
            let (rb, sel) = dfdr_procedure(p, &grid, s.target)?;
            (rb.lambda_star, sel)
        }
        SelectMethod::Storey => (s.lambda, storey_fixed_select(p, s.lambda, s.target)?),
        SelectMethod::Rw => unreachable!("Romano-Wolf needs bootstrap statistics"),
    };
    let summary = SelectSummary {
        market: market.into(),
        method: s.method,
        lambda_star: Some(lambda),
        pi0: Some(sel.pi0),
        gamma_star: sel.gamma_star,
        r_plus: sel.discoveries,
        f_plus: Some(sel.false_estimate),
        fdr_hat: sel.fdr_hat,
    };
    Ok((sel.selected, summary))
}

fn read_p_values(path: &Path) -> Result<Vec<PValueRow>, CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<Result<Vec<PValueRow>, _>>()
        .map_err(csv_err)
}

pub fn select(cfg: &RunConfig, out: &mut OutputDir, pvalues_file: Option<&Path>) -> Result<Vec<SelectSummary>, CliError> {
    let rules = universe(cfg, out)?;
    let family_of: HashMap<usize, Family> = rules.iter().map(|r| (r.id, r.family())).collect();
    let mut summaries = Vec::new();
    let emit = |out: &mut OutputDir, name: &str, ids: &[usize], p: &PValueSet, selected: &[usize]| {
        let rows = ids.iter().enumerate().map(|(j, id)| SelectionRow {
            id: *id,
            family: family_of.get(id).map_or("", |f| f.code()),
            p: p.p(j),
            sign: p.signs()[j],
            selected: selected.binary_search(&j).is_ok(),
        });
        out.write_csv(&format!("selection_{name}.csv"), rows)
    };
    if let Some(path) = pvalues_file {
        if cfg.select.method == SelectMethod::Rw {
            return Err(CliError::Usage(
                "--method rw needs the bootstrap statistics: pass --prices instead of --pvalues".into(),
            ));
        }
        let rows = read_p_values(path)?;
        out.record_input(path)?;
        let p_vals: Vec<f64> = rows.iter().map(|r| r.p).collect();
        let signs: Vec<i8> = rows.iter().map(|r| r.sign).collect();
        let p = PValueSet::from_p_values(cfg.bootstrap.replications, &p_vals, &signs)?;
        let name = market_name(path);
        let (selected, summary) = select_fdr(&p, cfg, &name)?;
        let ids: Vec<usize> = rows.iter().map(|r| r.id).collect();
        emit(out, &name, &ids, &p, &selected)?;
        summaries.push(summary);
    } else {
        let markets = load_markets(cfg, out)?;
        let plan = cfg.plan()?;
        let ids: Vec<usize> = rules.iter().map(|r| r.id).collect();
        for m in &markets {
            let (selected, summary, p) = if cfg.select.method == SelectMethod::Rw {
                let panel = build_panel(&m.data, &rules, cfg.cost.model()?)?;
                let rows = sample_rows(&panel, cfg.data.start, cfg.data.end)?;
                let (p, stats) = bootstrap_p_values(&panel.window(rows)?, &plan, Statistic::Sharpe)?;
                let rw = rw_stepm_select(p.observed(), &stats, cfg.select.alpha)?;
                let summary = SelectSummary {
                    market: m.name.clone(),
                    method: SelectMethod::Rw,
                    lambda_star: None,
                    pi0: None,
                    gamma_star: None,
                    r_plus: rw.rejected.len(),
                    f_plus: None,
                    fdr_hat: None,
                };
                (rw.rejected, summary, p)
            } else {
                let (_, p, _) = market_p_values(m, &rules, cfg, &plan)?;
                let (sel, summary) = select_fdr(&p, cfg, &m.name)?;
                (sel, summary, p)
            };
            emit(out, &m.name, &ids, &p, &selected)?;
            summaries.push(summary);
        }
    }
    out.write_csv("summary.csv", summaries.iter())?;
    Ok(summaries)
}

// -- rolling family -----------------------------------------------------------

#[derive(Serialize)]
struct LongRow<'a> {
    year: i32,
    market: &'a str,
    metric: String,
    value: f64,
}

#[derive(Serialize)]
struct WindowRow<'a> {
    market: &'a str,
    window: usize,
    is_start: NaiveDate,
    oos_start: NaiveDate,
    oos_end: NaiveDate,
    lambda_star: f64,
    pi0: f64,
    gamma_star: Option<f64>,
    survivors: usize,
    survivor_pct: f64,
    is_annualized_return: Option<f64>,
    oos_annualized_return: Option<f64>,
    oos_annualized_sharpe: Option<f64>,
}

pub struct MarketRun {
    pub market: Market,
    pub panel: ExcessReturnPanel,
    pub run: RollingRun,
}

fn rolling_runs(cfg: &RunConfig, out: &mut OutputDir) -> Result<(Vec<MarketRun>, Vec<RuleSpec>), CliError> {
    let markets = load_markets(cfg, out)?;
    let rules = universe(cfg, out)?;
    let families: Vec<Family> = rules.iter().map(RuleSpec::family).collect();
    let plan = cfg.plan()?;
    let mut runs = Vec::new();
    for market in markets {
        let panel = build_panel(&market.data, &rules, cfg.cost.model()?)?;
        let run = harness::rolling_evaluate(&cfg.rolling, &panel, &families, &plan)?;
        info!(
            "{}: {} windows ({} inside the warm-up skipped)",
            market.name,
            run.windows.len(),
            run.skipped_warmup
        );
        runs.push(MarketRun { market, panel, run });
    }
    Ok((runs, rules))
}

fn long_rows<'a>(market: &'a str, metric: &str, by_year: BTreeMap<i32, (f64, usize)>) -> impl Iterator<Item = LongRow<'a>> {
    let metric = metric.to_string();
    by_year.into_iter().map(move |(year, (value, _))| LongRow {
        year,
        market,
        metric: metric.clone(),
        value,
    })
}

fn sorted(mut rows: Vec<LongRow<'_>>) -> Vec<LongRow<'_>> {
    rows.sort_by(|a, b| (a.market, a.year, &a.metric).cmp(&(b.market, b.year, &b.metric)));
    rows
}

pub fn rolling(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let (runs, _) = rolling_runs(cfg, out)?;
    let mut long = Vec::new();
    let mut windows = Vec::new();
    for r in &runs {
        let name = r.market.name.as_str();
        for a in annual_table(&r.run, &cfg.rolling) {
            long.push(LongRow {
                year: a.year,
                market: name,
                metric: a.metric,
                value: a.value,
            });
        }
        for w in &r.run.windows {
            windows.push(WindowRow {
                market: name,
                window: w.id,
                is_start: w.is_start,
                oos_start: w.oos_start,
                oos_end: w.oos_end,
                lambda_star: w.lambda_star,
                pi0: w.selection.pi0,
                gamma_star: w.selection.gamma_star,
                survivors: w.selected().len(),
                survivor_pct: w.survivor_pct(),
                is_annualized_return: w.is_performance.map(|p| p.annualized_return),
                oos_annualized_return: w.oos_performance.map(|p| p.annualized_return),
                oos_annualized_sharpe: w.oos_performance.and_then(|p| p.annualized_sharpe),
            });
        }
    }
    let n = windows.len();
    out.write_csv("rolling.csv", sorted(long))?;
    out.write_csv("windows.csv", windows)?;
    Ok(format!("{n} windows over {} markets", runs.len()))
}

#[derive(Serialize)]
struct PersistenceRow<'a> {
    market: &'a str,
    window: usize,
    oos_start: NaiveDate,
    horizon_months: usize,
    periods: Option<usize>,
}

pub fn persistence(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let (runs, _) = rolling_runs(cfg, out)?;
    let mut long = Vec::new();
    let mut detail = Vec::new();
    for r in &runs {
        let name = r.market.name.as_str();
        for &h in &cfg.persistence.horizons {
            let counts = harness::persistence(&r.run, &r.panel, &cfg.rolling, h)?;
            let by_window: HashMap<usize, Option<usize>> =
                r.run.windows.iter().map(|w| w.id).zip(counts.iter().copied()).collect();
            long.extend(long_rows(
                name,
                &format!("persistence_{h}m"),
                annual_means(&r.run.windows, |w| by_window[&w.id].map(|c| c as f64)),
            ));
            for (w, c) in r.run.windows.iter().zip(counts) {
                detail.push(PersistenceRow {
                    market: name,
                    window: w.id,
                    oos_start: w.oos_start,
                    horizon_months: h,
                    periods: c,
                });
            }
        }
    }
    out.write_csv("persistence.csv", sorted(long))?;
    out.write_csv("persistence_windows.csv", detail)?;
    Ok(format!("horizons {:?} months", cfg.persistence.horizons))
}

#[derive(Serialize)]
struct CrossRow<'a> {
    market: &'a str,
    window: usize,
    oos_start: NaiveDate,
    is_survivors: usize,
    oos_profitable: usize,
    full_sample: usize,
    intersection: usize,
    share_pct: Option<f64>,
    oos_annualized_return: Option<f64>,
}

pub fn crossval(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let (runs, _) = rolling_runs(cfg, out)?;
    let plan = cfg.plan()?;
    let mut long = Vec::new();
    let mut detail = Vec::new();
    for r in &runs {
        let name = r.market.name.as_str();
        let cvs = r
            .run
            .windows
            .par_iter()
            .map(|w| cross_validate(&cfg.rolling, &r.panel, w, &plan))
            .collect::<Result<Vec<_>, _>>()?;
        let by_window: HashMap<usize, &harness::CrossValidation> = cvs.iter().map(|c| (c.window, c)).collect();
        long.extend(long_rows(name, "cv_share_pct", annual_means(&r.run.windows, |w| by_window[&w.id].share_pct)));
        long.extend(long_rows(
            name,
            "cv_oos_annualized_return",
            annual_means(&r.run.windows, |w| by_window[&w.id].oos_annualized_return),
        ));
        long.extend(long_rows(
            name,
            "cv_intersection_size",
            annual_means(&r.run.windows, |w| Some(by_window[&w.id].intersection.len() as f64)),
        ));
        for (w, c) in r.run.windows.iter().zip(&cvs) {
            detail.push(CrossRow {
                market: name,
                window: w.id,
                oos_start: w.oos_start,
                is_survivors: c.is_survivors.len(),
                oos_profitable: c.oos_profitable.len(),
                full_sample: c.full_sample.len(),
                intersection: c.intersection.len(),
                share_pct: c.share_pct,
                oos_annualized_return: c.oos_annualized_return,
            });
        }
    }
    out.write_csv("crossval.csv", sorted(long))?;
    out.write_csv("crossval_windows.csv", detail)?;
    Ok(format!("cross-validation target {}", cfg.rolling.cv_target))
}

#[derive(Serialize)]
struct BreakEvenRow<'a> {
    market: &'a str,
    window: usize,
    oos_start: NaiveDate,
    id: usize,
    family: &'a str,
    is_sharpe: f64,
    is_breakeven_bps: Option<f64>,
    oos_breakeven_bps: Option<f64>,
}

pub fn breakeven(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let (runs, rules) = rolling_runs(cfg, out)?;
    let mut long = Vec::new();
    let mut detail = Vec::new();
    for r in &runs {
        let name = r.market.name.as_str();
        let best: HashMap<usize, harness::BreakEven> = r
            .run
            .windows
            .iter()
            .filter_map(|w| best_rule_break_even(&r.panel, w).map(|b| (w.id, b)))
            .collect();
        long.extend(long_rows(
            name,
            "breakeven_is_bps",
            annual_means(&r.run.windows, |w| best.get(&w.id).and_then(|b| b.is_tc).map(bps)),
        ));
        long.extend(long_rows(
            name,
            "breakeven_oos_bps",
            annual_means(&r.run.windows, |w| best.get(&w.id).and_then(|b| b.oos_tc).map(bps)),
        ));
        for w in &r.run.windows {
            if let Some(b) = best.get(&w.id) {
                detail.push(BreakEvenRow {
                    market: name,
                    window: w.id,
                    oos_start: w.oos_start,
                    id: rules[b.column].id,
                    family: rules[b.column].family().code(),
                    is_sharpe: b.is_sharpe,
                    is_breakeven_bps: b.is_tc.map(bps),
                    oos_breakeven_bps: b.oos_tc.map(bps),
                });
            }
        }
    }
    out.write_csv("breakeven.csv", sorted(long))?;
    out.write_csv("breakeven_windows.csv", detail)?;
    Ok(format!("{} best-rule windows", detail_len(&runs)))
}

fn detail_len(runs: &[MarketRun]) -> usize {
    runs.iter().map(|r| r.run.windows.len()).sum()
}

#[derive(Serialize)]
struct StressRow<'a> {
    market: &'a str,
    window: usize,
    oos_start: NaiveDate,
    class: StressClass,
    oos_annualized_return: Option<f64>,
}

pub fn stress(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let path = cfg
        .data
        .stress
        .as_ref()
        .ok_or_else(|| CliError::Usage("no stress index: pass --stress or set data.stress".into()))?;
    let index = load_stress_series(path)?;
    out.record_input(path)?;
    let (runs, _) = rolling_runs(cfg, out)?;
    let mut long = Vec::new();
    let mut detail = Vec::new();
    let mut missing = 0;
    for r in &runs {
        let name = r.market.name.as_str();
        let (high, low) = stress_split(&r.run.windows, &index, cfg.stress.rule, cfg.rolling.empty_as_risk_free);
        let counts = |m: &BTreeMap<i32, (f64, usize)>| m.iter().map(|(y, (_, n))| (*y, (*n as f64, *n))).collect();
        long.extend(long_rows(name, "windows_high", counts(&high)));
        long.extend(long_rows(name, "windows_low", counts(&low)));
        long.extend(long_rows(name, "oos_annualized_return_high", high));
        long.extend(long_rows(name, "oos_annualized_return_low", low));
        for (w, class) in r.run.windows.iter().zip(classify_stress(&r.run.windows, &index, cfg.stress.rule)) {
            missing += usize::from(class == StressClass::Missing);
            detail.push(StressRow {
                market: name,
                window: w.id,
                oos_start: w.oos_start,
                class,
                oos_annualized_return: w.oos_performance.map(|p| p.annualized_return),
            });
        }
    }
    out.write_csv("stress.csv", sorted(long))?;
    out.write_csv("stress_windows.csv", detail)?;
    Ok(format!("{missing} windows without stress coverage"))
}

// -- montecarlo ---------------------------------------------------------------

pub fn montecarlo(cfg: &RunConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let design = &cfg.montecarlo;
    info!(
        "power study: {} rules x {} days, {} replications of B = {}",
        design.n_rules, design.n_days, design.reps, design.replications
    );
    let res = run_power_study(design, None)?;
    out.write_csv("montecarlo_methods.csv", res.methods.iter())?;
    out.write_csv("montecarlo_proportions.csv", res.proportions.iter())?;
    out.write_csv("montecarlo_quartiles.csv", res.quartiles.iter())?;
    let mut msg = format!("{} pairs", design.pairs().len());
    if let (Some(d), Some(f)) = (
        res.method((3.0, -3.0), Method::Dfdr, 0.1),
        res.method((3.0, -3.0), Method::StoreyFixed, 0.1),
    ) {
        msg.push_str(&format!(
            "; (3,-3) at 10%: DFDR+ FDR+ {:.4} power {}, FDR power {}",
            d.fdr_plus,
            fmt_opt(d.power),
            fmt_opt(f.power)
        ));
    }
    if res.flagged_zero_sigma > 0 {
        msg.push_str(&format!("; {} planted columns had zero volatility", res.flagged_zero_sigma));
    }
    Ok(msg)
}
