//! Power study on synthetic panels with planted out- and underperformers.
//!
//! Each replication resamples a base panel with one shared stationary
//! bootstrap row, removes every column's mean, then shifts the planted
//! columns by their target daily Sharpe ratio times their own standard
//! deviation. Every Sharpe pair of a replication reuses the same resample
//! and the same bootstrap draws.

use chrono::{Datelike, NaiveDate, Weekday};
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};

use crate::backtest::{excess_returns, CostModel, ExcessReturnPanel};
use crate::bootstrap::{bootstrap_row, discrete_p_values, BootstrapMoments, BootstrapPlan, Statistic};
use crate::error::{Error, Result};
use crate::mht::{
    dfdr_select, estimate_proportions, right_boundary_lambda, rw_stepm_select, storey_fixed_select,
    DfdrSelection, LambdaGrid,
};
use crate::market_data::{log_returns, PriceSeries, RiskFreeSeries};
use crate::rng::{derive_seed, stream_rng};
use crate::rules::{enumerate_universe, generate_signal_matrix, UniverseGrid, MAX_LOOKBACK};
use crate::TRADING_DAYS_PER_YEAR;

const RESAMPLE_STREAM: u64 = 0x7265_7361_6d70_6c65;
const BOOTSTRAP_STREAM: u64 = 0x626f_6f74_7374_7270;
const BASE_STREAM: u64 = 0x6261_7365_7061_6e6c;
/// Daily volatility of the synthetic markets; puts the median planted
/// outperformer near 16% a year at an annualised Sharpe ratio of 2.
const BASE_MARKET_VOL: f64 = 0.0066;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimDesign {
    pub n_rules: usize,
    pub n_days: usize,
    pub pi0: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
    /// Annualised Sharpe ratios planted in the outperformers.
    pub sr_positive: Vec<f64>,
    /// Annualised Sharpe ratios planted in the underperformers (negative).
    pub sr_negative: Vec<f64>,
    pub reps: usize,
    pub expected_block: f64,
    pub replications: usize,
    pub seed: u64,
    pub targets: Vec<f64>,
    pub rw_alphas: Vec<f64>,
    pub fixed_lambda: f64,
    pub grid_width: f64,
    pub proportion_cutoff: f64,
}

impl Default for SimDesign {
    /// Reduced scale: 2000 rules, 100 replications, B = 200.
    fn default() -> Self {
        Self {
            n_rules: 2000,
            n_days: 155,
            pi0: 0.5,
            pi_plus: 0.2,
            pi_minus: 0.3,
            sr_positive: vec![2.0, 3.0, 4.0],
            sr_negative: vec![-2.0, -3.0, -4.0],
            reps: 100,
            expected_block: 10.0,
            replications: 200,
            seed: 0,
            targets: vec![0.1, 0.2],
            rw_alphas: vec![0.05, 0.2],
            fixed_lambda: 0.6,
            grid_width: 0.05,
            proportion_cutoff: 0.4,
        }
    }
}

impl SimDesign {
    /// The full-size study: 21,195 rules, 1000 replications, B = 1000.
    pub fn full_scale() -> Self {
        Self {
            n_rules: 21_195,
            reps: 1000,
            replications: 1000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.n_rules == 0 || self.n_days < 2 || self.reps == 0 {
            return fail("design needs rules, at least 2 days and one replication".into());
        }
        let props = [self.pi0, self.pi_plus, self.pi_minus];
        if props.iter().any(|p| !(0.0..=1.0).contains(p)) || (props.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return fail(format!("proportions {props:?} must be in [0, 1] and sum to 1"));
        }
        if self.sr_positive.is_empty() || self.sr_negative.is_empty() {
            return fail("need at least one positive and one negative Sharpe target".into());
        }
        let rates = self.targets.iter().chain(&self.rw_alphas).chain([&self.fixed_lambda, &self.proportion_cutoff]);
        if let Some(r) = rates.into_iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return fail(format!("rate {r} must lie in (0, 1)"));
        }
        BootstrapPlan::new(self.replications, self.expected_block, self.seed)?;
        Ok(())
    }

    /// `(positive, negative)` annualised Sharpe pairs in table order.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.sr_positive
            .iter()
            .flat_map(|&p| self.sr_negative.iter().map(move |&n| (p, n)))
            .collect()
    }

    fn counts(&self) -> (usize, usize) {
        let l = self.n_rules as f64;
        let plus = (self.pi_plus * l).round() as usize;
        let minus = ((self.pi_minus * l).round() as usize).min(self.n_rules - plus);
        (plus, minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Neutral,
    Positive,
    Negative,
}

/// Labels contiguous blocks of the base panel ranked by column mean: the
/// highest means become outperformers, the lowest underperformers.
pub fn assign_labels(base: &ExcessReturnPanel, design: &SimDesign) -> Vec<Truth> {
    let l = base.n_rules();
    let means: Vec<f64> = (0..l).map(|j| column_moments(&base.column(j)).0).collect();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let (plus, minus) = design.counts();
    let mut labels = vec![Truth::Neutral; l];
    for &j in &order[..plus] {
        labels[j] = Truth::Positive;
    }
    for &j in &order[l - minus..] {
        labels[j] = Truth::Negative;
    }
    labels
}

/// Mean and sample standard deviation, two-pass.
fn column_moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

/// Synthetic daily log prices: GARCH(1,1) with Student-t(4) innovations and
/// unconditional daily volatility `vol`.
pub fn synthetic_prices(n: usize, vol: f64, seed: u64) -> Result<PriceSeries> {
    let mut rng = stream_rng(seed, BASE_STREAM);
    let t4 = StudentT::new(4.0).expect("valid t");
    let (alpha, beta) = (0.08, 0.9);
    let omega = vol * vol * (1.0 - alpha - beta);
    let mut h = vol * vol;
    let mut prev = 0.0f64;
    let mut log_p = 100f64.ln();
    let mut prices = Vec::with_capacity(n);
    prices.push(log_p.exp());
    for _ in 1..n {
        h = omega + alpha * prev * prev + beta * h;
        // t(4) has variance 2
        prev = h.sqrt() * t4.sample(&mut rng) * 0.5f64.sqrt();
        log_p += prev;
        prices.push(log_p.exp());
    }
    let dates = weekdays_from(NaiveDate::from_ymd_opt(2012, 1, 2).expect("valid date"), n);
    PriceSeries::new(dates, prices)
}

/// Shipped stand-in for an empirical rule panel: the default rule universe
/// run on independent synthetic markets (0.66% daily volatility, 2% annual
/// risk-free rate, 25 bps costs), keeping the last `n_days` after the
/// longest warm-up. Columns without variation in the window are skipped,
/// and markets are added until `n_rules` columns exist. Family structure
/// and sparse positions give the cross-sectional dependence and
/// heavy-tailed, rule-specific return distributions of real rule returns.
pub fn synthetic_base_panel(n_rules: usize, n_days: usize, seed: u64) -> Result<ExcessReturnPanel> {
    if n_rules == 0 || n_days < 2 {
        return Err(Error::Validation("base panel needs rules and at least 2 days".into()));
    }
    let universe = enumerate_universe(&UniverseGrid::default())?;
    let cost = CostModel::new(0.0025)?;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n_rules);
    let mut market = 0u64;
    while columns.len() < n_rules {
        if market as usize > n_rules {
            return Err(Error::InsufficientData("synthetic markets produce no usable rules".into()));
        }
        let prices = synthetic_prices(MAX_LOOKBACK + n_days + 2, BASE_MARKET_VOL, derive_seed(seed, market))?;
        market += 1;
        let signals = generate_signal_matrix(&universe.rules, &prices)?;
        let returns = log_returns(&prices)?;
        let rf = RiskFreeSeries::from_annual(returns.dates.clone(), vec![0.02; returns.len()])?;
        let panel = excess_returns(&signals, &returns, &rf, cost)?;
        let window = panel.window(panel.n_rows() - n_days..panel.n_rows())?;
        for j in 0..window.n_rules() {
            let col = window.column(j);
            if col.iter().any(|&v| v != col[0]) {
                columns.push(col);
                if columns.len() == n_rules {
                    break;
                }
            }
        }
    }
    let data = (0..n_days).flat_map(|t| columns.iter().map(move |c| c[t])).collect();
    let dates = weekdays_from(NaiveDate::from_ymd_opt(2013, 7, 1).expect("valid date"), n_days);
    ExcessReturnPanel::from_rows(dates, (0..n_rules).collect(), data)
}

/// One synthetic replication with its labels.
#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub panel: ExcessReturnPanel,
    pub labels: Vec<Truth>,
    /// Planted columns left neutral because their resampled σ̂ is zero.
    pub flagged: Vec<usize>,
}

fn resample(base: &ExcessReturnPanel, design: &SimDesign, rep: usize) -> Result<ExcessReturnPanel> {
    let n = base.n_rows();
    let idx = bootstrap_row(n, design.expected_block, derive_seed(design.seed, RESAMPLE_STREAM), rep);
    let l = base.n_rules();
    let mut data = Vec::with_capacity(n * l);
    for &t in &idx {
        data.extend_from_slice(base.row(t));
    }
    ExcessReturnPanel::from_rows(base.dates().to_vec(), base.ids().to_vec(), data)
}

fn planted_shift(truth: Truth, sigma: f64, pair: (f64, f64)) -> f64 {
    let daily = |sr: f64| sr / TRADING_DAYS_PER_YEAR.sqrt();
    match truth {
        Truth::Neutral => 0.0,
        Truth::Positive => daily(pair.0) * sigma,
        Truth::Negative => -daily(pair.1).abs() * sigma,
    }
}

/// Resample, recentre and plant one replication for the annualised Sharpe
/// pair `(positive, negative)`.
pub fn simulate_panel(
    base: &ExcessReturnPanel,
    design: &SimDesign,
    rep: usize,
    pair: (f64, f64),
) -> Result<SimulatedPanel> {
    let labels = assign_labels(base, design);
    let x = resample(base, design, rep)?;
    let l = x.n_rules();
    let mut flagged = Vec::new();
    let columns: Vec<Vec<f64>> = (0..l)
        .map(|j| {
            let col = x.column(j);
            let (mean, _) = column_moments(&col);
            let centred: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let (_, sigma) = column_moments(&centred);
            if sigma == 0.0 && labels[j] != Truth::Neutral {
                flagged.push(j);
            }
            let shift = planted_shift(labels[j], sigma, pair);
            centred.into_iter().map(|v| v + shift).collect()
        })
        .collect();
    let n = x.n_rows();
    let data = (0..n).flat_map(|t| columns.iter().map(move |c| c[t])).collect();
    Ok(SimulatedPanel {
        panel: ExcessReturnPanel::from_rows(x.dates().to_vec(), x.ids().to_vec(), data)?,
        labels,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "DFDR+")]
    Dfdr,
    #[serde(rename = "FDR")]
    StoreyFixed,
    #[serde(rename = "RW")]
    RomanoWolf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Dfdr => "DFDR+",
            Method::StoreyFixed => "FDR",
            Method::RomanoWolf => "RW",
        })
    }
}

/// Averages over replications for one (pair, method, level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub sr_pos: f64,
    pub sr_neg: f64,
    pub method: Method,
    pub level: f64,
    /// FDR⁺ estimate recomputed with the true null proportion; for RW the
    /// false discovery proportion.
    pub fdr_plus: f64,
    /// Share of selected rules that are not true outperformers.
    pub false_discovery_proportion: f64,
    /// Share of true outperformers selected; `None` without outperformers.
    pub power: Option<f64>,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionRow {
    pub sr_pos: f64,
    pub sr_neg: f64,
    pub lambda_star: f64,
    pub pi0: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
    /// Replications where the bin-count rule chose a different λ.
    pub rule_disagreements: usize,
}

/// Quartiles of annualised mean excess returns of one planted group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileRow {
    pub sr_pos: f64,
    pub sr_neg: f64,
    pub group: Truth,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub design: SimDesign,
    pub methods: Vec<MethodRow>,
    pub proportions: Vec<ProportionRow>,
    pub quartiles: Vec<QuartileRow>,
    /// Planted columns left neutral for zero σ̂, summed over replications.
    pub flagged_zero_sigma: usize,
}

impl SimOutcome {
    pub fn method(&self, pair: (f64, f64), method: Method, level: f64) -> Option<&MethodRow> {
        self.methods
            .iter()
            .find(|r| (r.sr_pos, r.sr_neg) == pair && r.method == method && (r.level - level).abs() < 1e-12)
    }

    pub fn proportion(&self, pair: (f64, f64)) -> Option<&ProportionRow> {
        self.proportions.iter().find(|r| (r.sr_pos, r.sr_neg) == pair)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Default, Clone)]
struct Tally {
    fdr_plus: f64,
    fdp: f64,
    power: f64,
    size: f64,
}

struct Scorer<'a> {
    labels: &'a [Truth],
    n_pos: usize,
    pi0_true: f64,
}

impl Scorer<'_> {
    fn score(&self, selected: &[usize], fdr_plus: Option<f64>) -> Tally {
        let tp = selected.iter().filter(|&&j| self.labels[j] == Truth::Positive).count();
        let size = selected.len();
        let fdp = if size == 0 { 0.0 } else { (size - tp) as f64 / size as f64 };
        Tally {
            fdr_plus: fdr_plus.unwrap_or(fdp),
            fdp,
            power: if self.n_pos == 0 { 0.0 } else { tp as f64 / self.n_pos as f64 },
            size: size as f64,
        }
    }

    fn score_fdr(&self, sel: &DfdrSelection) -> Tally {
        let l = self.labels.len() as f64;
        let realised = match sel.gamma_star {
            Some(g) if sel.discoveries > 0 => self.pi0_true * l * g / 2.0 / sel.discoveries as f64,
            _ => 0.0,
        };
        self.score(&sel.selected, Some(realised))
    }
}

/// Runs the study on `base`, or on the shipped synthetic panel when `None`.
pub fn run_power_study(design: &SimDesign, base: Option<&ExcessReturnPanel>) -> Result<SimOutcome> {
    design.validate()?;
    let owned;
    let base = match base {
        Some(b) => {
            if b.n_rules() != design.n_rules || b.n_rows() != design.n_days {
                return Err(Error::Shape(format!(
                    "base panel is {} days x {} rules, design expects {} x {}",
                    b.n_rows(),
                    b.n_rules(),
                    design.n_days,
                    design.n_rules
                )));
            }
            b
        }
        None => {
            owned = synthetic_base_panel(design.n_rules, design.n_days, design.seed)?;
            &owned
        }
    };
    let labels = assign_labels(base, design);
    let n_pos = labels.iter().filter(|&&t| t == Truth::Positive).count();
    let n_neutral = labels.iter().filter(|&&t| t == Truth::Neutral).count();
    let scorer = Scorer {
        labels: &labels,
        n_pos,
        pi0_true: n_neutral as f64 / labels.len() as f64,
    };
    let grid = LambdaGrid::equal_width(design.grid_width, design.replications)?;
    let pairs = design.pairs();
    let l = design.n_rules;

    let n_levels = 2 * design.targets.len() + design.rw_alphas.len();
    let mut tallies = vec![vec![Tally::default(); n_levels]; pairs.len()];
    let mut props = vec![(0.0, 0.0, 0.0, 0.0, 0usize); pairs.len()];
    let mut quart = vec![[[0.0; 3]; 2]; pairs.len()];
    let mut flagged = 0usize;

    for rep in 0..design.reps {
        let x = resample(base, design, rep)?;
        let plan = BootstrapPlan::new(
            design.replications,
            design.expected_block,
            derive_seed(design.seed ^ BOOTSTRAP_STREAM, rep as u64),
        )?;
        let moments = BootstrapMoments::compute(&x, &plan)?;
        let stats: Vec<(f64, f64)> = (0..l).map(|j| column_moments(&x.column(j))).collect();
        for (j, &(_, sigma)) in stats.iter().enumerate() {
            if sigma == 0.0 && labels[j] != Truth::Neutral {
                flagged += pairs.len();
            }
        }
        for (k, &pair) in pairs.iter().enumerate() {
            let offsets: Vec<f64> = stats
                .iter()
                .zip(&labels)
                .map(|(&(mean, sigma), &truth)| planted_shift(truth, sigma, pair) - mean)
                .collect();
            let observed = moments.observed(Statistic::Sharpe, Some(&offsets));
            let boot = moments.statistics(Statistic::Sharpe, Some(&offsets));
            let p = discrete_p_values(&observed, &boot)?;
            let rb = right_boundary_lambda(&p, &grid);

            let mut slot = 0;
            for &target in &design.targets {
                let sel = dfdr_select(&p, rb.pi0, target)?;
                add(&mut tallies[k][slot], scorer.score_fdr(&sel));
                let fixed = storey_fixed_select(&p, design.fixed_lambda, target)?;
                add(&mut tallies[k][slot + 1], scorer.score_fdr(&fixed));
                slot += 2;
            }
            for &alpha in &design.rw_alphas {
                let rw = rw_stepm_select(&observed, &boot, alpha)?;
                add(&mut tallies[k][slot], scorer.score(&rw.rejected, None));
                slot += 1;
            }

            let e = estimate_proportions(&p, rb.pi0, design.proportion_cutoff)?;
            let pr = &mut props[k];
            pr.0 += rb.lambda_star;
            pr.1 += e.pi0;
            pr.2 += e.pi_plus;
            pr.3 += e.pi_minus;
            pr.4 += usize::from(!rb.rules_agree);

            let means = moments.observed(Statistic::MeanExcess, Some(&offsets));
            for (g, truth) in [Truth::Positive, Truth::Negative].into_iter().enumerate() {
                let mut v: Vec<f64> = means
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &t)| t == truth)
                    .map(|(&m, _)| m * TRADING_DAYS_PER_YEAR)
                    .collect();
                v.sort_by(f64::total_cmp);
                for (slot, q) in [0.25, 0.5, 0.75].into_iter().enumerate() {
                    quart[k][g][slot] += quantile(&v, q);
                }
            }
        }
    }

    let reps = design.reps as f64;
    let mut methods = Vec::new();
    let mut proportions = Vec::new();
    let mut quartiles = Vec::new();
    for (k, &(sr_pos, sr_neg)) in pairs.iter().enumerate() {
        let mut levels = Vec::new();
        for &t in &design.targets {
            levels.push((Method::Dfdr, t));
            levels.push((Method::StoreyFixed, t));
        }
        levels.extend(design.rw_alphas.iter().map(|&a| (Method::RomanoWolf, a)));
        for (slot, (method, level)) in levels.into_iter().enumerate() {
            let t = &tallies[k][slot];
            methods.push(MethodRow {
                sr_pos,
                sr_neg,
                method,
                level,
                fdr_plus: t.fdr_plus / reps,
                false_discovery_proportion: t.fdp / reps,
                power: (n_pos > 0).then(|| t.power / reps),
                size: t.size / reps,
            });
        }
        let pr = props[k];
        proportions.push(ProportionRow {
            sr_pos,
            sr_neg,
            lambda_star: pr.0 / reps,
            pi0: pr.1 / reps,
            pi_plus: pr.2 / reps,
            pi_minus: pr.3 / reps,
            rule_disagreements: pr.4,
        });
        for (g, group) in [Truth::Positive, Truth::Negative].into_iter().enumerate() {
            let q = quart[k][g];
            quartiles.push(QuartileRow {
                sr_pos,
                sr_neg,
                group,
                q1: q[0] / reps,
                median: q[1] / reps,
                q3: q[2] / reps,
            });
        }
    }
    Ok(SimOutcome {
        design: design.clone(),
        methods,
        proportions,
        quartiles,
        flagged_zero_sigma: flagged,
    })
}

fn add(acc: &mut Tally, t: Tally) {
    acc.fdr_plus += t.fdr_plus;
    acc.fdp += t.fdp;
    acc.power += t.power;
    acc.size += t.size;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::observed_statistics;

    fn small() -> SimDesign {
        SimDesign {
            n_rules: 60,
            n_days: 80,
            reps: 3,
            replications: 40,
            sr_positive: vec![3.0],
            sr_negative: vec![-3.0],
            seed: 11,
            ..SimDesign::default()
        }
    }

    #[test]
    fn labels_are_contiguous_in_rank() {
        let d = small();
        let base = synthetic_base_panel(d.n_rules, d.n_days, 1).unwrap();
        let labels = assign_labels(&base, &d);
        assert_eq!(labels.iter().filter(|&&t| t == Truth::Positive).count(), 12);
        assert_eq!(labels.iter().filter(|&&t| t == Truth::Negative).count(), 18);
        let means: Vec<f64> = (0..60).map(|j| column_moments(&base.column(j)).0).collect();
        let min_pos = (0..60).filter(|&j| labels[j] == Truth::Positive).map(|j| means[j]).fold(f64::INFINITY, f64::min);
        let max_rest = (0..60).filter(|&j| labels[j] != Truth::Positive).map(|j| means[j]).fold(f64::NEG_INFINITY, f64::max);
        assert!(min_pos >= max_rest);
    }

    #[test]
    fn planted_shift_magnitude() {
        let s = planted_shift(Truth::Positive, 0.01, (3.0, -3.0));
        assert!((s - 3.0 / 260f64.sqrt() * 0.01).abs() < 1e-15);
        assert!((s - 1.86e-3).abs() < 1e-5);
        assert!(planted_shift(Truth::Negative, 0.01, (3.0, -2.0)) < 0.0);
    }

    #[test]
    fn recentring_and_shift_are_exact() {
        let d = small();
        let base = synthetic_base_panel(d.n_rules, d.n_days, 5).unwrap();
        let zero = simulate_panel(&base, &d, 0, (0.0, 0.0)).unwrap();
        for j in 0..d.n_rules {
            assert!(column_moments(&zero.panel.column(j)).0.abs() < 1e-12);
        }
        let sim = simulate_panel(&base, &d, 0, (3.0, -2.0)).unwrap();
        let sr = observed_statistics(&sim.panel, Statistic::Sharpe).unwrap();
        for (j, &t) in sim.labels.iter().enumerate() {
            let col = sim.panel.column(j);
            let (m, s) = column_moments(&col);
            let direct = m / s;
            match t {
                Truth::Positive => assert!((direct - 3.0 / 260f64.sqrt()).abs() < 1e-10),
                Truth::Negative => assert!((direct + 2.0 / 260f64.sqrt()).abs() < 1e-10),
                Truth::Neutral => assert!(m.abs() < 1e-12),
            }
            assert!((sr[j] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn study_is_deterministic_and_well_formed() {
        let d = small();
        let a = run_power_study(&d, None).unwrap();
        let b = run_power_study(&d, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.methods.len(), 6);
        for r in &a.methods {
            let p = r.power.unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(r.size <= d.n_rules as f64);
        }
    }

    #[test]
    fn all_neutral_design_has_no_power() {
        let d = SimDesign {
            pi0: 1.0,
            pi_plus: 0.0,
            pi_minus: 0.0,
            ..small()
        };
        let out = run_power_study(&d, None).unwrap();
        assert!(out.methods.iter().all(|r| r.power.is_none()));
        // recentred neutral columns have sample statistics near zero
        assert!(out.methods.iter().all(|r| r.size < 1.0));
    }

    #[test]
    fn invalid_design() {
        let d = SimDesign {
            pi0: 0.6,
            ..small()
        };
        assert!(d.validate().is_err());
        assert!(run_power_study(&small(), Some(&synthetic_base_panel(10, 80, 0).unwrap())).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }
}
