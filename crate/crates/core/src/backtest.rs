//! After-cost excess returns, performance metrics and break-even costs.
//!
//! All reductions are plain sequential sums in row order, so results do not
//! depend on how work is scheduled.

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{ReturnSeries, RiskFreeSeries};
use crate::rules::SignalMatrix;
use crate::TRADING_DAYS_PER_YEAR;

/// One-way proportional transaction cost in return units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Decimal fraction, e.g. 0.0025 for 25 bps.
    pub tc: f64,
    /// Charge a reversal (long to short or back) as two one-way costs instead
    /// of one.
    #[serde(default)]
    pub flip_charges_both_legs: bool,
}

impl CostModel {
    pub fn new(tc: f64) -> Result<Self> {
        if !(tc.is_finite() && tc >= 0.0) {
            return Err(Error::Validation(format!("transaction cost must be >= 0, got {tc}")));
        }
        Ok(Self {
            tc,
            flip_charges_both_legs: false,
        })
    }

    pub fn from_bps(bps: f64) -> Result<Self> {
        Self::new(bps * 1e-4)
    }

    pub fn free() -> Self {
        Self {
            tc: 0.0,
            flip_charges_both_legs: false,
        }
    }

    /// Number of one-way costs charged when the held position moves from
    /// `prev` to `cur`.
    pub fn closures(&self, prev: i8, cur: i8) -> u8 {
        if prev == 0 || prev == cur {
            0
        } else if cur == -prev && self.flip_charges_both_legs {
            2
        } else {
            1
        }
    }
}

/// Daily excess returns of every rule, row-major (dates × rules).
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessReturnPanel {
    dates: Vec<NaiveDate>,
    ids: Vec<usize>,
    excess: Vec<f64>,
    closures: Vec<u8>,
    first_usable: Vec<usize>,
    cost: CostModel,
}

impl ExcessReturnPanel {
    /// Wraps externally produced excess returns (no closures recorded).
    pub fn from_rows(dates: Vec<NaiveDate>, ids: Vec<usize>, excess: Vec<f64>) -> Result<Self> {
        if excess.len() != dates.len() * ids.len() {
            return Err(Error::Shape(format!(
                "{} values for {} dates x {} rules",
                excess.len(),
                dates.len(),
                ids.len()
            )));
        }
        let l = ids.len();
        Ok(Self {
            closures: vec![0; excess.len()],
            first_usable: vec![0; l],
            dates,
            ids,
            excess,
            cost: CostModel::free(),
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_rules(&self) -> usize {
        self.ids.len()
    }

    pub fn cost(&self) -> CostModel {
        self.cost
    }

    /// First row of each rule after its warm-up.
    pub fn first_usable(&self) -> &[usize] {
        &self.first_usable
    }

    /// Usable days per rule.
    pub fn usable_days(&self) -> Vec<usize> {
        self.first_usable
            .iter()
            .map(|&f| self.n_rows().saturating_sub(f))
            .collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.excess
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let l = self.n_rules();
        &self.excess[t * l..(t + 1) * l]
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.excess[t * self.n_rules() + j]
    }

    pub fn closure(&self, t: usize, j: usize) -> u8 {
        self.closures[t * self.n_rules() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|t| self.get(t, j)).collect()
    }

    pub fn column_range(&self, j: usize, rows: Range<usize>) -> Vec<f64> {
        rows.map(|t| self.get(t, j)).collect()
    }

    /// Rows `rows` of every rule, as a new panel.
    pub fn window(&self, rows: Range<usize>) -> Result<ExcessReturnPanel> {
        if rows.start > rows.end || rows.end > self.n_rows() {
            return Err(Error::Shape(format!(
                "window {rows:?} outside 0..{}",
                self.n_rows()
            )));
        }
        let l = self.n_rules();
        Ok(ExcessReturnPanel {
            dates: self.dates[rows.clone()].to_vec(),
            ids: self.ids.clone(),
            excess: self.excess[rows.start * l..rows.end * l].to_vec(),
            closures: self.closures[rows.start * l..rows.end * l].to_vec(),
            first_usable: self
                .first_usable
                .iter()
                .map(|&f| f.saturating_sub(rows.start))
                .collect(),
            cost: self.cost,
        })
    }

    /// Replaces every cell; used to plant or perturb synthetic data.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> ExcessReturnPanel {
        let l = self.n_rules();
        let excess = self
            .excess
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k / l, k % l, v))
            .collect();
        ExcessReturnPanel {
            excess,
            ..self.clone()
        }
    }

    /// Performance of rule `j` over `rows`, ignoring rows before its warm-up
    /// ends.
    pub fn performance(&self, j: usize, rows: Range<usize>) -> Result<Performance> {
        let start = rows.start.max(self.first_usable[j]);
        Performance::from_returns(&self.column_range(j, start..rows.end.max(start)))
    }

    /// Closed-form break-even cost of rule `j` over `rows`: the one-way cost
    /// that sets its mean excess return to zero. `None` without closures.
    pub fn break_even_tc(&self, j: usize, rows: Range<usize>) -> Option<f64> {
        let tc = self.cost.tc;
        let (mut gross, mut closures) = (0.0, 0u64);
        for t in rows {
            let i = u64::from(self.closure(t, j));
            gross += self.get(t, j) + i as f64 * tc;
            closures += i;
        }
        (closures > 0).then(|| gross / closures as f64)
    }
}

/// `excess[t][j] = s_{j,t-1} r_t - I_{j,t} tc - ln(1 + r_f,t)`.
///
/// `I_{j,t}` fires on the first day a non-neutral position no longer applies
/// (exit or reversal). Opening from neutral is free; a reversal charges one
/// cost unless the cost model charges both legs.
pub fn excess_returns(
    signals: &SignalMatrix,
    returns: &ReturnSeries,
    risk_free: &RiskFreeSeries,
    cost: CostModel,
) -> Result<ExcessReturnPanel> {
    let n = signals.n_rows();
    if returns.len() != n || risk_free.len() != n {
        return Err(Error::Shape(format!(
            "signals have {n} rows, returns {}, risk-free {}",
            returns.len(),
            risk_free.len()
        )));
    }
    if signals.dates() != returns.dates.as_slice() || returns.dates.as_slice() != risk_free.dates() {
        return Err(Error::Alignment("signal, return and risk-free dates differ".into()));
    }
    let l = signals.n_rules();
    let mut excess = Vec::with_capacity(n * l);
    let mut closures = Vec::with_capacity(n * l);
    for t in 0..n {
        let r = returns.values[t];
        let bench = (1.0 + risk_free.daily()[t]).ln();
        let row = signals.row(t);
        for (j, &s) in row.iter().enumerate() {
            let prev = if t == 0 { 0 } else { signals.get(t - 1, j) };
            let i = cost.closures(prev, s);
            closures.push(i);
            excess.push(f64::from(s) * r - f64::from(i) * cost.tc - bench);
        }
    }
    Ok(ExcessReturnPanel {
        dates: signals.dates().to_vec(),
        ids: signals.rules().iter().map(|r| r.id).collect(),
        excess,
        closures,
        first_usable: signals.warmup().to_vec(),
        cost,
    })
}

/// Break-even cost from raw inputs: `Σ (s r - ln(1 + r_f)) / Σ I` over the
/// window. `prior` is the position held before the first row.
pub fn break_even_tc(
    positions: &[i8],
    prior: i8,
    returns: &[f64],
    rf_daily: &[f64],
    flip_charges_both_legs: bool,
) -> Result<Option<f64>> {
    if positions.len() != returns.len() || returns.len() != rf_daily.len() {
        return Err(Error::Shape("positions, returns and rates differ in length".into()));
    }
    let model = CostModel {
        tc: 0.0,
        flip_charges_both_legs,
    };
    let (mut gross, mut closures) = (0.0, 0u64);
    let mut prev = prior;
    for ((&s, &r), &rf) in positions.iter().zip(returns).zip(rf_daily) {
        gross += f64::from(s) * r - (1.0 + rf).ln();
        closures += u64::from(model.closures(prev, s));
        prev = s;
    }
    Ok((closures > 0).then(|| gross / closures as f64))
}

/// Mean/volatility summary of a daily excess-return stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub days: usize,
    /// Per-day mean excess return.
    pub mean_excess: f64,
    /// Per-day sample standard deviation (n - 1 denominator).
    pub stdev: f64,
    /// Per-day Sharpe ratio; `None` when the standard deviation is zero.
    pub sharpe: Option<f64>,
    pub annualized_return: f64,
    pub annualized_sharpe: Option<f64>,
}

impl Performance {
    pub fn from_returns(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "performance needs at least 2 observations, got {n}"
            )));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let stdev = var.sqrt();
        let sharpe = (stdev > 0.0).then(|| mean / stdev);
        Ok(Self {
            days: n,
            mean_excess: mean,
            stdev,
            sharpe,
            annualized_return: mean * TRADING_DAYS_PER_YEAR,
            annualized_sharpe: sharpe.map(|s| s * TRADING_DAYS_PER_YEAR.sqrt()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{RuleKind, RuleSpec};

    fn dates(n: usize) -> Vec<NaiveDate> {
        (0..n)
            .map(|i| NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(i as u64))
            .collect()
    }

    fn one_rule_setup(signal: &[i8], r: &[f64], rf: &[f64]) -> (SignalMatrix, ReturnSeries, RiskFreeSeries) {
        let n = signal.len();
        let rule = RuleSpec {
            id: 0,
            kind: RuleKind::Filter {
                threshold: 0.01,
                hold_days: 0,
            },
        };
        let d = dates(n);
        let sig = SignalMatrix::from_rows(d.clone(), vec![rule], signal.to_vec(), vec![0]).unwrap();
        let ret = ReturnSeries {
            dates: d.clone(),
            values: r.to_vec(),
        };
        let annual: Vec<f64> = rf.iter().map(|x| (1.0 + x).powf(TRADING_DAYS_PER_YEAR) - 1.0).collect();
        let rfs = RiskFreeSeries::from_annual(d, annual).unwrap();
        (sig, ret, rfs)
    }

    #[test]
    fn abstention_with_zero_benchmark_is_zero() {
        let (s, r, rf) = one_rule_setup(&[0, 0, 0], &[0.01, -0.02, 0.03], &[0.0; 3]);
        let p = excess_returns(&s, &r, &rf, CostModel::new(0.0025).unwrap()).unwrap();
        assert_eq!(p.column(0), vec![0.0; 3]);
    }

    #[test]
    fn single_long_day() {
        let (s, r, rf) = one_rule_setup(&[1], &[0.01], &[0.0]);
        let p = excess_returns(&s, &r, &rf, CostModel::free()).unwrap();
        assert_eq!(p.column(0), vec![0.01]);
    }

    #[test]
    fn closure_charged_on_exit_day() {
        let (s, r, rf) = one_rule_setup(&[1, 1, 0], &[0.01; 3], &[0.0; 3]);
        let p = excess_returns(&s, &r, &rf, CostModel::new(0.0025).unwrap()).unwrap();
        assert_eq!(p.column(0), vec![0.01, 0.01, -0.0025]);
        assert_eq!((0..3).map(|t| p.closure(t, 0)).collect::<Vec<_>>(), vec![0, 0, 1]);
    }

    #[test]
    fn reversal_charges_one_leg_by_default() {
        let (s, r, rf) = one_rule_setup(&[-1, 1, 1], &[0.01; 3], &[0.0; 3]);
        let one = excess_returns(&s, &r, &rf, CostModel::new(0.001).unwrap()).unwrap();
        assert_eq!(one.closure(1, 0), 1);
        let both = CostModel {
            tc: 0.001,
            flip_charges_both_legs: true,
        };
        let two = excess_returns(&s, &r, &rf, both).unwrap();
        assert_eq!(two.closure(1, 0), 2);
        assert!((two.get(1, 0) - (0.01 - 0.002)).abs() < 1e-18);
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let (s, mut r, rf) = one_rule_setup(&[0, 0], &[0.0, 0.0], &[0.0; 2]);
        r.values.pop();
        r.dates.pop();
        assert!(matches!(excess_returns(&s, &r, &rf, CostModel::free()), Err(Error::Shape(_))));
    }

    #[test]
    fn performance_examples() {
        let zero = Performance::from_returns(&[0.0; 10]).unwrap();
        assert_eq!(zero.mean_excess, 0.0);
        assert_eq!(zero.sharpe, None);
        assert_eq!(zero.annualized_sharpe, None);

        let sym = Performance::from_returns(&[0.01, -0.01]).unwrap();
        assert_eq!(sym.mean_excess, 0.0);
        assert_eq!(sym.sharpe, Some(0.0));

        assert!(Performance::from_returns(&[0.1]).is_err());
    }

    #[test]
    fn annualisation() {
        // mean 0.0005 and sample stdev 0.01 exactly: +/- 0.01 around the mean
        // with n - 1 scaling over two points gives sqrt(2) * 0.01 / sqrt(2).
        let a = 0.01 / 2f64.sqrt();
        let p = Performance::from_returns(&[0.0005 + a, 0.0005 - a]).unwrap();
        assert!((p.mean_excess - 0.0005).abs() < 1e-15);
        assert!((p.stdev - 0.01).abs() < 1e-15);
        assert!((p.annualized_return - 0.13).abs() < 1e-12);
        let sr = p.annualized_sharpe.unwrap();
        assert!((sr - 0.05 * 260f64.sqrt()).abs() < 1e-12);
        assert!((sr - 0.806).abs() < 1e-3);
    }

    #[test]
    fn break_even_examples() {
        // gross sum 0.02 with two closures
        let pos = [1, 0, -1, 0];
        let r = [0.015, 0.0, -0.005, 0.0];
        assert_eq!(break_even_tc(&pos, 0, &r, &[0.0; 4], false).unwrap(), Some(0.01));
        let r0 = [0.0; 4];
        assert_eq!(break_even_tc(&pos, 0, &r0, &[0.0; 4], false).unwrap(), Some(0.0));
        assert_eq!(break_even_tc(&[1, 1, 1], 0, &[0.01; 3], &[0.0; 3], false).unwrap(), None);
    }

    #[test]
    fn panel_break_even_matches_raw_formula() {
        let pos = [0, 1, 1, -1, -1, 0, 1, 0];
        let r = [0.01, 0.02, -0.01, -0.03, 0.005, 0.01, 0.02, -0.01];
        let rf = [1e-4; 8];
        let (s, ret, rfs) = one_rule_setup(&pos, &r, &rf);
        let panel = excess_returns(&s, &ret, &rfs, CostModel::new(0.0025).unwrap()).unwrap();
        let a = panel.break_even_tc(0, 0..8).unwrap();
        let b = break_even_tc(&pos, 0, &r, rfs.daily(), false).unwrap().unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn window_shifts_warmup() {
        let p = ExcessReturnPanel::from_rows(dates(4), vec![7], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let w = p.window(1..3).unwrap();
        assert_eq!(w.column(0), vec![0.2, 0.3]);
        assert_eq!(w.ids(), &[7]);
        assert!(p.window(2..5).is_err());
    }
}
