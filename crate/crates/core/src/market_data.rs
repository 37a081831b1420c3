//! Price, risk-free and stress series: loading, validation, alignment and
//! log returns.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::TRADING_DAYS_PER_YEAR;

/// Annual rate above which a quote is probably a percentage that was not
/// scaled to a decimal fraction.
pub const DEFAULT_RATE_SANITY_THRESHOLD: f64 = 0.25;

/// A dated sequence of values, the common currency of [`align`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { dates, values })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    fn retain_dates(&self, keep: &BTreeSet<NaiveDate>) -> TimeSeries {
        let (dates, values) = self
            .dates
            .iter()
            .zip(&self.values)
            .filter(|(d, _)| keep.contains(d))
            .map(|(d, v)| (*d, *v))
            .unzip();
        TimeSeries { dates, values }
    }
}

/// Close prices of one index.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        let ts = TimeSeries::new(dates, prices)?;
        Self::try_from(ts)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn to_time_series(&self) -> TimeSeries {
        TimeSeries {
            dates: self.dates.clone(),
            values: self.prices.clone(),
        }
    }
}

impl TryFrom<TimeSeries> for PriceSeries {
    type Error = Error;

    fn try_from(ts: TimeSeries) -> Result<Self> {
        if ts.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a price series needs at least 2 observations, got {}",
                ts.len()
            )));
        }
        if let Some((d, p)) = ts
            .dates
            .iter()
            .zip(&ts.values)
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::Validation(format!(
                "price on {d} must be positive, got {p}"
            )));
        }
        Ok(Self {
            dates: ts.dates,
            prices: ts.values,
        })
    }
}

/// Daily log returns; `values[i]` is the return realised on `dates[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `r_t = ln(P_t / P_{t-1})`, dated at `t`.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData(
            "log returns need at least 2 prices".into(),
        ));
    }
    let values = prices
        .prices
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    Ok(ReturnSeries {
        dates: prices.dates[1..].to_vec(),
        values,
    })
}

/// Converts an annual rate (decimal fraction) to its daily equivalent,
/// `(1 + S)^(1/260) - 1`.
pub fn daily_risk_free(annual: f64) -> Result<f64> {
    if !annual.is_finite() || annual <= -1.0 {
        return Err(Error::Validation(format!(
            "annual rate must be finite and greater than -1, got {annual}"
        )));
    }
    Ok((1.0 + annual).powf(1.0 / TRADING_DAYS_PER_YEAR) - 1.0)
}

/// Risk-free quotes, annual and daily.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskFreeSeries {
    dates: Vec<NaiveDate>,
    annual: Vec<f64>,
    daily: Vec<f64>,
}

impl RiskFreeSeries {
    pub fn from_annual(dates: Vec<NaiveDate>, annual: Vec<f64>) -> Result<Self> {
        let ts = TimeSeries::new(dates, annual)?;
        let daily = ts
            .values
            .iter()
            .map(|&s| daily_risk_free(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dates: ts.dates,
            annual: ts.values,
            daily,
        })
    }

    /// A zero-rate benchmark on the given dates.
    pub fn zero(dates: Vec<NaiveDate>) -> Self {
        let n = dates.len();
        Self {
            dates,
            annual: vec![0.0; n],
            daily: vec![0.0; n],
        }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn annual(&self) -> &[f64] {
        &self.annual
    }

    pub fn daily(&self) -> &[f64] {
        &self.daily
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Indices of quotes above `threshold`, typically percentages that were
    /// never divided by 100.
    pub fn suspicious_quotes(&self, threshold: f64) -> Vec<usize> {
        self.annual
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > threshold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Carries the last available quote forward onto `dates`. Target dates
    /// before the first quote are omitted, so a later [`align`] drops them.
    pub fn forward_fill(&self, dates: &[NaiveDate]) -> RiskFreeSeries {
        let mut out_dates = Vec::with_capacity(dates.len());
        let mut annual = Vec::with_capacity(dates.len());
        let mut daily = Vec::with_capacity(dates.len());
        let mut k = 0usize;
        let mut last: Option<usize> = None;
        for &d in dates {
            while k < self.dates.len() && self.dates[k] <= d {
                last = Some(k);
                k += 1;
            }
            if let Some(i) = last {
                out_dates.push(d);
                annual.push(self.annual[i]);
                daily.push(self.daily[i]);
            }
        }
        RiskFreeSeries {
            dates: out_dates,
            annual,
            daily,
        }
    }

    fn to_time_series(&self) -> TimeSeries {
        TimeSeries {
            dates: self.dates.clone(),
            values: self.annual.clone(),
        }
    }
}

/// Financial stress index; positive values mean above-average stress.
#[derive(Debug, Clone, PartialEq)]
pub struct StressSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl StressSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let ts = TimeSeries::new(dates, values)?;
        Ok(Self {
            dates: ts.dates,
            values: ts.values,
        })
    }
}

/// Output of [`align`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub dates: Vec<NaiveDate>,
    pub series: Vec<TimeSeries>,
    /// Rows dropped from each input, in input order.
    pub dropped: Vec<usize>,
}

/// Restricts every series to the intersection of their calendars.
pub fn align(series: &[TimeSeries]) -> Result<Alignment> {
    let Some(first) = series.first() else {
        return Err(Error::Alignment("no series to align".into()));
    };
    let mut common: BTreeSet<NaiveDate> = first.dates.iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::Alignment("calendars have no date in common".into()));
    }
    let aligned: Vec<TimeSeries> = series.iter().map(|s| s.retain_dates(&common)).collect();
    let dropped = series
        .iter()
        .zip(&aligned)
        .map(|(a, b)| a.len() - b.len())
        .collect();
    Ok(Alignment {
        dates: common.into_iter().collect(),
        series: aligned,
        dropped,
    })
}

/// Aligned prices, returns and the daily benchmark rate on return dates.
#[derive(Debug, Clone)]
pub struct MarketData {
    pub prices: PriceSeries,
    pub returns: ReturnSeries,
    /// Risk-free rates on `returns.dates`.
    pub risk_free: RiskFreeSeries,
    /// Price rows dropped while aligning with the risk-free calendar.
    pub dropped_price_rows: usize,
}

impl MarketData {
    /// Forward-fills `risk_free` onto the price calendar, aligns the two and
    /// derives returns. Without a risk-free series the benchmark is zero.
    pub fn new(prices: PriceSeries, risk_free: Option<&RiskFreeSeries>) -> Result<Self> {
        let (prices, rf, dropped) = match risk_free {
            None => {
                let rf = RiskFreeSeries::zero(prices.dates.clone());
                (prices, rf, 0)
            }
            Some(rf) => {
                let filled = rf.forward_fill(&prices.dates);
                let al = align(&[prices.to_time_series(), filled.to_time_series()])?;
                let keep: BTreeSet<NaiveDate> = al.dates.iter().copied().collect();
                let prices = PriceSeries::try_from(al.series[0].clone())?;
                let rf = filled.restrict(&keep);
                (prices, rf, al.dropped[0])
            }
        };
        let returns = log_returns(&prices)?;
        let risk_free = RiskFreeSeries {
            dates: rf.dates[1..].to_vec(),
            annual: rf.annual[1..].to_vec(),
            daily: rf.daily[1..].to_vec(),
        };
        Ok(Self {
            prices,
            returns,
            risk_free,
            dropped_price_rows: dropped,
        })
    }
}

impl RiskFreeSeries {
    fn restrict(&self, keep: &BTreeSet<NaiveDate>) -> RiskFreeSeries {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| keep.contains(&self.dates[i]))
            .collect();
        RiskFreeSeries {
            dates: idx.iter().map(|&i| self.dates[i]).collect(),
            annual: idx.iter().map(|&i| self.annual[i]).collect(),
            daily: idx.iter().map(|&i| self.daily[i]).collect(),
        }
    }
}

fn read_dated_csv(path: &Path, value_column: &str) -> Result<TimeSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != value_column {
        return Err(parse_err(
            1,
            format!("expected header `date,{value_column}`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date `{}`: {e}", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad number `{}`", &record[1])))?;
        rows.push((date, value));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation(format!(
            "{}: duplicate date {}",
            path.display(),
            w[0].0
        )));
    }
    let (dates, values) = rows.into_iter().unzip();
    TimeSeries::new(dates, values)
}

/// Reads a `date,close` CSV. Rows may appear in any order.
pub fn load_price_series(path: impl AsRef<Path>) -> Result<PriceSeries> {
    PriceSeries::try_from(read_dated_csv(path.as_ref(), "close")?)
}

/// Reads a `date,annual_rate` CSV of decimal-fraction annual rates.
pub fn load_risk_free(path: impl AsRef<Path>) -> Result<RiskFreeSeries> {
    let ts = read_dated_csv(path.as_ref(), "annual_rate")?;
    RiskFreeSeries::from_annual(ts.dates, ts.values)
}

/// Reads a `date,stress` CSV.
pub fn load_stress_series(path: impl AsRef<Path>) -> Result<StressSeries> {
    let ts = read_dated_csv(path.as_ref(), "stress")?;
    StressSeries::new(ts.dates, ts.values)
}
