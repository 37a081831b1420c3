//! Deterministic fixtures shared by the benchmarks.

use chrono::{Datelike, NaiveDate};
use dfdr_core::{ExcessReturnPanel, PriceSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn weekdays(n: usize) -> Vec<NaiveDate> {
    NaiveDate::from_ymd_opt(2000, 1, 3)
        .unwrap()
        .iter_days()
        .filter(|d| d.weekday().number_from_monday() <= 5)
        .take(n)
        .collect()
}

/// Geometric random walk with 1% daily volatility.
pub fn prices(n: usize, seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0002, 0.01).unwrap();
    let mut p = 100.0;
    let values = (0..n)
        .map(|_| {
            p *= f64::exp(step.sample(&mut rng));
            p
        })
        .collect();
    PriceSeries::new(weekdays(n), values).unwrap()
}

/// `n` days of Gaussian excess returns for `l` rules.
pub fn panel(n: usize, l: usize, seed: u64) -> ExcessReturnPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, 0.01).unwrap();
    let data = (0..n * l).map(|_| d.sample(&mut rng)).collect();
    ExcessReturnPanel::from_rows(weekdays(n), (0..l).collect(), data).unwrap()
}
