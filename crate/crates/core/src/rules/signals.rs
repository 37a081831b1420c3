//! Position generators for each rule family.
//!
//! Every function maps a close-price path to one position per day in
//! {-1, 0, +1}. The position at index `t` is formed at the close of day `t`
//! from prices up to and including `t`. All breach and crossover tests are
//! strict, so exact equality never changes state.

/// Filter rule: go long once the close rises more than `threshold` above the
/// lowest close since the last sell (or neutral) state, short once it falls
/// more than `threshold` below the highest close since the last buy (or
/// neutral) state. With `hold_days > 0` a position reverts to neutral after
/// that many days.
pub fn filter_rule(prices: &[f64], threshold: f64, hold_days: u32) -> Vec<i8> {
    let n = prices.len();
    let mut pos = vec![0i8; n];
    if n == 0 {
        return pos;
    }
    let mut state = 0i8;
    let mut low = prices[0];
    let mut high = prices[0];
    let mut held = 0u32;
    for t in 1..n {
        let p = prices[t];
        if state != 0 {
            held += 1;
            if hold_days > 0 && held >= hold_days {
                state = 0;
                low = p;
                high = p;
                held = 0;
                pos[t] = 0;
                continue;
            }
        }
        let up = p > low * (1.0 + threshold);
        let down = p < high * (1.0 - threshold);
        match state {
            0 => {
                if up {
                    state = 1;
                    high = p;
                    held = 0;
                } else if down {
                    state = -1;
                    low = p;
                    held = 0;
                } else {
                    low = low.min(p);
                    high = high.max(p);
                }
            }
            1 => {
                if down {
                    state = -1;
                    low = p;
                    held = 0;
                } else {
                    high = high.max(p);
                }
            }
            _ => {
                if up {
                    state = 1;
                    high = p;
                    held = 0;
                } else {
                    low = low.min(p);
                }
            }
        }
        pos[t] = state;
    }
    pos
}

/// Mean of `p_i - p_t` over the `window` closes ending at `t`; `NaN` while
/// fewer than `window` closes are available.
///
/// Anchoring at the current close makes the averages of a flat path exactly
/// equal, so ties stay ties.
pub fn anchored_mean_deviation(prices: &[f64], window: usize) -> Vec<f64> {
    let n = prices.len();
    let mut out = vec![f64::NAN; n];
    if window == 0 {
        return out;
    }
    for t in window.saturating_sub(1)..n {
        let anchor = prices[t];
        let sum: f64 = prices[t + 1 - window..=t].iter().map(|p| p - anchor).sum();
        out[t] = sum / window as f64;
    }
    out
}

pub(crate) fn moving_average_from_deviations(
    prices: &[f64],
    fast_dev: &[f64],
    slow_dev: &[f64],
    slow: usize,
    band: f64,
    neutral_in_band: bool,
) -> Vec<i8> {
    let n = prices.len();
    let mut pos = vec![0i8; n];
    let mut state = 0i8;
    for t in slow.saturating_sub(1)..n {
        let gap = fast_dev[t] - slow_dev[t];
        let slow_ma = prices[t] + slow_dev[t];
        state = if gap > band * slow_ma {
            1
        } else if gap < -band * slow_ma {
            -1
        } else if neutral_in_band {
            0
        } else {
            state
        };
        pos[t] = state;
    }
    pos
}

/// Moving-average crossover. Long while the fast average exceeds the slow
/// one by more than the fractional `band`, short while it is more than
/// `band` below; inside the band the previous position is kept (or dropped
/// to neutral when `neutral_in_band`). `fast == 1` compares the raw close.
/// The first `slow - 1` days are warm-up.
pub fn moving_average(prices: &[f64], fast: usize, slow: usize, band: f64, neutral_in_band: bool) -> Vec<i8> {
    let fd = anchored_mean_deviation(prices, fast);
    let sd = anchored_mean_deviation(prices, slow);
    moving_average_from_deviations(prices, &fd, &sd, slow, band, neutral_in_band)
}

/// Highest and lowest of the `lookback` closes strictly before `t`; `NaN`
/// until `lookback` closes exist.
pub fn trailing_extremes(prices: &[f64], lookback: usize) -> (Vec<f64>, Vec<f64>) {
    let n = prices.len();
    let mut hi = vec![f64::NAN; n];
    let mut lo = vec![f64::NAN; n];
    for t in lookback..n {
        let w = &prices[t - lookback..t];
        hi[t] = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo[t] = w.iter().copied().fold(f64::INFINITY, f64::min);
    }
    (hi, lo)
}

pub(crate) fn support_resistance_from_extremes(
    prices: &[f64],
    hi: &[f64],
    lo: &[f64],
    lookback: usize,
    threshold: f64,
) -> Vec<i8> {
    let n = prices.len();
    let mut pos = vec![0i8; n];
    let mut state = 0i8;
    for t in lookback..n {
        let p = prices[t];
        if p > hi[t] * (1.0 + threshold) {
            state = 1;
        } else if p < lo[t] * (1.0 - threshold) {
            state = -1;
        }
        pos[t] = state;
    }
    pos
}

/// Support/resistance breakout: long when the close exceeds the highest of
/// the previous `lookback` closes by more than `threshold`, short when it
/// falls below the lowest by more than `threshold`; held until the opposite
/// breach.
pub fn support_resistance(prices: &[f64], lookback: usize, threshold: f64) -> Vec<i8> {
    let (hi, lo) = trailing_extremes(prices, lookback);
    support_resistance_from_extremes(prices, &hi, &lo, lookback, threshold)
}

pub(crate) fn channel_breakout_from_extremes(
    prices: &[f64],
    hi: &[f64],
    lo: &[f64],
    length: usize,
    width: f64,
) -> Vec<i8> {
    let n = prices.len();
    let mut pos = vec![0i8; n];
    let mut state = 0i8;
    for t in length..n {
        let channel = hi[t] - lo[t] <= width * lo[t];
        if channel {
            let p = prices[t];
            if p > hi[t] {
                state = 1;
            } else if p < lo[t] {
                state = -1;
            }
        }
        pos[t] = state;
    }
    pos
}

/// Channel breakout: a channel exists when the previous `length` closes
/// span no more than `width` times their minimum. A close above (below) an
/// existing channel goes long (short); otherwise the position is kept.
pub fn channel_breakout(prices: &[f64], length: usize, width: f64) -> Vec<i8> {
    let (hi, lo) = trailing_extremes(prices, length);
    channel_breakout_from_extremes(prices, &hi, &lo, length, width)
}

/// Relative strength index over the last `lookback` price changes using
/// simple averages; 50 when prices did not move. `NaN` during warm-up.
pub fn rsi_series(prices: &[f64], lookback: usize) -> Vec<f64> {
    let n = prices.len();
    let mut out = vec![f64::NAN; n];
    for t in lookback..n {
        let (mut gain, mut loss) = (0.0, 0.0);
        for i in t + 1 - lookback..=t {
            let d = prices[i] - prices[i - 1];
            if d > 0.0 {
                gain += d;
            } else {
                loss -= d;
            }
        }
        out[t] = if gain + loss == 0.0 {
            50.0
        } else {
            100.0 * gain / (gain + loss)
        };
    }
    out
}

pub(crate) fn rsi_from_series(rsi: &[f64], lookback: usize, overbought: f64, oversold: f64) -> Vec<i8> {
    let n = rsi.len();
    let mut pos = vec![0i8; n];
    let mut state = 0i8;
    for t in lookback..n {
        let v = rsi[t];
        state = match state {
            0 if v > overbought => -1,
            0 if v < oversold => 1,
            -1 if v < oversold => 1,
            -1 if v < 50.0 => 0,
            1 if v > overbought => -1,
            1 if v > 50.0 => 0,
            s => s,
        };
        pos[t] = state;
    }
    pos
}

/// Contrarian RSI rule: short when the index rises above `overbought`, long
/// when it drops below `oversold`, back to neutral when it crosses 50.
pub fn rsi(prices: &[f64], lookback: usize, overbought: f64, oversold: f64) -> Vec<i8> {
    rsi_from_series(&rsi_series(prices, lookback), lookback, overbought, oversold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_flat_prices_never_trade() {
        assert!(filter_rule(&[100.0; 50], 0.01, 0).iter().all(|&s| s == 0));
    }

    #[test]
    fn filter_triggers_on_close() {
        assert_eq!(filter_rule(&[100.0, 106.0], 0.05, 0), vec![0, 1]);
        assert_eq!(filter_rule(&[100.0, 105.0], 0.05, 0), vec![0, 0]);
    }

    #[test]
    fn filter_monotone_rise() {
        let prices: Vec<f64> = (0..30).map(|i| 100.0 * 1.01f64.powi(i)).collect();
        let pos = filter_rule(&prices, 0.05, 0);
        // 1.01^5 = 1.0510 is the first cumulative rise beyond 5%.
        assert!(pos[..5].iter().all(|&s| s == 0));
        assert!(pos[5..].iter().all(|&s| s == 1));
    }

    #[test]
    fn filter_reverses_and_holds() {
        let prices = [100.0, 106.0, 110.0, 104.0, 103.0];
        // high since buy is 110; 104 < 110 * 0.95 = 104.5 flips short.
        assert_eq!(filter_rule(&prices, 0.05, 0), vec![0, 1, 1, -1, -1]);
        let prices = [100.0, 106.0, 107.0, 108.0, 109.0];
        assert_eq!(filter_rule(&prices, 0.05, 2), vec![0, 1, 1, 0, 0]);
    }

    #[test]
    fn moving_average_trend_and_ties() {
        let up: Vec<f64> = (1..=20).map(f64::from).collect();
        let pos = moving_average(&up, 1, 5, 0.0, false);
        assert!(pos[..4].iter().all(|&s| s == 0));
        assert!(pos[4..].iter().all(|&s| s == 1));

        assert!(moving_average(&[0.1; 30], 2, 7, 0.0, false).iter().all(|&s| s == 0));
    }

    #[test]
    fn moving_average_triangle_hand_trace() {
        let p = [1.0, 2.0, 3.0, 2.0, 1.0, 2.0, 3.0, 2.0];
        assert_eq!(moving_average(&p, 1, 3, 0.0, false), vec![0, 0, 1, -1, -1, 1, 1, -1]);
    }

    #[test]
    fn moving_average_band_variants() {
        // At t=3 the slow MA(3) is 102.17; the close 101.5 sits inside a 1% band.
        let p = [100.0, 101.0, 104.0, 101.5];
        let held = moving_average(&p, 1, 3, 0.01, false);
        let neutral = moving_average(&p, 1, 3, 0.01, true);
        assert_eq!(held[2], 1);
        assert_eq!(held[3], 1);
        assert_eq!(neutral[3], 0);
    }

    #[test]
    fn support_resistance_cases() {
        let up: Vec<f64> = (1..=12).map(f64::from).collect();
        let pos = support_resistance(&up, 4, 0.0);
        assert!(pos[..4].iter().all(|&s| s == 0));
        assert!(pos[4..].iter().all(|&s| s == 1));

        assert!(support_resistance(&[50.0; 20], 3, 0.0).iter().all(|&s| s == 0));

        let saw = [10.0, 11.0, 12.0, 11.0, 10.0, 9.0, 10.0, 11.0, 12.0, 13.0];
        assert_eq!(support_resistance(&saw, 2, 0.0), vec![0, 0, 1, 1, -1, -1, -1, 1, 1, 1]);
    }

    #[test]
    fn channel_breakout_cases() {
        let mut jump = vec![100.0; 6];
        jump.push(110.0);
        let pos = channel_breakout(&jump, 5, 0.05);
        assert_eq!(pos, vec![0, 0, 0, 0, 0, 0, 1]);

        let wild: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 100.0 } else { 120.0 }).collect();
        assert!(channel_breakout(&wild, 5, 0.05).iter().all(|&s| s == 0));

        assert!(channel_breakout(&[100.0; 30], 5, 0.05).iter().all(|&s| s == 0));
    }

    #[test]
    fn rsi_cases() {
        assert!(rsi_series(&[100.0; 10], 3)[3..].iter().all(|&v| v == 50.0));
        assert!(rsi(&[100.0; 10], 3, 70.0, 30.0).iter().all(|&s| s == 0));

        let up: Vec<f64> = (0..6).map(|i| 100.0 + i as f64).collect();
        assert_eq!(rsi_series(&up, 4)[4], 100.0);
        assert_eq!(rsi(&up, 4, 70.0, 30.0)[4], -1);

        let alt: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 100.0 } else { 101.0 }).collect();
        assert!(rsi_series(&alt, 4)[4..].iter().all(|&v| v == 50.0));
        assert!(rsi(&alt, 4, 70.0, 30.0).iter().all(|&s| s == 0));
    }

    #[test]
    fn rsi_exits_at_midline() {
        // Four gains (RSI 100, short), then losses pull the RSI below 50.
        let p = [100.0, 101.0, 102.0, 103.0, 104.0, 103.0, 102.0, 101.0];
        let pos = rsi(&p, 4, 70.0, 30.0);
        assert_eq!(pos[4], -1);
        // t=6: changes +1,+1,-1,-1 -> RSI 50, still short; t=7: 25 -> long.
        assert_eq!(pos[6], -1);
        assert_eq!(pos[7], 1);
    }
}
