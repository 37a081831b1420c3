//! Null-proportion estimation and multiple-testing selection on discrete
//! p-values: the right-boundary choice of λ, FDR⁺/FDR⁻ point-estimate
//! selection, the proportion split, and the fixed-λ Storey and Romano–Wolf
//! StepM baselines.
//!
//! Selections report column positions within the [`PValueSet`], not rule ids.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapStatistics, PValueSet};
use crate::error::{Error, Result};

/// Default spacing of the λ candidates.
pub const DEFAULT_GRID_WIDTH: f64 = 0.05;
/// λ used by the fixed-λ Storey baseline.
pub const DEFAULT_FIXED_LAMBDA: f64 = 0.6;
/// Cut-off at which the positive/negative proportions are read.
pub const DEFAULT_PROPORTION_CUTOFF: f64 = 0.4;

/// Ascending candidate values of λ, all strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation("λ grid needs at least two candidates".into()));
        }
        if values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Validation("λ candidates must lie strictly inside (0, 1)".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("λ candidates must be strictly ascending".into()));
        }
        Ok(Self { values })
    }

    /// Multiples of `width` below 1 (0.05, 0.10, ..., 0.95 by default),
    /// each snapped to the nearest support point `k / B` and de-duplicated.
    pub fn equal_width(width: f64, replications: usize) -> Result<Self> {
        if !(width > 0.0 && width < 0.5) {
            return Err(Error::Validation(format!("grid width must lie in (0, 0.5), got {width}")));
        }
        if replications == 0 {
            return Err(Error::Validation("grid needs at least one replication".into()));
        }
        let b = replications as f64;
        let mut values: Vec<f64> = Vec::new();
        let mut k = 1;
        loop {
            let raw = width * k as f64;
            if raw >= 1.0 - 1e-9 {
                break;
            }
            let snapped = (raw * b).round() / b;
            if snapped > 0.0 && snapped < 1.0 && values.last().map_or(true, |&last| snapped > last) {
                values.push(snapped);
            }
            k += 1;
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `min(1, #{p > λ} / (l (1 - λ)))`.
pub fn pi0_estimate(p: &PValueSet, lambda: f64) -> f64 {
    pi0_from_p(&p.p_values(), lambda)
}

/// [`pi0_estimate`] on a plain slice.
pub fn pi0_from_p(p: &[f64], lambda: f64) -> f64 {
    if p.is_empty() {
        return 1.0;
    }
    let above = p.iter().filter(|&&v| v > lambda).count();
    (above as f64 / (p.len() as f64 * (1.0 - lambda))).min(1.0)
}

/// Outcome of the right-boundary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RightBoundary {
    pub lambda_star: f64,
    pub pi0: f64,
    /// 1-based position of λ* in the grid.
    pub index: usize,
    /// π̂₀ at every grid point.
    pub pi0_path: Vec<f64>,
    /// λ chosen by the bin-count formulation.
    pub bin_rule_lambda: f64,
    /// Whether the bin-count formulation picked the same λ.
    pub rules_agree: bool,
}

/// First position `i` in `1..n-1` (1-based) where `seq[i] >= seq[i-1]`,
/// with a virtual leading value of 1 (π̂₀ at λ = 0); `n` if none.
pub fn right_boundary_index(seq: &[f64]) -> usize {
    let n = seq.len();
    let mut prev = 1.0;
    for (i, &v) in seq.iter().enumerate().take(n.saturating_sub(1)) {
        if v >= prev {
            return i + 1;
        }
        prev = v;
    }
    n
}

/// The same stopping point read from bin counts: the first bin
/// `(λ_{i-1}, λ_i]` holding no more p-values than the average bin to its
/// right, with `λ_0 = 0` and a final bin `(λ_n, 1]`. 1-based; `n` if none.
pub fn bin_rule_index(p: &[f64], grid: &LambdaGrid) -> usize {
    let lambdas = grid.values();
    let n = lambdas.len();
    let mut edges = Vec::with_capacity(n + 2);
    edges.push(0.0);
    edges.extend_from_slice(lambdas);
    edges.push(1.0);
    // bins[i - 1] = w_i for i in 1..=n + 1; p = 0 cannot occur on the support
    let bins: Vec<usize> = edges
        .windows(2)
        .map(|e| p.iter().filter(|&&v| v > e[0] && v <= e[1]).count())
        .collect();
    for i in 1..n {
        let right = &bins[i..];
        let mean = right.iter().sum::<usize>() as f64 / right.len() as f64;
        if bins[i - 1] as f64 <= mean {
            return i;
        }
    }
    n
}

/// Picks λ as the first grid point where π̂₀ stops decreasing; falls back to
/// the largest λ when it decreases across the whole grid.
pub fn right_boundary_lambda(p: &PValueSet, grid: &LambdaGrid) -> RightBoundary {
    let pv = p.p_values();
    let path: Vec<f64> = grid.values().iter().map(|&l| pi0_from_p(&pv, l)).collect();
    let index = right_boundary_index(&path);
    let bin_index = bin_rule_index(&pv, grid);
    RightBoundary {
        lambda_star: grid.values()[index - 1],
        pi0: path[index - 1],
        index,
        bin_rule_lambda: grid.values()[bin_index - 1],
        rules_agree: bin_index == index,
        pi0_path: path,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    fn matches(self, sign: i8) -> bool {
        match self {
            Side::Positive => sign > 0,
            Side::Negative => sign < 0,
        }
    }
}

/// Point-estimate FDR selection on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfdrSelection {
    pub side: Side,
    pub target: f64,
    /// λ behind π̂₀ when known.
    pub lambda: Option<f64>,
    pub pi0: f64,
    /// Largest qualifying support point; `None` when nothing qualifies.
    pub gamma_star: Option<f64>,
    /// Column positions with `p <= γ*` on the requested side.
    pub selected: Vec<usize>,
    pub discoveries: usize,
    pub false_estimate: f64,
    pub fdr_hat: Option<f64>,
}

impl DfdrSelection {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self {
            lambda: Some(lambda),
            ..self
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Sweeps `γ = k / B` upward and keeps the largest one with
/// `F̂(γ) / R̂(γ) <= target` and `R̂(γ) > 0`, where `F̂ = π̂₀ l γ / 2`.
pub fn select_side(p: &PValueSet, pi0: f64, target: f64, side: Side) -> Result<DfdrSelection> {
    check_rate("target", target)?;
    if !(0.0..=1.0).contains(&pi0) {
        return Err(Error::Validation(format!("π̂₀ must lie in [0, 1], got {pi0}")));
    }
    let b = p.replications();
    let l = p.len() as f64;
    let mut at_rank = vec![0usize; b + 1];
    for (&k, &s) in p.ranks().iter().zip(p.signs()) {
        if side.matches(s) {
            at_rank[k] += 1;
        }
    }
    let mut best = None;
    let mut r = 0usize;
    for (k, &count) in at_rank.iter().enumerate().skip(1) {
        r += count;
        if r == 0 {
            continue;
        }
        let gamma = k as f64 / b as f64;
        let f = pi0 * l * gamma / 2.0;
        if f / r as f64 <= target {
            best = Some((k, r, f));
        }
    }
    Ok(match best {
        Some((k, r, f)) => DfdrSelection {
            side,
            target,
            lambda: None,
            pi0,
            gamma_star: Some(k as f64 / b as f64),
            selected: p
                .ranks()
                .iter()
                .zip(p.signs())
                .enumerate()
                .filter(|(_, (&rank, &s))| rank <= k && side.matches(s))
                .map(|(j, _)| j)
                .collect(),
            discoveries: r,
            false_estimate: f,
            fdr_hat: Some(f / r as f64),
        },
        None => DfdrSelection {
            side,
            target,
            lambda: None,
            pi0,
            gamma_star: None,
            selected: Vec::new(),
            discoveries: 0,
            false_estimate: 0.0,
            fdr_hat: None,
        },
    })
}

/// Outperformers at FDR⁺ `target`.
pub fn dfdr_select(p: &PValueSet, pi0: f64, target: f64) -> Result<DfdrSelection> {
    select_side(p, pi0, target, Side::Positive)
}

/// Underperformers at FDR⁻ `target`.
pub fn dfdr_select_negative(p: &PValueSet, pi0: f64, target: f64) -> Result<DfdrSelection> {
    select_side(p, pi0, target, Side::Negative)
}

/// Right-boundary λ followed by FDR⁺ selection.
pub fn dfdr_procedure(p: &PValueSet, grid: &LambdaGrid, target: f64) -> Result<(RightBoundary, DfdrSelection)> {
    let rb = right_boundary_lambda(p, grid);
    let sel = dfdr_select(p, rb.pi0, target)?.with_lambda(rb.lambda_star);
    Ok((rb, sel))
}

/// FDR⁺ selection with π̂₀ read at a fixed λ.
pub fn storey_fixed_select(p: &PValueSet, lambda: f64, target: f64) -> Result<DfdrSelection> {
    check_rate("λ", lambda)?;
    Ok(dfdr_select(p, pi0_estimate(p, lambda), target)?.with_lambda(lambda))
}

/// Split of the universe into neutral, positive and negative proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub pi0: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
    pub gamma: f64,
    /// `1 - π̂₀ - π̂_A⁺ - π̂_A⁻` before clamping the alternative shares.
    pub residual: f64,
}

impl ProportionEstimate {
    /// Shares that sum to one: the alternatives are kept (scaled down only
    /// if they exceed one together) and the remainder is attributed to the
    /// null.
    pub fn normalized(&self) -> (f64, f64, f64) {
        let total = self.pi_plus + self.pi_minus;
        let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
        let (plus, minus) = (self.pi_plus * scale, self.pi_minus * scale);
        (1.0 - plus - minus, plus, minus)
    }
}

/// `π̂_A± = max(0, R±(γ) / l - π̂₀ γ / 2)`.
pub fn estimate_proportions(p: &PValueSet, pi0: f64, gamma: f64) -> Result<ProportionEstimate> {
    check_rate("γ", gamma)?;
    let l = p.len() as f64;
    if p.is_empty() {
        return Err(Error::InsufficientData("no p-values".into()));
    }
    let count = |side: Side| {
        p.p_values()
            .iter()
            .zip(p.signs())
            .filter(|(&v, &s)| v <= gamma && side.matches(s))
            .count() as f64
    };
    let raw_plus = count(Side::Positive) / l - pi0 * gamma / 2.0;
    let raw_minus = count(Side::Negative) / l - pi0 * gamma / 2.0;
    Ok(ProportionEstimate {
        pi0,
        pi_plus: raw_plus.max(0.0),
        pi_minus: raw_minus.max(0.0),
        gamma,
        residual: 1.0 - pi0 - raw_plus - raw_minus,
    })
}

/// Romano–Wolf StepM outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwSelection {
    pub alpha: f64,
    /// Rejections with a positive statistic.
    pub rejected: Vec<usize>,
    /// All rejections, either sign.
    pub rejected_two_sided: Vec<usize>,
    pub rounds: usize,
    /// Critical value used in each round.
    pub critical_values: Vec<f64>,
    /// Cumulative rejection count after each round.
    pub cumulative: Vec<usize>,
}

/// `ceil(q n)`-th smallest value, 1-based.
fn upper_quantile(mut values: Vec<f64>, q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    values[k - 1]
}

/// Step-down on recentred statistics. Each round takes the `1 - α` quantile
/// of `max_j |φ_jb - φ_j|` over the still-active rules and rejects those
/// with `|φ_j|` above it. Undefined bootstrap values count as infinitely
/// large; rules with an undefined sample statistic are never rejected and
/// do not enter the maximum.
pub fn rw_stepm_select(observed: &[f64], stats: &BootstrapStatistics, alpha: f64) -> Result<RwSelection> {
    check_rate("α", alpha)?;
    if observed.len() != stats.n_rules() {
        return Err(Error::Shape(format!(
            "{} statistics for {} bootstrap columns",
            observed.len(),
            stats.n_rules()
        )));
    }
    let mut active: Vec<usize> = (0..observed.len()).filter(|&j| observed[j].is_finite()).collect();
    let mut rejected = Vec::new();
    let mut critical_values = Vec::new();
    let mut cumulative = Vec::new();
    loop {
        if active.is_empty() {
            break;
        }
        let maxima: Vec<f64> = (0..stats.replications())
            .map(|b| {
                let row = stats.row(b);
                active
                    .iter()
                    .map(|&j| {
                        let d = (row[j] - observed[j]).abs();
                        if d.is_nan() {
                            f64::INFINITY
                        } else {
                            d
                        }
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let critical = upper_quantile(maxima, 1.0 - alpha);
        critical_values.push(critical);
        let (hit, keep): (Vec<usize>, Vec<usize>) = active.iter().partition(|&&j| observed[j].abs() > critical);
        rejected.extend(&hit);
        cumulative.push(rejected.len());
        active = keep;
        if hit.is_empty() {
            break;
        }
    }
    if critical_values.is_empty() {
        cumulative.push(0);
    }
    rejected.sort_unstable();
    Ok(RwSelection {
        alpha,
        rejected: rejected.iter().copied().filter(|&j| observed[j] > 0.0).collect(),
        rejected_two_sided: rejected,
        rounds: cumulative.len(),
        critical_values,
        cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pset(b: usize, p: &[f64], signs: &[i8]) -> PValueSet {
        PValueSet::from_p_values(b, p, signs).unwrap()
    }

    #[test]
    fn pi0_examples() {
        let ones = pset(10, &[1.0; 6], &[0; 6]);
        assert_eq!(pi0_estimate(&ones, 0.5), 1.0);
        let p = [0.01, 0.02, 0.5, 0.7, 0.9];
        assert!((pi0_from_p(&p, 0.4) - 1.0).abs() < 1e-12);
        assert!((pi0_from_p(&p, 0.6) - 1.0).abs() < 1e-12);
        assert!((pi0_from_p(&p, 0.8) - 1.0).abs() < 1e-12);
        assert!((pi0_from_p(&[0.01, 0.02, 0.03, 0.9], 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn right_boundary_scan() {
        assert_eq!(right_boundary_index(&[0.9, 0.7, 0.6, 0.62, 0.61]), 4);
        assert_eq!(right_boundary_index(&[1.0; 5]), 1);
        assert_eq!(right_boundary_index(&[0.9, 0.8, 0.7, 0.6]), 4);
        // the last point is never compared, only used as the fallback
        assert_eq!(right_boundary_index(&[0.9, 0.8, 0.85]), 3);
    }

    #[test]
    fn grid_construction() {
        let g = LambdaGrid::equal_width(0.05, 1000).unwrap();
        assert_eq!(g.len(), 19);
        assert!((g.values()[0] - 0.05).abs() < 1e-12);
        assert!((g.values()[18] - 0.95).abs() < 1e-12);
        // coarse support collapses neighbours
        let g = LambdaGrid::equal_width(0.05, 10).unwrap();
        assert_eq!(g.values(), &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert!(LambdaGrid::new(vec![0.5, 0.4]).is_err());
        assert!(LambdaGrid::new(vec![0.0, 0.4]).is_err());
    }

    #[test]
    fn hand_sweep() {
        let mut p = vec![0.1; 3];
        p.extend([1.0; 7]);
        let mut s = vec![1i8; 3];
        s.extend([0; 7]);
        let ps = pset(10, &p, &s);
        let at20 = dfdr_select(&ps, 0.7, 0.2).unwrap();
        assert_eq!(at20.gamma_star, Some(0.1));
        assert_eq!(at20.selected, vec![0, 1, 2]);
        assert!((at20.false_estimate - 0.35).abs() < 1e-12);
        assert!((at20.fdr_hat.unwrap() - 0.35 / 3.0).abs() < 1e-12);
        let at10 = dfdr_select(&ps, 0.7, 0.1).unwrap();
        assert!(at10.is_empty());
        assert_eq!(at10.gamma_star, None);
    }

    #[test]
    fn selection_boundaries() {
        let neg = pset(10, &[0.1, 0.2], &[-1, -1]);
        assert!(dfdr_select(&neg, 0.5, 0.1).unwrap().is_empty());
        let mixed = pset(10, &[0.1, 0.9, 1.0, 0.5], &[1, 1, -1, 1]);
        let all = dfdr_select(&mixed, 0.0, 0.1).unwrap();
        assert_eq!(all.gamma_star, Some(1.0));
        assert_eq!(all.selected, vec![0, 1, 3]);
        let down = dfdr_select_negative(&mixed, 0.0, 0.1).unwrap();
        assert_eq!(down.selected, vec![2]);
        assert!(dfdr_select(&mixed, 0.5, 1.5).is_err());
    }

    #[test]
    fn proportion_examples() {
        let ones = pset(10, &[1.0; 4], &[1, -1, 1, -1]);
        let e = estimate_proportions(&ones, 1.0, 0.4).unwrap();
        assert_eq!((e.pi_plus, e.pi_minus), (0.0, 0.0));

        let mut p = vec![0.3; 30];
        p.extend([0.9; 70]);
        let mut s = vec![1i8; 30];
        s.extend([-1; 70]);
        let e = estimate_proportions(&pset(100, &p, &s), 0.5, 0.4).unwrap();
        assert!((e.pi_plus - 0.20).abs() < 1e-12);
        assert_eq!(e.pi_minus, 0.0);
        let (n0, np, nm) = e.normalized();
        assert!((n0 + np + nm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn storey_baseline() {
        let p = pset(20, &[0.05, 0.05, 0.1, 0.6, 0.8, 0.9, 1.0, 1.0], &[1, 1, 1, -1, 1, -1, 0, 0]);
        let grid = LambdaGrid::equal_width(0.05, 20).unwrap();
        let (rb, dfdr) = dfdr_procedure(&p, &grid, 0.3).unwrap();
        let fixed = storey_fixed_select(&p, rb.lambda_star, 0.3).unwrap();
        assert_eq!(fixed.selected, dfdr.selected);
        assert!(storey_fixed_select(&pset(10, &[1.0; 3], &[1; 3]), 0.6, 0.1).unwrap().is_empty());
    }

    #[test]
    fn rw_single_rule() {
        // |phi| = 2 beyond the 95% quantile of its recentred spread
        let vals: Vec<f64> = (0..100).map(|b| 2.0 + (b as f64 - 50.0) / 50.0).collect();
        let stats = BootstrapStatistics::from_rows(100, 1, vals).unwrap();
        let rw = rw_stepm_select(&[2.0], &stats, 0.05).unwrap();
        assert_eq!(rw.rejected, vec![0]);
        assert_eq!(rw.cumulative[0], 1);
        let flat = BootstrapStatistics::from_rows(4, 2, vec![0.1, -0.1, 0.2, 0.0, -0.3, 0.1, 0.0, 0.2]).unwrap();
        let none = rw_stepm_select(&[0.0, 0.0], &flat, 0.05).unwrap();
        assert!(none.rejected_two_sided.is_empty());
        assert_eq!(none.rounds, 1);
    }

    #[test]
    fn rw_steps_down() {
        // rule 2 has wide bootstrap spread and masks rule 1 until rule 0 and
        // rule 2 fall out
        let b = 20;
        let mut vals = Vec::new();
        for k in 0..b {
            let e = (k as f64 - 9.5) / 10.0;
            vals.extend([5.0 + e * 0.1, 1.0 + e * 0.1, -4.0 + e * 3.0]);
        }
        let stats = BootstrapStatistics::from_rows(b, 3, vals).unwrap();
        let rw = rw_stepm_select(&[5.0, 1.0, -4.0], &stats, 0.1).unwrap();
        assert!(rw.cumulative.windows(2).all(|w| w[0] <= w[1]));
        assert!(rw.rejected_two_sided.contains(&0));
        assert!(!rw.rejected.contains(&2));
    }

    fn brute_force_gamma(p: &PValueSet, pi0: f64, target: f64) -> Option<usize> {
        let l = p.len() as f64;
        let b = p.replications();
        (1..=b)
            .filter(|&k| {
                let r = p.ranks().iter().zip(p.signs()).filter(|(&rank, &s)| rank <= k && s > 0).count();
                r > 0 && pi0 * l * (k as f64 / b as f64) / 2.0 / r as f64 <= target
            })
            .max()
    }

    fn arb_pset() -> impl Strategy<Value = PValueSet> {
        (2usize..20).prop_flat_map(|b| {
            proptest::collection::vec((1..=b, -1i8..=1), 1..20).prop_map(move |v| {
                let (ranks, signs): (Vec<usize>, Vec<i8>) = v.into_iter().unzip();
                let phi = signs.iter().map(|&s| f64::from(s)).collect();
                PValueSet::from_ranks(b, ranks, signs, phi).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn pi0_is_capped(p in arb_pset(), lambda in 0.01f64..0.99) {
            let v = pi0_estimate(&p, lambda);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn gamma_matches_exhaustive_scan(p in arb_pset(), pi0 in 0.0f64..=1.0, target in 0.01f64..0.5) {
            let sel = dfdr_select(&p, pi0, target).unwrap();
            let want = brute_force_gamma(&p, pi0, target).map(|k| k as f64 / p.replications() as f64);
            prop_assert_eq!(sel.gamma_star, want);
            if let Some(f) = sel.fdr_hat {
                prop_assert!(f <= target);
            }
            prop_assert!(sel.selected.iter().all(|&j| p.signs()[j] > 0));
        }

        #[test]
        fn raising_target_never_shrinks(p in arb_pset(), pi0 in 0.0f64..=1.0, a in 0.01f64..0.5, d in 0.0f64..0.4) {
            let lo = dfdr_select(&p, pi0, a).unwrap();
            let hi = dfdr_select(&p, pi0, a + d).unwrap();
            prop_assert!(lo.selected.iter().all(|j| hi.selected.contains(j)));
        }

        #[test]
        fn larger_pi0_selects_a_subset(p in arb_pset(), a in 0.0f64..=1.0, b in 0.0f64..=1.0, target in 0.01f64..0.5) {
            let (small, large) = if a <= b { (a, b) } else { (b, a) };
            let liberal = dfdr_select(&p, small, target).unwrap();
            let strict = dfdr_select(&p, large, target).unwrap();
            prop_assert!(strict.selected.iter().all(|j| liberal.selected.contains(j)));
        }

        #[test]
        fn sides_are_disjoint(p in arb_pset(), pi0 in 0.0f64..=1.0, target in 0.01f64..0.5) {
            let up = dfdr_select(&p, pi0, target).unwrap();
            let down = dfdr_select_negative(&p, pi0, target).unwrap();
            prop_assert!(up.selected.iter().all(|j| !down.selected.contains(j)));
        }

        #[test]
        fn rules_agree_on_uncapped_equal_bins(p in arb_pset()) {
            // with B = 10 and width 0.1 the bins are exactly equal; the two
            // formulations can only part ways where the cap at 1 binds
            let b = 10;
            let ranks: Vec<usize> = p.ranks().iter().map(|&k| (k % b) + 1).collect();
            let q = PValueSet::from_ranks(b, ranks, p.signs().to_vec(), p.observed().to_vec()).unwrap();
            let grid = LambdaGrid::equal_width(0.1, b).unwrap();
            let rb = right_boundary_lambda(&q, &grid);
            let uncapped = grid.values().iter().all(|&l| {
                let above = q.p_values().iter().filter(|&&v| v > l).count() as f64;
                above / (q.len() as f64 * (1.0 - l)) < 1.0
            });
            let mut prev = 1.0;
            let clear = rb.pi0_path.iter().all(|&v| {
                let ok = (v - prev).abs() > 1e-9;
                prev = v;
                ok
            });
            if uncapped && clear {
                prop_assert!(rb.rules_agree);
            }
        }

        #[test]
        fn rw_is_a_fixed_point(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (b, l) = (50, 6);
            let phi: Vec<f64> = (0..l).map(|_| rng.random_range(-3.0..3.0)).collect();
            let vals: Vec<f64> = (0..b * l).map(|k| phi[k % l] + rng.random_range(-1.5..1.5)).collect();
            let stats = BootstrapStatistics::from_rows(b, l, vals).unwrap();
            let rw = rw_stepm_select(&phi, &stats, 0.1).unwrap();
            prop_assert!(rw.cumulative.windows(2).all(|w| w[0] <= w[1]));
            // one more round over the survivors rejects nothing
            let active: Vec<usize> = (0..l).filter(|j| !rw.rejected_two_sided.contains(j)).collect();
            if !active.is_empty() {
                let maxima: Vec<f64> = (0..b)
                    .map(|r| active.iter().map(|&j| (stats.get(r, j) - phi[j]).abs()).fold(0.0, f64::max))
                    .collect();
                let crit = upper_quantile(maxima, 0.9);
                prop_assert!(active.iter().all(|&j| phi[j].abs() <= crit));
            }
        }
    }
}
