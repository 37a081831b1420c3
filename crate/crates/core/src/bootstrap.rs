//! Stationary bootstrap with one index draw shared by every rule, and
//! discrete two-sided p-values on the support `{1/B, ..., 1}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::ExcessReturnPanel;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Default replication count.
pub const DEFAULT_REPLICATIONS: usize = 1000;
/// Default expected block length in days.
pub const DEFAULT_EXPECTED_BLOCK: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Sharpe,
    MeanExcess,
}

/// Replication count, mean block length and seed. The window length comes
/// from the panel being resampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub replications: usize,
    pub expected_block: f64,
    pub seed: u64,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            expected_block: DEFAULT_EXPECTED_BLOCK,
            seed: 0,
        }
    }
}

impl BootstrapPlan {
    pub fn new(replications: usize, expected_block: f64, seed: u64) -> Result<Self> {
        let plan = Self {
            replications,
            expected_block,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Validation("bootstrap needs at least one replication".into()));
        }
        if !(self.expected_block.is_finite() && self.expected_block >= 1.0) {
            return Err(Error::Validation(format!(
                "expected block length must be >= 1, got {}",
                self.expected_block
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Index row `b` of the stationary bootstrap over `n` days. Depends only on
/// `(seed, b)`.
pub fn bootstrap_row(n: usize, expected_block: f64, seed: u64, b: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = stream_rng(seed, b as u64);
    let restart = 1.0 / expected_block;
    let mut row = Vec::with_capacity(n);
    let mut idx = rng.random_range(0..n);
    row.push(idx);
    for _ in 1..n {
        idx = if rng.random::<f64>() < restart {
            rng.random_range(0..n)
        } else {
            (idx + 1) % n
        };
        row.push(idx);
    }
    row
}

/// The full `B x n` index matrix, one row per replication.
pub fn stationary_bootstrap_indices(n: usize, plan: &BootstrapPlan) -> Result<Vec<Vec<usize>>> {
    plan.validate()?;
    if n == 0 {
        return Err(Error::InsufficientData("cannot resample an empty window".into()));
    }
    Ok((0..plan.replications)
        .into_par_iter()
        .map(|b| bootstrap_row(n, plan.expected_block, plan.seed, b))
        .collect())
}

/// Row-major `B x l` matrix of bootstrap statistics. Undefined entries
/// (zero resampled variance) are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapStatistics {
    replications: usize,
    n_rules: usize,
    values: Vec<f64>,
}

impl BootstrapStatistics {
    pub fn from_rows(replications: usize, n_rules: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != replications * n_rules {
            return Err(Error::Shape(format!(
                "{} values for {replications} x {n_rules}",
                values.len()
            )));
        }
        Ok(Self {
            replications,
            n_rules,
            values,
        })
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn n_rules(&self) -> usize {
        self.n_rules
    }

    pub fn get(&self, b: usize, j: usize) -> f64 {
        self.values[b * self.n_rules + j]
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.values[b * self.n_rules..(b + 1) * self.n_rules]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.replications).map(|b| self.get(b, j)).collect()
    }
}

/// Per-replication first and second moments of every rule, shifted by the
/// column's first value. Adding a constant to a column leaves the shifted
/// sums untouched, so statistics for translated panels can be derived
/// without resampling again.
#[derive(Debug, Clone)]
pub struct BootstrapMoments {
    days: usize,
    n_rules: usize,
    replications: usize,
    shift: Vec<f64>,
    observed: Vec<(f64, f64)>,
    resampled: Vec<(f64, f64)>,
}

impl BootstrapMoments {
    pub fn compute(panel: &ExcessReturnPanel, plan: &BootstrapPlan) -> Result<Self> {
        Self::compute_with(panel, plan, true)
    }

    fn compute_with(panel: &ExcessReturnPanel, plan: &BootstrapPlan, resample: bool) -> Result<Self> {
        plan.validate()?;
        let (n, l) = (panel.n_rows(), panel.n_rules());
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "bootstrap window needs at least 2 days, got {n}"
            )));
        }
        let shift = panel.row(0).to_vec();
        let shifted: Vec<f64> = panel
            .values()
            .chunks_exact(l)
            .flat_map(|row| row.iter().zip(&shift).map(|(x, k)| x - k))
            .collect();
        let accumulate = |rows: &mut dyn Iterator<Item = usize>| {
            let mut acc = vec![(0.0, 0.0); l];
            for t in rows {
                for (a, &y) in acc.iter_mut().zip(&shifted[t * l..(t + 1) * l]) {
                    a.0 += y;
                    a.1 += y * y;
                }
            }
            acc
        };
        let observed = accumulate(&mut (0..n));
        let replications = if resample { plan.replications } else { 0 };
        let resampled: Vec<(f64, f64)> = (0..replications)
            .into_par_iter()
            .flat_map_iter(|b| {
                let idx = bootstrap_row(n, plan.expected_block, plan.seed, b);
                accumulate(&mut idx.into_iter())
            })
            .collect();
        Ok(Self {
            days: n,
            n_rules: l,
            replications,
            shift,
            observed,
            resampled,
        })
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn n_rules(&self) -> usize {
        self.n_rules
    }

    fn statistic(&self, kind: Statistic, j: usize, m: (f64, f64), offset: f64) -> f64 {
        let n = self.days as f64;
        let mean = self.shift[j] + offset + m.0 / n;
        match kind {
            Statistic::MeanExcess => mean,
            Statistic::Sharpe => {
                let var = (m.1 - m.0 * m.0 / n) / (n - 1.0);
                if var > 0.0 {
                    mean / var.sqrt()
                } else {
                    f64::NAN
                }
            }
        }
    }

    fn offset(offsets: Option<&[f64]>, j: usize) -> f64 {
        offsets.map_or(0.0, |o| o[j])
    }

    /// Sample statistic per rule, with column `j` translated by `offsets[j]`.
    pub fn observed(&self, kind: Statistic, offsets: Option<&[f64]>) -> Vec<f64> {
        (0..self.n_rules)
            .map(|j| self.statistic(kind, j, self.observed[j], Self::offset(offsets, j)))
            .collect()
    }

    /// Bootstrap statistics, with column `j` translated by `offsets[j]`.
    pub fn statistics(&self, kind: Statistic, offsets: Option<&[f64]>) -> BootstrapStatistics {
        let l = self.n_rules;
        let values = self
            .resampled
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let j = k % l;
                self.statistic(kind, j, m, Self::offset(offsets, j))
            })
            .collect();
        BootstrapStatistics {
            replications: self.replications,
            n_rules: l,
            values,
        }
    }
}

/// Sample statistic of every rule over the whole panel.
pub fn observed_statistics(panel: &ExcessReturnPanel, statistic: Statistic) -> Result<Vec<f64>> {
    let plan = BootstrapPlan::new(1, 1.0, 0)?;
    let moments = BootstrapMoments::compute_with(panel, &plan, false)?;
    Ok(moments.observed(statistic, None))
}

/// Resamples every rule column with the same index row per replication.
pub fn bootstrap_statistics(
    panel: &ExcessReturnPanel,
    plan: &BootstrapPlan,
    statistic: Statistic,
) -> Result<BootstrapStatistics> {
    Ok(BootstrapMoments::compute(panel, plan)?.statistics(statistic, None))
}

/// Discrete two-sided p-values, stored as exact rank numerators over `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueSet {
    replications: usize,
    phi: Vec<f64>,
    signs: Vec<i8>,
    ranks: Vec<usize>,
}

impl PValueSet {
    /// Builds a set from rank numerators `k` (p = k / B).
    pub fn from_ranks(replications: usize, ranks: Vec<usize>, signs: Vec<i8>, phi: Vec<f64>) -> Result<Self> {
        if ranks.len() != signs.len() || ranks.len() != phi.len() {
            return Err(Error::Shape("ranks, signs and statistics differ in length".into()));
        }
        if replications == 0 || ranks.iter().any(|&k| k == 0 || k > replications) {
            return Err(Error::Validation(format!("ranks must lie in 1..={replications}")));
        }
        if signs.iter().any(|s| !(-1..=1).contains(s)) {
            return Err(Error::Validation("signs must be -1, 0 or +1".into()));
        }
        Ok(Self {
            replications,
            phi,
            signs,
            ranks,
        })
    }

    /// Builds a set from p-values that already sit on `{1/B, ..., 1}`
    /// (within 1e-9). Statistics are set to the signs.
    pub fn from_p_values(replications: usize, p: &[f64], signs: &[i8]) -> Result<Self> {
        let b = replications as f64;
        let ranks = p
            .iter()
            .map(|&v| {
                let k = (v * b).round();
                if (k - v * b).abs() > 1e-9 * b.max(1.0) || k < 1.0 {
                    Err(Error::Validation(format!("p-value {v} is not on the 1/{replications} grid")))
                } else {
                    Ok(k as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let phi = signs.iter().map(|&s| f64::from(s)).collect();
        Self::from_ranks(replications, ranks, signs.to_vec(), phi)
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn observed(&self) -> &[f64] {
        &self.phi
    }

    pub fn p(&self, j: usize) -> f64 {
        self.ranks[j] as f64 / self.replications as f64
    }

    pub fn p_values(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.p(j)).collect()
    }

    /// Support point `k / B` for `k = 1..=B`.
    pub fn support_point(&self, k: usize) -> f64 {
        k as f64 / self.replications as f64
    }

    /// Occurrences of each support point; entry `k - 1` counts `p = k / B`.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.replications];
        for &k in &self.ranks {
            counts[k - 1] += 1;
        }
        counts
    }

    /// Rules restricted to `columns`, in that order.
    pub fn subset(&self, columns: &[usize]) -> PValueSet {
        PValueSet {
            replications: self.replications,
            phi: columns.iter().map(|&j| self.phi[j]).collect(),
            signs: columns.iter().map(|&j| self.signs[j]).collect(),
            ranks: columns.iter().map(|&j| self.ranks[j]).collect(),
        }
    }
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Two-sided p-values with the bootstrap recentred on the sample statistic:
/// `c_j = #{b : |phi_jb - phi_j| >= |phi_j|}`, `p_j = max(1, c_j) / B`.
/// Undefined bootstrap values count as exceedances; an undefined sample
/// statistic gives `p = 1` and sign 0.
pub fn discrete_p_values(observed: &[f64], stats: &BootstrapStatistics) -> Result<PValueSet> {
    let l = stats.n_rules();
    if observed.len() != l {
        return Err(Error::Shape(format!(
            "{} observed statistics for {l} bootstrap columns",
            observed.len()
        )));
    }
    let b = stats.replications();
    let mut counts = vec![0usize; l];
    for r in 0..b {
        for (j, (&x, &phi)) in stats.row(r).iter().zip(observed).enumerate() {
            if !phi.is_finite() || !x.is_finite() || (x - phi).abs() >= phi.abs() {
                counts[j] += 1;
            }
        }
    }
    let ranks = counts.into_iter().map(|c| c.max(1)).collect();
    let signs = observed
        .iter()
        .map(|&x| if x.is_finite() { sign_of(x) } else { 0 })
        .collect();
    PValueSet::from_ranks(b, ranks, signs, observed.to_vec())
}

/// Observed statistics, bootstrap matrix and p-values in one pass.
pub fn bootstrap_p_values(
    panel: &ExcessReturnPanel,
    plan: &BootstrapPlan,
    statistic: Statistic,
) -> Result<(PValueSet, BootstrapStatistics)> {
    let moments = BootstrapMoments::compute(panel, plan)?;
    let observed = moments.observed(statistic, None);
    let stats = moments.statistics(statistic, None);
    let p = discrete_p_values(&observed, &stats)?;
    Ok((p, stats))
}
