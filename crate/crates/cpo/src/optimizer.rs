//! Box-constrained simplex allocation by exhaustive grid search.
//!
//! The objective is the excess-return ratio `(sum w_i R_i - R_f) / (w' M w)`
//! where `M` is either a return covariance matrix (mean-variance baseline)
//! or a break-affinity matrix. The affinity matrix need not be positive
//! semi-definite and the ratio can be multimodal, so no gradient solver is
//! trusted here: the feasible grid (integer compositions of `1/resolution`
//! filtered by the box bounds) is enumerated outright, followed by a local
//! polish of pairwise mass transfers at a tenth of the grid step. On the
//! feasible set the affinity denominator is strictly positive (non-negative
//! entries, unit diagonal), so the ratio is well defined everywhere and a
//! maximum exists by compactness.
//!
//! Enumeration streams depth-first with running partial sums (never
//! materializing the grid); the top coordinate splits the search into
//! parallel tasks whose results fold in fixed task order, keeping the argmax
//! and its lexicographic tie-break independent of thread scheduling.

use serde::Serialize;

use crate::changepoint::{detect_breaks_with_store, BreakSet, DetectorConfig, ThresholdStore};
use crate::ingest::ReturnPanel;
use crate::par;
use crate::setdist::{affinity_matrix, distance_matrix, AffinityMatrix, DistanceMatrix, DistanceMeasure};
use crate::{Error, Result};

/// The assets on offer: per-period expected returns, the risk-free rate in
/// the same units, and per-asset weight bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    pub asset_ids: Vec<String>,
    pub expected_returns: Vec<f64>,
    pub risk_free: f64,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
}

impl PortfolioSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.asset_ids.len();
        if n == 0 {
            return Err(Error::InvalidConfig("portfolio needs at least one asset".into()));
        }
        if self.expected_returns.len() != n || self.lower_bounds.len() != n || self.upper_bounds.len() != n {
            return Err(Error::InvalidConfig("per-asset field lengths differ".into()));
        }
        for i in 0..n {
            let (lo, hi) = (self.lower_bounds[i], self.upper_bounds[i]);
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::InfeasibleBounds(format!(
                    "asset {}: bounds [{lo}, {hi}] invalid",
                    self.asset_ids[i]
                )));
            }
        }
        let lo_sum: f64 = self.lower_bounds.iter().sum();
        let hi_sum: f64 = self.upper_bounds.iter().sum();
        if lo_sum > 1.0 + 1e-9 || hi_sum < 1.0 - 1e-9 {
            return Err(Error::InfeasibleBounds(format!(
                "lower bounds sum to {lo_sum}, upper to {hi_sum}; cannot reach 1"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.asset_ids.len()
    }
}

/// Per-asset bounds helper for the common uniform case.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self { lower: vec![lower; n], upper: vec![upper; n] }
    }
}

/// Portfolio weights: non-negative, summing to one within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
}

impl WeightVector {
    /// Checks the simplex and box constraints to 1e-9.
    pub fn check_feasible(&self, spec: &PortfolioSpec) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleBounds(format!("weights sum to {sum}")));
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if w < spec.lower_bounds[i] - 1e-9 || w > spec.upper_bounds[i] + 1e-9 {
                return Err(Error::InfeasibleBounds(format!(
                    "weight {w} outside [{}, {}] for asset {}",
                    spec.lower_bounds[i], spec.upper_bounds[i], spec.asset_ids[i]
                )));
            }
        }
        Ok(())
    }
}

/// Which matrix sits in the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskKind {
    Covariance,
    Affinity,
}

/// Symmetric risk matrix: a sample covariance or a break affinity.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskMatrix {
    pub kind: RiskKind,
    n: usize,
    entries: Vec<f64>,
}

impl RiskMatrix {
    pub fn from_affinity(a: &AffinityMatrix) -> Self {
        Self { kind: RiskKind::Affinity, n: a.n(), entries: a.values().to_vec() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `w' M w`.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            acc += self.get(i, i) * wi * wi;
            for (j, &wj) in w.iter().enumerate().skip(i + 1) {
                acc += 2.0 * self.get(i, j) * wi * wj;
            }
        }
        acc
    }
}

/// Sample covariance (divisor `n - 1`) of the panel's return columns.
pub fn covariance(panel: &ReturnPanel) -> Result<RiskMatrix> {
    let t = panel.len();
    if t < 2 {
        return Err(Error::SeriesTooShort { len: t, min: 2 });
    }
    let n = panel.n_assets();
    let means: Vec<f64> = panel
        .assets()
        .iter()
        .map(|s| s.values.iter().sum::<f64>() / t as f64)
        .collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let xi = &panel.assets()[i].values;
            let xj = &panel.assets()[j].values;
            let cov = xi
                .iter()
                .zip(xj)
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / (t - 1) as f64;
            entries[i * n + j] = cov;
            entries[j * n + i] = cov;
        }
    }
    Ok(RiskMatrix { kind: RiskKind::Covariance, n, entries })
}

/// Per-asset arithmetic mean of the per-period log returns.
pub fn expected_returns(panel: &ReturnPanel) -> Vec<f64> {
    panel
        .assets()
        .iter()
        .map(|s| s.values.iter().sum::<f64>() / s.len() as f64)
        .collect()
}

/// `(sum w_i R_i - R_f) / (w' M w)`; errors when the denominator is not
/// positive (possible only for a degenerate covariance).
pub fn objective_value(w: &WeightVector, spec: &PortfolioSpec, risk: &RiskMatrix) -> Result<f64> {
    spec.validate()?;
    let numerator: f64 =
        w.weights.iter().zip(&spec.expected_returns).map(|(w, r)| w * r).sum::<f64>() - spec.risk_free;
    let denominator = risk.quadratic_form(&w.weights);
    if denominator <= 0.0 {
        return Err(Error::DegenerateRisk);
    }
    Ok(numerator / denominator)
}

/// Result of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub weights: WeightVector,
    pub value: f64,
    /// Grid points evaluated (polish evaluations excluded).
    pub evaluations: u64,
}

struct GridSearch<'a> {
    n: usize,
    resolution: f64,
    k_lo: Vec<i64>,
    k_hi: Vec<i64>,
    suffix_lo: Vec<i64>,
    suffix_hi: Vec<i64>,
    returns: &'a [f64],
    risk_free: f64,
    risk: &'a RiskMatrix,
}

#[derive(Clone)]
struct Best {
    value: f64,
    ks: Vec<i64>,
    evaluations: u64,
    any_positive_denominator: bool,
}

impl Best {
    fn empty() -> Self {
        Self { value: f64::NEG_INFINITY, ks: Vec::new(), evaluations: 0, any_positive_denominator: false }
    }

    /// Higher value wins; exact ties go to the lexicographically smaller
    /// composition.
    fn offer(&mut self, value: f64, ks: &[i64]) {
        if self.ks.is_empty() || value > self.value || (value == self.value && ks < &self.ks[..]) {
            self.value = value;
            self.ks = ks.to_vec();
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.evaluations += other.evaluations;
        self.any_positive_denominator |= other.any_positive_denominator;
        if !other.ks.is_empty()
            && (self.ks.is_empty()
                || other.value > self.value
                || (other.value == self.value && other.ks < self.ks))
        {
            self.value = other.value;
            self.ks = other.ks;
        }
        self
    }
}

impl GridSearch<'_> {
    /// Depth-first enumeration from `depth` with `rem` grid units left.
    /// `linear[j]` carries `sum_{i < depth} M_ij w_i`, `quad` the settled
    /// part of the quadratic form, `num` the settled numerator.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        depth: usize,
        rem: i64,
        ks: &mut Vec<i64>,
        linear: &mut Vec<f64>,
        quad: f64,
        num: f64,
        best: &mut Best,
    ) {
        let n = self.n;
        if depth == n - 1 {
            if rem < self.k_lo[depth] || rem > self.k_hi[depth] {
                return;
            }
            let w = rem as f64 * self.resolution;
            let denominator = quad + self.risk.get(depth, depth) * w * w + 2.0 * w * linear[depth];
            best.evaluations += 1;
            if denominator > 0.0 {
                best.any_positive_denominator = true;
                let value = (num + w * self.returns[depth] - self.risk_free) / denominator;
                ks.push(rem);
                best.offer(value, ks);
                ks.pop();
            }
            return;
        }
        let lo = self.k_lo[depth].max(rem - self.suffix_hi[depth + 1]);
        let hi = self.k_hi[depth].min(rem - self.suffix_lo[depth + 1]);
        for k in lo..=hi {
            let w = k as f64 * self.resolution;
            let quad_next = quad + self.risk.get(depth, depth) * w * w + 2.0 * w * linear[depth];
            let num_next = num + w * self.returns[depth];
            for (j, l) in linear.iter_mut().enumerate().skip(depth + 1) {
                *l += self.risk.get(depth, j) * w;
            }
            ks.push(k);
            self.dfs(depth + 1, rem - k, ks, linear, quad_next, num_next, best);
            ks.pop();
            for (j, l) in linear.iter_mut().enumerate().skip(depth + 1) {
                *l -= self.risk.get(depth, j) * w;
            }
        }
    }
}

/// Greedy pairwise mass transfers at `step`, applied until no transfer
/// improves the objective. Each round scans all ordered pairs and applies
/// the single best (first such pair on ties), so the path is deterministic.
fn polish(
    w: &mut [f64],
    spec: &PortfolioSpec,
    risk: &RiskMatrix,
    step: f64,
) -> f64 {
    let n = w.len();
    let eval = |w: &[f64]| -> Option<f64> {
        let denominator = risk.quadratic_form(w);
        if denominator <= 0.0 {
            return None;
        }
        let num: f64 =
            w.iter().zip(&spec.expected_returns).map(|(w, r)| w * r).sum::<f64>() - spec.risk_free;
        Some(num / denominator)
    };
    let mut current = match eval(w) {
        Some(v) => v,
        None => return f64::NEG_INFINITY,
    };
    // Weights live on a finite lattice and the value strictly increases, so
    // this terminates; the cap is a backstop.
    for _ in 0..100_000 {
        let mut best_move: Option<(f64, usize, usize, f64)> = None;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let amt = step.min(spec.upper_bounds[i] - w[i]).min(w[j] - spec.lower_bounds[j]);
                if amt <= 1e-15 {
                    continue;
                }
                w[i] += amt;
                w[j] -= amt;
                let value = eval(w);
                w[i] -= amt;
                w[j] += amt;
                if let Some(value) = value {
                    if value > current && best_move.as_ref().is_none_or(|m| value > m.0) {
                        best_move = Some((value, i, j, amt));
                    }
                }
            }
        }
        match best_move {
            Some((value, i, j, amt)) => {
                w[i] += amt;
                w[j] -= amt;
                current = value;
            }
            None => break,
        }
    }
    current
}

/// Maximizes the objective over the resolution grid intersected with the
/// box-constrained simplex, then polishes with pairwise transfers at
/// `resolution / 10`. Deterministic; exact grid ties break to the
/// lexicographically smallest weight vector.
pub fn optimize(spec: &PortfolioSpec, risk: &RiskMatrix, resolution: f64) -> Result<OptimizeOutcome> {
    spec.validate()?;
    let n = spec.n();
    if risk.n() != n {
        let m = risk.n();
        return Err(Error::InvalidConfig(format!("risk matrix is {m}x{m}, portfolio has {n} assets")));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidConfig(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let units = (1.0 / resolution).round();
    if ((units * resolution) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("resolution {resolution} does not divide 1")));
    }
    let units = units as i64;

    let k_lo: Vec<i64> = spec.lower_bounds.iter().map(|lo| ((lo / resolution) - 1e-9).ceil() as i64).collect();
    let k_hi: Vec<i64> = spec.upper_bounds.iter().map(|hi| ((hi / resolution) + 1e-9).floor() as i64).collect();
    if k_lo.iter().sum::<i64>() > units || k_hi.iter().sum::<i64>() < units || k_lo.iter().zip(&k_hi).any(|(l, h)| l > h) {
        return Err(Error::EmptyGrid { resolution });
    }
    let mut suffix_lo = vec![0i64; n + 1];
    let mut suffix_hi = vec![0i64; n + 1];
    for i in (0..n).rev() {
        suffix_lo[i] = suffix_lo[i + 1] + k_lo[i];
        suffix_hi[i] = suffix_hi[i + 1] + k_hi[i];
    }

    let search = GridSearch {
        n,
        resolution,
        k_lo,
        k_hi,
        suffix_lo,
        suffix_hi,
        returns: &spec.expected_returns,
        risk_free: spec.risk_free,
        risk,
    };

    let best = if n == 1 {
        let mut best = Best::empty();
        let mut ks = Vec::new();
        let mut linear = vec![0.0];
        search.dfs(0, units, &mut ks, &mut linear, 0.0, 0.0, &mut best);
        best
    } else {
        // Parallel over the first coordinate; fold in ascending order.
        let lo = search.k_lo[0].max(units - search.suffix_hi[1]);
        let hi = search.k_hi[0].min(units - search.suffix_lo[1]);
        if lo > hi {
            return Err(Error::EmptyGrid { resolution });
        }
        let tasks: Vec<i64> = (lo..=hi).collect();
        let results = par::map_slice(&tasks, |&k0| {
            let mut best = Best::empty();
            let mut ks = vec![k0];
            let w = k0 as f64 * resolution;
            let mut linear: Vec<f64> = (0..n).map(|j| risk.get(0, j) * w).collect();
            let quad = risk.get(0, 0) * w * w;
            let num = w * spec.expected_returns[0];
            search.dfs(1, units - k0, &mut ks, &mut linear, quad, num, &mut best);
            best
        });
        results.into_iter().fold(Best::empty(), Best::merge)
    };

    if best.ks.is_empty() {
        if best.evaluations > 0 && !best.any_positive_denominator {
            return Err(Error::DegenerateRisk);
        }
        return Err(Error::EmptyGrid { resolution });
    }

    let mut weights: Vec<f64> = best.ks.iter().map(|&k| k as f64 * resolution).collect();
    let value = polish(&mut weights, spec, risk, resolution / 10.0);
    let weights = WeightVector { weights };
    weights.check_feasible(spec)?;
    Ok(OptimizeOutcome { weights, value, evaluations: best.evaluations })
}

/// Break-affinity allocation artifacts.
#[derive(Debug, Clone)]
pub struct CpoAllocation {
    pub weights: WeightVector,
    pub value: f64,
    pub evaluations: u64,
    pub breaks: Vec<BreakSet>,
    pub distances: DistanceMatrix,
    pub affinity: AffinityMatrix,
}

/// Detects breaks per asset, converts their pairwise distances to an
/// affinity matrix, and maximizes the affinity-penalized return ratio.
/// Expected returns are the per-asset historical means.
#[allow(clippy::too_many_arguments)]
pub fn allocate_cpo(
    panel: &ReturnPanel,
    detector: &DetectorConfig,
    measure: DistanceMeasure,
    bounds: &Bounds,
    risk_free: f64,
    resolution: f64,
    store: &ThresholdStore,
) -> Result<CpoAllocation> {
    // Calibrate once up front so per-asset detection can run in parallel
    // against the shared table.
    store.sequential(detector)?;
    let breaks: Vec<BreakSet> = par::map_slice(panel.assets(), |series| {
        detect_breaks_with_store(series, detector, store)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    for set in &breaks {
        if set.is_empty() {
            return Err(Error::EmptyBreakSet { asset: set.asset_id.clone() });
        }
    }
    allocate_cpo_from_breaks(panel, &breaks, measure, bounds, risk_free, resolution)
}

/// As [`allocate_cpo`], with externally supplied break sets.
pub fn allocate_cpo_from_breaks(
    panel: &ReturnPanel,
    breaks: &[BreakSet],
    measure: DistanceMeasure,
    bounds: &Bounds,
    risk_free: f64,
    resolution: f64,
) -> Result<CpoAllocation> {
    let distances = distance_matrix(breaks, measure)?;
    let affinity = affinity_matrix(&distances);
    let spec = PortfolioSpec {
        asset_ids: panel.asset_ids(),
        expected_returns: expected_returns(panel),
        risk_free,
        lower_bounds: bounds.lower.clone(),
        upper_bounds: bounds.upper.clone(),
    };
    let outcome = optimize(&spec, &RiskMatrix::from_affinity(&affinity), resolution)?;
    Ok(CpoAllocation {
        weights: outcome.weights,
        value: outcome.value,
        evaluations: outcome.evaluations,
        breaks: breaks.to_vec(),
        distances,
        affinity,
    })
}

/// Mean-variance allocation artifacts.
#[derive(Debug, Clone)]
pub struct MvoAllocation {
    pub weights: WeightVector,
    pub value: f64,
    pub evaluations: u64,
    pub covariance: RiskMatrix,
}

/// Classical mean-variance allocation: same grid machinery with the sample
/// covariance in the denominator.
pub fn allocate_mvo(
    panel: &ReturnPanel,
    bounds: &Bounds,
    risk_free: f64,
    resolution: f64,
) -> Result<MvoAllocation> {
    let cov = covariance(panel)?;
    let spec = PortfolioSpec {
        asset_ids: panel.asset_ids(),
        expected_returns: expected_returns(panel),
        risk_free,
        lower_bounds: bounds.lower.clone(),
        upper_bounds: bounds.upper.clone(),
    };
    let outcome = optimize(&spec, &cov, resolution)?;
    Ok(MvoAllocation { weights: outcome.weights, value: outcome.value, evaluations: outcome.evaluations, covariance: cov })
}

/// Weights as CSV rows `(asset_id, weight)`.
pub fn weights_to_csv(asset_ids: &[String], w: &WeightVector) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("asset_id,weight\n");
    for (id, weight) in asset_ids.iter().zip(&w.weights) {
        writeln!(out, "{id},{weight}").unwrap();
    }
    out
}
