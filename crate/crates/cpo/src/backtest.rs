//! Train/test evaluation harness for the two allocation methods.
//!
//! Weights are fitted on the training window and held fixed over the test
//! window (buy and hold, no rebalancing). Per-period portfolio returns are
//! weighted sums of simple returns `exp(x) - 1` derived from the log
//! returns; the cumulative path compounds multiplicatively. The report's
//! mean is the per-period gross mean, kurtosis is bias-uncorrected excess
//! kurtosis, and the conventions are spelled out in the report itself since
//! several are ambiguous in common usage.

use chrono::NaiveDate;
use serde::Serialize;

use crate::changepoint::{DetectorConfig, ThresholdStore};
use crate::ingest::ReturnPanel;
use crate::optimizer::{allocate_cpo, allocate_mvo, Bounds, WeightVector};
use crate::setdist::DistanceMeasure;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMethod {
    Cpo,
    Mvo,
}

impl std::str::FromStr for AllocationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpo" => Ok(AllocationMethod::Cpo),
            "mvo" => Ok(AllocationMethod::Mvo),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Backtest settings: disjoint date windows plus the allocation knobs.
#[derive(Debug, Clone)]
pub struct BacktestConfig {
    pub method: AllocationMethod,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    pub detector: DetectorConfig,
    pub measure: DistanceMeasure,
    pub bounds: Bounds,
    pub risk_free: f64,
    pub resolution: f64,
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_start > self.train_end || self.test_start > self.test_end {
            return Err(Error::InvalidConfig("date range start after end".into()));
        }
        if self.train_end >= self.test_start {
            return Err(Error::InvalidConfig("training window must end before the test window".into()));
        }
        self.detector.validate()
    }
}

/// Measurement conventions baked into the report fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub mean: &'static str,
    pub std_dev: &'static str,
    pub kurtosis: &'static str,
    pub rebalancing: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            mean: "per-period gross return, arithmetic mean",
            std_dev: "sample standard deviation (n-1) of per-period simple returns",
            kurtosis: "excess kurtosis of per-period simple returns, bias-uncorrected",
            rebalancing: "buy-and-hold; weights fixed at the training estimate",
        }
    }
}

/// Out-of-sample results for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub method: AllocationMethod,
    pub asset_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub objective_value: f64,
    pub test_dates: Vec<NaiveDate>,
    /// Per-period portfolio simple returns over the test window.
    pub portfolio_returns: Vec<f64>,
    /// Cumulative value path, starting at 1.
    pub cumulative_path: Vec<f64>,
    /// Final gross cumulative return.
    pub cumulative_return: f64,
    pub mean_gross: f64,
    pub std_dev: f64,
    pub max_drawdown_pct: f64,
    pub excess_kurtosis: f64,
    pub conventions: Conventions,
}

/// Fits weights on the training slice and evaluates them, frozen, on the
/// test slice.
pub fn run_backtest(
    panel: &ReturnPanel,
    config: &BacktestConfig,
    store: &ThresholdStore,
) -> Result<BacktestReport> {
    config.validate()?;
    let train = panel.slice_dates(config.train_start, config.train_end)?;
    let test = panel.slice_dates(config.test_start, config.test_end)?;
    if train.len() < 2 * config.detector.min_segment {
        return Err(Error::SeriesTooShort { len: train.len(), min: 2 * config.detector.min_segment });
    }

    let (weights, objective_value) = match config.method {
        AllocationMethod::Cpo => {
            let out = allocate_cpo(
                &train,
                &config.detector,
                config.measure,
                &config.bounds,
                config.risk_free,
                config.resolution,
                store,
            )?;
            (out.weights, out.value)
        }
        AllocationMethod::Mvo => {
            let out = allocate_mvo(&train, &config.bounds, config.risk_free, config.resolution)?;
            (out.weights, out.value)
        }
    };

    Ok(evaluate_holding(&test, &weights, config.method, objective_value))
}

/// Applies fixed weights to a test panel.
pub fn evaluate_holding(
    test: &ReturnPanel,
    weights: &WeightVector,
    method: AllocationMethod,
    objective_value: f64,
) -> BacktestReport {
    let t = test.len();
    let mut portfolio_returns = Vec::with_capacity(t);
    for row in 0..t {
        let r: f64 = test
            .assets()
            .iter()
            .zip(&weights.weights)
            .map(|(series, w)| w * (series.values[row].exp() - 1.0))
            .sum();
        portfolio_returns.push(r);
    }
    let mut cumulative_path = Vec::with_capacity(t + 1);
    cumulative_path.push(1.0);
    for r in &portfolio_returns {
        cumulative_path.push(cumulative_path.last().unwrap() * (1.0 + r));
    }
    let n = portfolio_returns.len() as f64;
    let mean_gross = portfolio_returns.iter().map(|r| 1.0 + r).sum::<f64>() / n;
    let mean = portfolio_returns.iter().sum::<f64>() / n;
    let std_dev = if portfolio_returns.len() > 1 {
        (portfolio_returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };

    BacktestReport {
        method,
        asset_ids: test.asset_ids(),
        weights: weights.weights.clone(),
        objective_value,
        test_dates: test.timestamps().to_vec(),
        cumulative_return: *cumulative_path.last().unwrap(),
        max_drawdown_pct: max_drawdown(&cumulative_path).unwrap_or(0.0),
        excess_kurtosis: excess_kurtosis(&portfolio_returns).unwrap_or(0.0),
        portfolio_returns,
        cumulative_path,
        mean_gross,
        std_dev,
        conventions: Conventions::default(),
    }
}

/// Largest peak-to-trough decline of a positive value path, in percent.
pub fn max_drawdown(path: &[f64]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidConfig("drawdown of an empty path".into()));
    }
    if path.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidConfig("drawdown path must be positive".into()));
    }
    let mut peak = path[0];
    let mut worst = 0.0f64;
    for &v in path {
        if v > peak {
            peak = v;
        }
        worst = worst.max((peak - v) / peak * 100.0);
    }
    Ok(worst)
}

/// Sample excess kurtosis, bias-uncorrected: `m4 / m2^2 - 3` with both
/// moments divided by `n`.
pub fn excess_kurtosis(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 4 {
        return Err(Error::SeriesTooShort { len: n, min: 4 });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// One row of the density table: a bin center with its kernel density
/// estimate and raw histogram count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub density: f64,
    pub count: usize,
}

/// Gaussian kernel density at the bin centers of a `bins`-bin histogram,
/// with Silverman's rule-of-thumb bandwidth
/// `0.9 * min(sd, iqr / 1.34) * n^(-1/5)`.
pub fn predictive_density(returns: &[f64], bins: usize) -> Result<Vec<DensityRow>> {
    if returns.is_empty() || bins == 0 {
        return Err(Error::InvalidConfig("density needs observations and at least one bin".into()));
    }
    let n = returns.len();
    let nf = n as f64;
    let mut sorted = returns.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (lo, hi) = (sorted[0], sorted[n - 1]);

    let mean = returns.iter().sum::<f64>() / nf;
    let sd = (returns.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf).sqrt();
    let quantile = |q: f64| -> f64 {
        let pos = q * (n - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < n {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    let iqr = quantile(0.75) - quantile(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let mut bandwidth = 0.9 * spread * nf.powf(-0.2);
    if bandwidth <= 0.0 {
        // Degenerate sample: all mass at one point.
        bandwidth = (lo.abs().max(1.0)) * 1e-9;
    }

    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut rows: Vec<DensityRow> = (0..bins)
        .map(|b| DensityRow { x: lo + (b as f64 + 0.5) * width, density: 0.0, count: 0 })
        .collect();
    for &v in returns {
        let mut b = ((v - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        rows[b].count += 1;
    }
    let norm = 1.0 / (nf * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    for row in &mut rows {
        row.density = returns
            .iter()
            .map(|&v| {
                let z = (row.x - v) / bandwidth;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm;
    }
    Ok(rows)
}

/// Density table as CSV rows `(method, x, density, count)`.
pub fn density_to_csv(tables: &[(AllocationMethod, Vec<DensityRow>)]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("method,x,density,count\n");
    for (method, rows) in tables {
        let name = match method {
            AllocationMethod::Cpo => "cpo",
            AllocationMethod::Mvo => "mvo",
        };
        for row in rows {
            writeln!(out, "{name},{},{},{}", row.x, row.density, row.count).unwrap();
        }
    }
    out
}

/// Cumulative paths as CSV, one date column plus one column per report.
pub fn paths_to_csv(reports: &[&BacktestReport]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("date");
    for report in reports {
        let name = match report.method {
            AllocationMethod::Cpo => "cpo",
            AllocationMethod::Mvo => "mvo",
        };
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    if reports.is_empty() {
        return out;
    }
    let dates = &reports[0].test_dates;
    for (row, date) in dates.iter().enumerate() {
        write!(out, "{date}").unwrap();
        for report in reports {
            write!(out, ",{}", report.cumulative_path[row + 1]).unwrap();
        }
        out.push('\n');
    }
    out
}
