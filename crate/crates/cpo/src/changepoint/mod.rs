//! Structural-break detection for return series.
//!
//! A series is modeled as i.i.d. between change points. Batch (phase I)
//! detection tests a fixed sequence for at most one break by maximizing the
//! normalized Mann-Whitney statistic over all admissible splits and comparing
//! against a simulated null quantile. Sequential (phase II) detection streams
//! observations, re-testing the growing segment at each step against
//! thresholds calibrated to a constant per-step false-alarm hazard
//! `alpha = 1/ARL0`; on detection the maximizing split becomes the break and
//! monitoring restarts from the observation immediately after it.
//!
//! Break indices are split positions: index `tau` means the distribution
//! changed between observations `tau` and `tau + 1` of the parent series
//! (1-based split, so `values[..tau]` precedes the break).

mod mann_whitney;
mod threshold;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::ReturnSeries;
use crate::{Error, Result};

pub use threshold::{
    build_batch_thresholds, build_sequential_thresholds, build_thresholds, ThresholdStore,
    ThresholdTable,
};

/// Detection phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Batch,
    Sequential,
}

/// False-alarm budget: a per-test level for batch detection or an average
/// run length for sequential detection. The two are reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionLevel {
    Alpha(f64),
    Arl0(u32),
}

/// Detector settings shared by both phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub level: DetectionLevel,
    /// Smallest allowed segment length and gap between breaks. Rank
    /// statistics carry no information below a couple dozen observations.
    pub min_segment: usize,
    /// Monte-Carlo replications for threshold calibration.
    pub mc_reps: usize,
    pub seed: u64,
    /// Sequential calibration horizon; `None` means `2 * ARL0`.
    pub horizon: Option<usize>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { level: DetectionLevel::Arl0(1000), min_segment: 20, mc_reps: 2000, seed: 0, horizon: None }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        match self.level {
            DetectionLevel::Alpha(a) if !(a > 0.0 && a < 1.0) => {
                return Err(Error::InvalidConfig(format!("alpha must lie in (0,1), got {a}")));
            }
            DetectionLevel::Arl0(0) => {
                return Err(Error::InvalidConfig("arl0 must be positive".into()));
            }
            _ => {}
        }
        if self.min_segment < 2 {
            return Err(Error::InvalidConfig(format!(
                "min_segment must be at least 2, got {}",
                self.min_segment
            )));
        }
        if self.mc_reps < 1000 {
            return Err(Error::InvalidConfig(format!(
                "mc_reps must be at least 1000, got {}",
                self.mc_reps
            )));
        }
        Ok(())
    }

    /// Per-test false-positive level.
    pub fn alpha(&self) -> f64 {
        match self.level {
            DetectionLevel::Alpha(a) => a,
            DetectionLevel::Arl0(r) => 1.0 / r as f64,
        }
    }

    /// Average run length to false alarm.
    pub fn arl0(&self) -> f64 {
        match self.level {
            DetectionLevel::Alpha(a) => 1.0 / a,
            DetectionLevel::Arl0(r) => r as f64,
        }
    }

    /// Sequential calibration horizon.
    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| (2.0 * self.arl0()).ceil() as usize)
    }
}

/// Detected break positions for one asset, strictly increasing, each in
/// `[1, n-1]` of the parent series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakSet {
    pub asset_id: String,
    pub indices: Vec<usize>,
}

impl BreakSet {
    pub fn new(asset_id: impl Into<String>, indices: Vec<usize>, series_len: usize) -> Result<Self> {
        let asset_id = asset_id.into();
        for pair in indices.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidSeries {
                    asset: asset_id,
                    reason: format!("break indices not increasing at {}", pair[1]),
                });
            }
        }
        if let (Some(&first), Some(&last)) = (indices.first(), indices.last()) {
            if first < 1 || last > series_len.saturating_sub(1) {
                return Err(Error::InvalidSeries {
                    asset: asset_id,
                    reason: format!("break index outside [1, {}]", series_len.saturating_sub(1)),
                });
            }
        }
        Ok(Self { asset_id, indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Normalized Mann-Whitney statistic for the split `{x_1..x_k}` vs
/// `{x_{k+1}..x_n}`, with mid-rank tie correction. Defined as 0 when every
/// observation is tied.
pub fn mw_normalized_stat(series: &ReturnSeries, k: usize) -> Result<f64> {
    let n = series.len();
    if n < 4 {
        return Err(Error::SeriesTooShort { len: n, min: 4 });
    }
    if k < 2 || k > n - 2 {
        return Err(Error::SplitOutOfRange { k, lo: 2, hi: n - 2 });
    }
    Ok(mann_whitney::stat_at(&series.values, k))
}

/// Batch detection against a prebuilt threshold table covering the series
/// length: the maximizing admissible split and its statistic when the scan
/// exceeds the null quantile, `None` otherwise.
pub fn batch_detect_with(
    series: &ReturnSeries,
    config: &DetectorConfig,
    table: &ThresholdTable,
) -> Result<Option<(usize, f64)>> {
    config.validate()?;
    let n = series.len();
    let m = config.min_segment;
    if n < 2 * m {
        return Err(Error::SeriesTooShort { len: n, min: 2 * m });
    }
    let h = table
        .batch_threshold(n)
        .ok_or_else(|| Error::InvalidConfig(format!("threshold table lacks length {n}")))?;
    let (k, d) = mann_whitney::batch_scan(&series.values, m, n - m)
        .expect("admissible range non-empty for n >= 2*min_segment");
    Ok((d > h).then_some((k, d)))
}

/// Batch detection, calibrating thresholds on the fly (see
/// [`ThresholdStore`] for the cached path).
pub fn batch_detect(series: &ReturnSeries, config: &DetectorConfig) -> Result<Option<(usize, f64)>> {
    let table = build_batch_thresholds(&[series.len()], config)?;
    batch_detect_with(series, config, &table)
}

/// Sequential detection against a prebuilt sequential threshold table.
///
/// Streams the series; whenever the scan statistic of the current segment
/// exceeds `h_t`, the maximizing split is recorded as a break and the
/// detector restarts from the observation immediately following it (already
/// seen observations are replayed into the fresh segment). Splits are
/// scanned over `[min_segment, t - 2]`: the left margin keeps consecutive
/// breaks at least `min_segment` apart, while the open right side lets a
/// fresh shift fire as soon as it carries weight.
pub fn sequential_detect_with(
    series: &ReturnSeries,
    config: &DetectorConfig,
    table: &ThresholdTable,
) -> Result<BreakSet> {
    config.validate()?;
    let values = &series.values;
    let n = values.len();
    let m = config.min_segment;
    let start = 2 * m;

    let mut breaks = Vec::new();
    let mut state = mann_whitney::MwState::new();
    let mut seg_start = 0usize;
    let mut i = 0usize;
    while i < n {
        state.push(values[i]);
        let t = state.len();
        if t >= start {
            let h = table.sequential_threshold(t);
            let (k, d) = state.max_stat(m, t - 2).expect("t >= 2 * min_segment");
            if d > h {
                let tau = seg_start + k;
                breaks.push(tau);
                seg_start = tau;
                state = mann_whitney::MwState::new();
                i = seg_start;
                continue;
            }
        }
        i += 1;
    }
    BreakSet::new(series.asset_id.clone(), breaks, n)
}

/// Sequential detection, calibrating thresholds on the fly.
pub fn sequential_detect(series: &ReturnSeries, config: &DetectorConfig) -> Result<BreakSet> {
    let table = build_sequential_thresholds(config)?;
    sequential_detect_with(series, config, &table)
}

/// Observation count at which sequential monitoring first fires on a raw
/// stream, `None` if it never does. Used for run-length studies.
pub fn first_alarm_time(
    values: &[f64],
    config: &DetectorConfig,
    table: &ThresholdTable,
) -> Result<Option<usize>> {
    config.validate()?;
    let m = config.min_segment;
    let start = 2 * m;
    let mut state = mann_whitney::MwState::new();
    for (i, &x) in values.iter().enumerate() {
        state.push(x);
        let t = i + 1;
        if t >= start {
            let h = table.sequential_threshold(t);
            let (_, d) = state.max_stat(m, t - 2).expect("t >= 2 * min_segment");
            if d > h {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

/// Full-history break detection: sequential detection over the whole series.
/// The restart rule spaces consecutive breaks at least `min_segment` apart.
pub fn detect_breaks(series: &ReturnSeries, config: &DetectorConfig) -> Result<BreakSet> {
    sequential_detect(series, config)
}

/// As [`detect_breaks`], reusing calibrated thresholds from `store`.
pub fn detect_breaks_with_store(
    series: &ReturnSeries,
    config: &DetectorConfig,
    store: &ThresholdStore,
) -> Result<BreakSet> {
    let table = store.sequential(config)?;
    sequential_detect_with(series, config, &table)
}

/// Breaks as CSV rows `(asset_id, index, timestamp)`; the timestamp is the
/// date of the first post-break observation.
pub fn breaks_to_csv(sets: &[(BreakSet, &ReturnSeries)]) -> String {
    let mut out = String::from("asset_id,index,timestamp\n");
    for (set, series) in sets {
        for &tau in &set.indices {
            writeln!(out, "{},{tau},{}", set.asset_id, series.timestamps[tau]).unwrap();
        }
    }
    out
}

/// Reads break sets from CSV with columns `asset_id,index[,timestamp]`.
/// Assets appear in first-occurrence order; an asset listed in `expected`
/// but absent from the file yields an empty set.
pub fn breaks_from_csv_path(path: impl AsRef<Path>, expected: Option<&[String]>) -> Result<Vec<BreakSet>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv(e.to_string()))?;
    let mut order: Vec<String> = Vec::new();
    let mut map: std::collections::HashMap<String, Vec<usize>> = std::collections::HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let asset = record.get(0).unwrap_or("").to_string();
        let idx: usize = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Csv(format!("bad break index {:?}", record.get(1))))?;
        if !map.contains_key(&asset) {
            order.push(asset.clone());
        }
        map.entry(asset).or_default().push(idx);
    }
    let ids: Vec<String> = match expected {
        Some(ids) => ids.to_vec(),
        None => order,
    };
    ids.into_iter()
        .map(|id| {
            let indices = map.remove(&id).unwrap_or_default();
            BreakSet::new(id, indices, usize::MAX)
        })
        .collect()
}
