//! Price loading, log returns, and panel alignment.
//!
//! CSV input is a UTF-8 file with a header row, an ISO-8601 (`YYYY-MM-DD`)
//! date column, and one price column per asset. Rows with an unparseable
//! price are dropped per asset and counted; duplicate dates within one asset
//! are an error. Missing prices are dropped rather than forward-filled, since
//! forward-filling manufactures zero returns that bias the break statistics.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;

use crate::{Error, Result};

/// Raw price history for one asset. Timestamps strictly increasing, prices
/// strictly positive, length at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub asset_id: String,
    pub timestamps: Vec<NaiveDate>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, timestamps: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        let asset_id = asset_id.into();
        if timestamps.len() != prices.len() {
            return Err(Error::InvalidSeries {
                asset: asset_id,
                reason: format!("{} timestamps vs {} prices", timestamps.len(), prices.len()),
            });
        }
        if prices.len() < 2 {
            return Err(Error::InvalidSeries {
                asset: asset_id,
                reason: format!("length {} < 2", prices.len()),
            });
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                if pair[1] == pair[0] {
                    return Err(Error::DuplicateTimestamp { asset: asset_id, date: pair[0] });
                }
                return Err(Error::InvalidSeries {
                    asset: asset_id,
                    reason: format!("timestamps not increasing at {}", pair[1]),
                });
            }
        }
        if let Some(&p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidSeries {
                asset: asset_id,
                reason: format!("non-positive or non-finite price {p}"),
            });
        }
        Ok(Self { asset_id, timestamps, prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Log returns for one asset; entry `i` is `ln(p[i+1] / p[i])`, stamped with
/// the later date of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub asset_id: String,
    pub timestamps: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(asset_id: impl Into<String>, timestamps: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let asset_id = asset_id.into();
        if timestamps.len() != values.len() {
            return Err(Error::InvalidSeries {
                asset: asset_id,
                reason: format!("{} timestamps vs {} values", timestamps.len(), values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries { asset: asset_id, reason: "non-finite return".into() });
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidSeries {
                    asset: asset_id,
                    reason: format!("timestamps not increasing at {}", pair[1]),
                });
            }
        }
        Ok(Self { asset_id, timestamps, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Return series for several assets on one shared timestamp grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    assets: Vec<ReturnSeries>,
}

impl ReturnPanel {
    /// Wraps already-aligned series; all members must share one grid.
    pub fn new(assets: Vec<ReturnSeries>) -> Result<Self> {
        let first = assets.first().ok_or(Error::EmptyIntersection)?;
        for s in &assets[1..] {
            if s.timestamps != first.timestamps {
                return Err(Error::InvalidSeries {
                    asset: s.asset_id.clone(),
                    reason: "timestamp grid differs from first series".into(),
                });
            }
        }
        Ok(Self { assets })
    }

    pub fn assets(&self) -> &[ReturnSeries] {
        &self.assets
    }

    pub fn asset_ids(&self) -> Vec<String> {
        self.assets.iter().map(|s| s.asset_id.clone()).collect()
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.assets[0].timestamps
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn len(&self) -> usize {
        self.assets[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Restricts the panel to rows with dates in `[start, end]` (inclusive).
    pub fn slice_dates(&self, start: NaiveDate, end: NaiveDate) -> Result<ReturnPanel> {
        let keep: Vec<usize> = self.timestamps()
            .iter()
            .enumerate()
            .filter(|(_, d)| **d >= start && **d <= end)
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyIntersection);
        }
        let assets = self
            .assets
            .iter()
            .map(|s| ReturnSeries {
                asset_id: s.asset_id.clone(),
                timestamps: keep.iter().map(|&i| s.timestamps[i]).collect(),
                values: keep.iter().map(|&i| s.values[i]).collect(),
            })
            .collect();
        Ok(ReturnPanel { assets })
    }
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Header name of the date column.
    pub date_column: String,
    /// Price columns to load; `None` loads every non-date column.
    pub price_columns: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { date_column: "date".into(), price_columns: None }
    }
}

/// Result of a CSV load: the parsed series plus per-asset drop counts for
/// rows whose price cell failed to parse.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub series: Vec<PriceSeries>,
    pub dropped: Vec<(String, usize)>,
}

/// Loads a wide price CSV (`date` column plus one column per asset).
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadOutcome> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Csv(e.to_string()))?;

    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == schema.date_column)
        .ok_or_else(|| Error::MissingColumn(schema.date_column.clone()))?;

    let price_cols: Vec<(usize, String)> = match &schema.price_columns {
        Some(wanted) => wanted
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .map(|i| (i, name.clone()))
                    .ok_or_else(|| Error::MissingColumn(name.clone()))
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if price_cols.is_empty() {
        return Err(Error::Csv("no price columns".into()));
    }

    let mut per_asset: Vec<(Vec<NaiveDate>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); price_cols.len()];
    let mut dropped = vec![0usize; price_cols.len()];

    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let date_cell = record.get(date_idx).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(date_cell, "%Y-%m-%d")
            .map_err(|_| Error::Csv(format!("unparseable date {date_cell:?}")))?;
        for (slot, (col, _)) in price_cols.iter().enumerate() {
            let cell = record.get(*col).unwrap_or("").trim();
            match cell.parse::<f64>() {
                Ok(p) if p.is_finite() && p > 0.0 => {
                    per_asset[slot].0.push(date);
                    per_asset[slot].1.push(p);
                }
                _ => dropped[slot] += 1,
            }
        }
    }

    let mut series = Vec::with_capacity(price_cols.len());
    for (slot, (_, name)) in price_cols.iter().enumerate() {
        let (dates, prices) = std::mem::take(&mut per_asset[slot]);
        if dates.is_empty() {
            return Err(Error::NoParseableRows { asset: name.clone() });
        }
        series.push(PriceSeries::new(name.clone(), dates, prices)?);
    }

    let dropped = price_cols
        .iter()
        .zip(&dropped)
        .filter(|(_, d)| **d > 0)
        .map(|((_, name), d)| (name.clone(), *d))
        .collect();

    Ok(LoadOutcome { series, dropped })
}

/// Log returns: `values[i] = ln(prices[i+1] / prices[i])`, stamped with the
/// later date of each pair.
pub fn log_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    let values: Vec<f64> = series.prices.windows(2).map(|p| (p[1] / p[0]).ln()).collect();
    let timestamps = series.timestamps[1..].to_vec();
    ReturnSeries::new(series.asset_id.clone(), timestamps, values)
}

/// Restricts all series to the intersection of their timestamp grids,
/// preserving date order. Errors when the intersection is empty.
pub fn align(series: &[ReturnSeries]) -> Result<ReturnPanel> {
    let first = series.first().ok_or(Error::EmptyIntersection)?;
    let mut common: BTreeSet<NaiveDate> = first.timestamps.iter().copied().collect();
    for s in &series[1..] {
        let dates: BTreeSet<NaiveDate> = s.timestamps.iter().copied().collect();
        common = common.intersection(&dates).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let assets = series
        .iter()
        .map(|s| {
            let mut timestamps = Vec::with_capacity(common.len());
            let mut values = Vec::with_capacity(common.len());
            for (d, v) in s.timestamps.iter().zip(&s.values) {
                if common.contains(d) {
                    timestamps.push(*d);
                    values.push(*v);
                }
            }
            ReturnSeries { asset_id: s.asset_id.clone(), timestamps, values }
        })
        .collect();
    ReturnPanel::new(assets)
}
