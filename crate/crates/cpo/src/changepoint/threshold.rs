//! Monte-Carlo threshold calibration and the on-disk threshold cache.
//!
//! The statistic is rank-based, so its null distribution does not depend on
//! the sampling distribution; calibration simulates i.i.d. continuous noise.
//!
//! Batch thresholds: for each sequence length, the upper-alpha empirical
//! quantile of the scan statistic over `mc_reps` null replications.
//!
//! Sequential thresholds: `h_t` is chosen so the per-step false-alarm hazard,
//! conditional on no earlier alarm, stays at `alpha = 1/ARL0`. A population
//! of null streams is advanced one step at a time; at each step the streams
//! whose statistic exceeds the running quantile are culled and the quantile
//! is recorded as `h_t`. The culled count is randomized between
//! `floor(alpha*m)` and its successor so the average culled fraction is
//! exactly `alpha` rather than its floor. When the population thins below
//! 75% it is rebuilt by cloning random survivors (fresh innovation streams),
//! which keeps the surviving-path distribution intact. Beyond the calibrated
//! horizon the last threshold is reused; the null scan statistic grows very
//! slowly in `t`, so the flattening error is small.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mann_whitney::{batch_scan, MwState};
use super::{DetectorConfig, Phase};
use crate::par;
use crate::{Error, Result};

const TABLE_VERSION: u32 = 1;

/// Calibrated detection thresholds for one statistic, phase, and level.
///
/// For the batch phase, `lengths` are whole-sequence lengths. For the
/// sequential phase they are per-step times `2*min_segment ..= horizon`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThresholdTable {
    pub version: u32,
    pub statistic: String,
    pub phase: Phase,
    pub alpha: f64,
    pub min_segment: usize,
    pub mc_reps: usize,
    pub seed: u64,
    pub lengths: Vec<usize>,
    pub thresholds: Vec<f64>,
}

impl ThresholdTable {
    /// Batch threshold for an exact sequence length.
    pub fn batch_threshold(&self, n: usize) -> Option<f64> {
        debug_assert_eq!(self.phase, Phase::Batch);
        self.lengths.iter().position(|&l| l == n).map(|i| self.thresholds[i])
    }

    /// Sequential threshold at in-segment time `t`. Infinite before
    /// monitoring starts, last calibrated value past the horizon.
    pub fn sequential_threshold(&self, t: usize) -> f64 {
        debug_assert_eq!(self.phase, Phase::Sequential);
        let start = self.lengths[0];
        if t < start {
            return f64::INFINITY;
        }
        let idx = (t - start).min(self.lengths.len() - 1);
        self.thresholds[idx]
    }
}

/// Upper-alpha empirical quantile: the `ceil((1-alpha)*m)`-th smallest value.
fn upper_quantile(sorted_asc: &[f64], alpha: f64) -> f64 {
    let m = sorted_asc.len();
    let idx = ((1.0 - alpha) * m as f64).ceil() as usize;
    sorted_asc[idx.clamp(1, m) - 1]
}

fn null_sample(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Builds batch-phase thresholds for the given sequence lengths.
pub fn build_batch_thresholds(lengths: &[usize], config: &DetectorConfig) -> Result<ThresholdTable> {
    config.validate()?;
    let alpha = config.alpha();
    let m = config.min_segment;
    for &n in lengths {
        if n < 2 * m {
            return Err(Error::SeriesTooShort { len: n, min: 2 * m });
        }
    }
    let mut thresholds = Vec::with_capacity(lengths.len());
    for (li, &n) in lengths.iter().enumerate() {
        let mut stats = par::map_indexed(config.mc_reps, |rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
            rng.set_stream(((li as u64) << 40) | rep as u64);
            let values = null_sample(&mut rng, n);
            batch_scan(&values, m, n - m).map_or(0.0, |(_, d)| d)
        });
        stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thresholds.push(upper_quantile(&stats, alpha));
    }
    Ok(ThresholdTable {
        version: TABLE_VERSION,
        statistic: "mann-whitney".into(),
        phase: Phase::Batch,
        alpha,
        min_segment: m,
        mc_reps: config.mc_reps,
        seed: config.seed,
        lengths: lengths.to_vec(),
        thresholds,
    })
}

struct CalibStream {
    state: MwState,
    rng: ChaCha12Rng,
    alive: bool,
}

/// Builds sequential-phase thresholds out to `config.horizon()`.
pub fn build_sequential_thresholds(config: &DetectorConfig) -> Result<ThresholdTable> {
    config.validate()?;
    let alpha = 1.0 / config.arl0();
    let m_seg = config.min_segment;
    let start = 2 * m_seg;
    let horizon = config.horizon();
    if horizon < start {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} below monitoring start {start}"
        )));
    }
    let pool = config.mc_reps;

    let make_rng = |stream: u64| {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        rng
    };
    let mut streams: Vec<CalibStream> = (0..pool)
        .map(|i| CalibStream { state: MwState::new(), rng: make_rng(i as u64), alive: true })
        .collect();
    let mut next_stream_id = pool as u64;
    // Separate streams for the culled-count randomization and for picking
    // resampling donors, so neither perturbs the innovation draws.
    let mut coin_rng = make_rng(u64::MAX);
    let mut donor_rng = make_rng(u64::MAX - 1);

    let mut lengths = Vec::with_capacity(horizon - start + 1);
    let mut thresholds = Vec::with_capacity(horizon - start + 1);

    for t in 1..=horizon {
        let compute = t >= start;
        let stats: Vec<f64> = par::map_mut(&mut streams, |s| {
            if !s.alive {
                return f64::NAN;
            }
            let x: f64 = StandardNormal.sample(&mut s.rng);
            s.state.push(x);
            if compute {
                s.state.max_stat(m_seg, t - 2).map_or(0.0, |(_, d)| d)
            } else {
                f64::NAN
            }
        });
        if !compute {
            continue;
        }

        let mut alive: Vec<(usize, f64)> = stats
            .iter()
            .enumerate()
            .filter(|(i, _)| streams[*i].alive)
            .map(|(i, &d)| (i, d))
            .collect();
        let m_alive = alive.len();
        // Sort by statistic descending, index ascending on exact ties.
        alive.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

        let target = alpha * m_alive as f64;
        let mut kill = target.floor() as usize;
        if coin_rng.random::<f64>() < target.fract() {
            kill += 1;
        }
        kill = kill.min(m_alive - 1);

        let h = if kill == 0 {
            // Nothing culled this step: the largest surviving statistic is
            // the tightest threshold that kills nobody.
            alive[0].1
        } else {
            for &(idx, _) in &alive[..kill] {
                streams[idx].alive = false;
            }
            (alive[kill - 1].1 + alive[kill].1) / 2.0
        };
        lengths.push(t);
        thresholds.push(h);

        let n_alive = m_alive - kill;
        if n_alive * 4 < pool * 3 {
            let donors: Vec<usize> =
                streams.iter().enumerate().filter(|(_, s)| s.alive).map(|(i, _)| i).collect();
            for i in 0..streams.len() {
                if !streams[i].alive {
                    let donor = donors[donor_rng.random_range(0..donors.len())];
                    streams[i] = CalibStream {
                        state: streams[donor].state.clone(),
                        rng: make_rng(next_stream_id),
                        alive: true,
                    };
                    next_stream_id += 1;
                }
            }
        }
    }

    Ok(ThresholdTable {
        version: TABLE_VERSION,
        statistic: "mann-whitney".into(),
        phase: Phase::Sequential,
        alpha,
        min_segment: m_seg,
        mc_reps: config.mc_reps,
        seed: config.seed,
        lengths,
        thresholds,
    })
}

/// Builds a threshold table for either phase. For the sequential phase the
/// largest requested length becomes the calibration horizon.
pub fn build_thresholds(phase: Phase, lengths: &[usize], config: &DetectorConfig) -> Result<ThresholdTable> {
    match phase {
        Phase::Batch => build_batch_thresholds(lengths, config),
        Phase::Sequential => {
            let horizon = lengths.iter().copied().max();
            let mut config = config.clone();
            if let Some(h) = horizon {
                config.horizon = Some(h);
            }
            build_sequential_thresholds(&config)
        }
    }
}

/// FNV-1a, used for stable cache-file names.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Threshold cache: tables are expensive to calibrate, so they are memoized
/// in memory and, when a directory is configured, persisted as versioned
/// JSON keyed by a hash of the generating configuration.
pub struct ThresholdStore {
    dir: Option<PathBuf>,
    sequential: Mutex<Vec<ThresholdTable>>,
    batch: Mutex<Vec<ThresholdTable>>,
}

impl ThresholdStore {
    /// In-memory cache only.
    pub fn in_memory() -> Self {
        Self { dir: None, sequential: Mutex::new(Vec::new()), batch: Mutex::new(Vec::new()) }
    }

    /// Cache backed by `dir` (created if absent).
    pub fn with_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
        Ok(Self { dir: Some(dir), sequential: Mutex::new(Vec::new()), batch: Mutex::new(Vec::new()) })
    }

    fn cache_key(phase: Phase, config: &DetectorConfig, horizon: usize) -> String {
        let tag = match phase {
            Phase::Batch => format!("batch|alpha={}", config.alpha()),
            Phase::Sequential => format!("seq|arl0={}|horizon={horizon}", config.arl0()),
        };
        format!(
            "mw|{tag}|minseg={}|reps={}|seed={}|v{TABLE_VERSION}",
            config.min_segment, config.mc_reps, config.seed
        )
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("mw-{:016x}.json", fnv1a(key.as_bytes()))))
    }

    fn load(&self, key: &str) -> Option<ThresholdTable> {
        let path = self.cache_path(key)?;
        let text = std::fs::read_to_string(path).ok()?;
        let table: ThresholdTable = serde_json::from_str(&text).ok()?;
        (table.version == TABLE_VERSION).then_some(table)
    }

    fn save(&self, key: &str, table: &ThresholdTable) -> Result<()> {
        let Some(path) = self.cache_path(key) else {
            return Ok(());
        };
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(table)?;
        std::fs::write(&tmp, text).map_err(|e| Error::Io { path: tmp.clone(), source: e })?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::Io { path, source: e })?;
        Ok(())
    }

    fn matches(table: &ThresholdTable, phase: Phase, config: &DetectorConfig) -> bool {
        table.phase == phase
            && table.min_segment == config.min_segment
            && table.mc_reps == config.mc_reps
            && table.seed == config.seed
            && match phase {
                Phase::Batch => table.alpha == config.alpha(),
                Phase::Sequential => table.alpha == 1.0 / config.arl0(),
            }
    }

    /// Sequential table for `config`, building and caching on first use.
    pub fn sequential(&self, config: &DetectorConfig) -> Result<ThresholdTable> {
        let horizon = config.horizon();
        {
            let cache = self.sequential.lock().unwrap();
            if let Some(t) = cache
                .iter()
                .find(|t| Self::matches(t, Phase::Sequential, config) && t.lengths.len() + 2 * config.min_segment > horizon)
            {
                return Ok(t.clone());
            }
        }
        let key = Self::cache_key(Phase::Sequential, config, horizon);
        let table = match self.load(&key) {
            Some(t) if Self::matches(&t, Phase::Sequential, config) => t,
            _ => {
                let t = build_sequential_thresholds(config)?;
                self.save(&key, &t)?;
                t
            }
        };
        self.sequential.lock().unwrap().push(table.clone());
        Ok(table)
    }

    /// Batch table covering length `n` for `config`, building on first use.
    pub fn batch(&self, n: usize, config: &DetectorConfig) -> Result<ThresholdTable> {
        {
            let cache = self.batch.lock().unwrap();
            if let Some(t) = cache
                .iter()
                .find(|t| Self::matches(t, Phase::Batch, config) && t.lengths.contains(&n))
            {
                return Ok(t.clone());
            }
        }
        let key = Self::cache_key(Phase::Batch, config, 0);
        let mut table = match self.load(&key) {
            Some(t) if Self::matches(&t, Phase::Batch, config) => t,
            _ => build_batch_thresholds(&[n], config)?,
        };
        if !table.lengths.contains(&n) {
            let extra = build_batch_thresholds(&[n], config)?;
            table.lengths.push(n);
            table.thresholds.push(extra.thresholds[0]);
        }
        self.save(&key, &table)?;
        self.batch.lock().unwrap().push(table.clone());
        Ok(table)
    }
}
