//! `cpo` command line: break detection, break-set distances, allocation,
//! simulation, clustering, and backtesting as composable file-based steps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical or
//! infeasibility error. All randomness flows from explicit seeds, and output
//! files are written atomically (temp file + rename), so a command with
//! fixed inputs and seed produces byte-identical artifacts on every run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use cpo::backtest::{
    density_to_csv, paths_to_csv, predictive_density, run_backtest, AllocationMethod,
    BacktestConfig, BacktestReport,
};
use cpo::changepoint::{
    breaks_from_csv_path, breaks_to_csv, detect_breaks_with_store, BreakSet, DetectionLevel,
    DetectorConfig, ThresholdStore,
};
use cpo::cluster::{cut, hclust, partition_to_csv, to_newick, Linkage};
use cpo::ingest::{align, load_csv, log_returns, CsvSchema, ReturnPanel, ReturnSeries};
use cpo::optimizer::{
    allocate_cpo, allocate_cpo_from_breaks, allocate_mvo, weights_to_csv, Bounds, WeightVector,
};
use cpo::setdist::{affinity_matrix, distance_matrix, DistanceMatrix, DistanceMeasure};
use cpo::synthetic::{sim_to_csv, simulate, SimSpec};

#[derive(Parser)]
#[command(name = "cpo", version, about = "Change-point portfolio optimization pipeline")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random component.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for the command's artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Directory for cached detection threshold tables.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Include wall-clock timings in reports (off by default so outputs
    /// stay byte-identical across runs).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect structural breaks in each asset of a price CSV.
    Detect(DetectArgs),
    /// Pairwise break-set distance and affinity matrices.
    Distmat(DistmatArgs),
    /// Allocate portfolio weights from prices (and optionally breaks).
    Optimize(OptimizeArgs),
    /// Simulate a GARCH-with-jumps return series from a spec file.
    Simulate(SimulateArgs),
    /// Hierarchical clustering of a distance matrix.
    Cluster(ClusterArgs),
    /// Train/test comparison of the allocation methods.
    Backtest(BacktestArgs),
}

#[derive(Args, Clone, Default)]
struct DetectorFlags {
    /// Batch false-positive level in (0,1); mutually exclusive with --arl0.
    #[arg(long)]
    alpha: Option<f64>,
    /// Sequential average run length to false alarm.
    #[arg(long)]
    arl0: Option<u32>,
    /// Minimum segment length between breaks.
    #[arg(long)]
    min_segment: Option<usize>,
    /// Monte-Carlo replications for threshold calibration.
    #[arg(long)]
    mc_reps: Option<usize>,
    /// Sequential calibration horizon (defaults to 2 * ARL0).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct MeasureFlags {
    /// Distance between break sets: mj, hausdorff, or wasserstein.
    #[arg(long)]
    measure: Option<String>,
    /// Order of the MJ semi-metric.
    #[arg(long)]
    p: Option<f64>,
    /// Order of the Wasserstein metric.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
struct DetectArgs {
    /// Price CSV: a date column plus one column per asset.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Header of the date column.
    #[arg(long)]
    date_column: Option<String>,
    /// Comma-separated asset columns (default: all non-date columns).
    #[arg(long)]
    assets: Option<String>,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Args)]
struct DistmatArgs {
    /// Breaks CSV as produced by `cpo detect`.
    #[arg(long)]
    breaks: Option<PathBuf>,
    #[command(flatten)]
    measure: MeasureFlags,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Precomputed breaks CSV; when absent, breaks are detected in-process.
    #[arg(long)]
    breaks: Option<PathBuf>,
    /// cpo or mvo.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    date_column: Option<String>,
    #[command(flatten)]
    measure: MeasureFlags,
    #[command(flatten)]
    detector: DetectorFlags,
    /// Uniform lower weight bound.
    #[arg(long)]
    lower: Option<f64>,
    /// Uniform upper weight bound.
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long)]
    risk_free: Option<f64>,
    /// Weight grid step; must divide 1.
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation spec JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Distance matrix CSV as produced by `cpo distmat`.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// average, single, or complete.
    #[arg(long)]
    linkage: Option<String>,
    /// Cluster count; when set, partition.csv is emitted.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct BacktestArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    date_column: Option<String>,
    /// Training window as START:END (ISO dates).
    #[arg(long)]
    train: Option<String>,
    /// Test window as START:END (ISO dates).
    #[arg(long)]
    test: Option<String>,
    /// cpo, mvo, or both.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    measure: MeasureFlags,
    #[command(flatten)]
    detector: DetectorFlags,
    #[arg(long)]
    lower: Option<f64>,
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long)]
    risk_free: Option<f64>,
    #[arg(long)]
    resolution: Option<f64>,
    /// Histogram bin count for the density table.
    #[arg(long)]
    bins: Option<usize>,
}

/// File-config mirror of the flags; every field optional, flags win.
#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    #[serde(default)]
    detect: DetectSection,
    #[serde(default)]
    distmat: DistmatSection,
    #[serde(default)]
    optimize: OptimizeSection,
    #[serde(default)]
    simulate: SimulateSection,
    #[serde(default)]
    cluster: ClusterSection,
    #[serde(default)]
    backtest: BacktestSection,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    alpha: Option<f64>,
    arl0: Option<u32>,
    min_segment: Option<usize>,
    mc_reps: Option<usize>,
    horizon: Option<usize>,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct MeasureSection {
    measure: Option<String>,
    p: Option<f64>,
    q: Option<f64>,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct DetectSection {
    prices: Option<PathBuf>,
    date_column: Option<String>,
    assets: Option<String>,
    #[serde(flatten)]
    detector: DetectorSection,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct DistmatSection {
    breaks: Option<PathBuf>,
    #[serde(flatten)]
    measure: MeasureSection,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct OptimizeSection {
    prices: Option<PathBuf>,
    breaks: Option<PathBuf>,
    method: Option<String>,
    date_column: Option<String>,
    lower: Option<f64>,
    upper: Option<f64>,
    risk_free: Option<f64>,
    resolution: Option<f64>,
    #[serde(flatten)]
    measure: MeasureSection,
    #[serde(flatten)]
    detector: DetectorSection,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct SimulateSection {
    spec: Option<PathBuf>,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct ClusterSection {
    dist: Option<PathBuf>,
    linkage: Option<String>,
    k: Option<usize>,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct BacktestSection {
    prices: Option<PathBuf>,
    date_column: Option<String>,
    train: Option<String>,
    test: Option<String>,
    method: Option<String>,
    lower: Option<f64>,
    upper: Option<f64>,
    risk_free: Option<f64>,
    resolution: Option<f64>,
    bins: Option<usize>,
    #[serde(flatten)]
    measure: MeasureSection,
    #[serde(flatten)]
    detector: DetectorSection,
}

/// Errors with an exit-code category.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<cpo::Error> for CliError {
    fn from(err: cpo::Error) -> Self {
        match err.kind() {
            cpo::ErrorKind::Data => CliError::Data(err.to_string()),
            cpo::ErrorKind::Numerical => CliError::Numerical(err.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Usage(_) => ExitCode::from(1),
                CliError::Data(_) => ExitCode::from(2),
                CliError::Numerical(_) => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file_config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| data(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| data(format!("bad config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let seed = cli.seed.or(file_config.seed).unwrap_or(0);
    let out_dir = cli.out_dir.clone().or(file_config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| data(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let store = match cli.cache_dir.clone().or(file_config.cache_dir.clone()) {
        Some(dir) => ThresholdStore::with_dir(dir)?,
        None => ThresholdStore::in_memory(),
    };
    let timings = cli.timings;

    match cli.command {
        Command::Detect(args) => cmd_detect(args, &file_config.detect, seed, &out_dir, &store),
        Command::Distmat(args) => cmd_distmat(args, &file_config.distmat, &out_dir),
        Command::Optimize(args) => {
            cmd_optimize(args, &file_config.optimize, seed, &out_dir, &store, timings)
        }
        Command::Simulate(args) => cmd_simulate(args, &file_config.simulate, cli.seed, &out_dir),
        Command::Cluster(args) => cmd_cluster(args, &file_config.cluster, &out_dir),
        Command::Backtest(args) => cmd_backtest(args, &file_config.backtest, seed, &out_dir, &store),
    }
}

fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content).map_err(|e| data(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| data(format!("cannot rename to {}: {e}", path.display())))?;
    Ok(())
}

fn detector_config(flags: &DetectorFlags, section: &DetectorSection, seed: u64) -> CliResult<DetectorConfig> {
    let alpha = flags.alpha.or(section.alpha);
    let arl0 = flags.arl0.or(section.arl0);
    let level = match (alpha, arl0) {
        (Some(_), Some(_)) => return Err(usage("--alpha and --arl0 are mutually exclusive")),
        (Some(a), None) => DetectionLevel::Alpha(a),
        (None, Some(r)) => DetectionLevel::Arl0(r),
        (None, None) => DetectionLevel::Arl0(1000),
    };
    let defaults = DetectorConfig::default();
    Ok(DetectorConfig {
        level,
        min_segment: flags.min_segment.or(section.min_segment).unwrap_or(defaults.min_segment),
        mc_reps: flags.mc_reps.or(section.mc_reps).unwrap_or(defaults.mc_reps),
        seed,
        horizon: flags.horizon.or(section.horizon),
    })
}

fn measure_config(flags: &MeasureFlags, section: &MeasureSection) -> CliResult<DistanceMeasure> {
    let name = flags.measure.clone().or(section.measure.clone()).unwrap_or_else(|| "mj".into());
    let measure = match name.as_str() {
        "mj" => DistanceMeasure::Mj { p: flags.p.or(section.p).unwrap_or(0.5) },
        "hausdorff" => DistanceMeasure::Hausdorff,
        "wasserstein" => DistanceMeasure::Wasserstein { q: flags.q.or(section.q).unwrap_or(1.0) },
        other => return Err(usage(format!("unknown measure {other:?} (mj, hausdorff, wasserstein)"))),
    };
    measure.validate()?;
    Ok(measure)
}

fn load_panel(
    prices: &Path,
    date_column: Option<String>,
    assets: Option<String>,
) -> CliResult<(ReturnPanel, Vec<(String, usize)>)> {
    let schema = CsvSchema {
        date_column: date_column.unwrap_or_else(|| "date".into()),
        price_columns: assets.map(|list| list.split(',').map(|s| s.trim().to_string()).collect()),
    };
    let outcome = load_csv(prices, &schema)?;
    let returns: Vec<ReturnSeries> =
        outcome.series.iter().map(log_returns).collect::<Result<_, _>>()?;
    let panel = align(&returns)?;
    Ok((panel, outcome.dropped))
}

fn report_drops(dropped: &[(String, usize)]) {
    for (asset, count) in dropped {
        eprintln!("note: dropped {count} unparseable price cell(s) for {asset}");
    }
}

fn cmd_detect(
    args: DetectArgs,
    section: &DetectSection,
    seed: u64,
    out_dir: &Path,
    store: &ThresholdStore,
) -> CliResult<()> {
    let prices = args
        .prices
        .or(section.prices.clone())
        .ok_or_else(|| usage("--prices is required"))?;
    let config = detector_config(&args.detector, &section.detector, seed)?;
    config.validate()?;
    let (panel, dropped) = load_panel(
        &prices,
        args.date_column.or(section.date_column.clone()),
        args.assets.or(section.assets.clone()),
    )?;
    report_drops(&dropped);

    store.sequential(&config)?;
    let mut rows: Vec<(BreakSet, &ReturnSeries)> = Vec::new();
    for series in panel.assets() {
        let breaks = detect_breaks_with_store(series, &config, store)?;
        eprintln!("{}: {} break(s)", series.asset_id, breaks.len());
        rows.push((breaks, series));
    }
    write_atomic(&out_dir.join("breaks.csv"), &breaks_to_csv(&rows))
}

fn cmd_distmat(args: DistmatArgs, section: &DistmatSection, out_dir: &Path) -> CliResult<()> {
    let breaks_path = args
        .breaks
        .or(section.breaks.clone())
        .ok_or_else(|| usage("--breaks is required"))?;
    let measure = measure_config(&args.measure, &section.measure)?;
    let breaks = breaks_from_csv_path(&breaks_path, None)?;
    let dist = distance_matrix(&breaks, measure)?;
    let affinity = affinity_matrix(&dist);
    write_atomic(&out_dir.join("dist.csv"), &dist.to_csv())?;
    write_atomic(&out_dir.join("affinity.csv"), &affinity.to_csv())
}

fn weights_report_json(
    method: &str,
    asset_ids: &[String],
    weights: &WeightVector,
    objective_value: f64,
    resolution: f64,
    evaluations: u64,
    wall_time_ms: Option<f64>,
) -> String {
    let mut weight_map = serde_json::Map::new();
    for (id, w) in asset_ids.iter().zip(&weights.weights) {
        weight_map.insert(id.clone(), serde_json::json!(w));
    }
    let report = serde_json::json!({
        "method": method,
        "objective_value": objective_value,
        "resolution": resolution,
        "evaluations": evaluations,
        "wall_time_ms": wall_time_ms,
        "weights": weight_map,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

fn cmd_optimize(
    args: OptimizeArgs,
    section: &OptimizeSection,
    seed: u64,
    out_dir: &Path,
    store: &ThresholdStore,
    timings: bool,
) -> CliResult<()> {
    let prices = args
        .prices
        .or(section.prices.clone())
        .ok_or_else(|| usage("--prices is required"))?;
    let method = args
        .method
        .or(section.method.clone())
        .ok_or_else(|| usage("--method is required (cpo or mvo)"))?;
    let (panel, dropped) = load_panel(&prices, args.date_column.or(section.date_column.clone()), None)?;
    report_drops(&dropped);

    let n = panel.n_assets();
    let lower = args.lower.or(section.lower).unwrap_or(0.0);
    let upper = args.upper.or(section.upper).unwrap_or(1.0);
    let bounds = Bounds::uniform(n, lower, upper);
    let risk_free = args.risk_free.or(section.risk_free).unwrap_or(0.0);
    let resolution = args.resolution.or(section.resolution).unwrap_or(0.005);

    let started = Instant::now();
    let (weights, value, evaluations) = match method.as_str() {
        "cpo" => {
            let measure = measure_config(&args.measure, &section.measure)?;
            let out = match args.breaks.or(section.breaks.clone()) {
                Some(breaks_path) => {
                    let breaks = breaks_from_csv_path(&breaks_path, Some(&panel.asset_ids()))?;
                    allocate_cpo_from_breaks(&panel, &breaks, measure, &bounds, risk_free, resolution)?
                }
                None => {
                    let detector = detector_config(&args.detector, &section.detector, seed)?;
                    allocate_cpo(&panel, &detector, measure, &bounds, risk_free, resolution, store)?
                }
            };
            (out.weights, out.value, out.evaluations)
        }
        "mvo" => {
            let out = allocate_mvo(&panel, &bounds, risk_free, resolution)?;
            (out.weights, out.value, out.evaluations)
        }
        other => return Err(usage(format!("unknown method {other:?} (cpo or mvo)"))),
    };
    let wall_time_ms = timings.then(|| started.elapsed().as_secs_f64() * 1e3);

    write_atomic(&out_dir.join("weights.csv"), &weights_to_csv(&panel.asset_ids(), &weights))?;
    write_atomic(
        &out_dir.join("report.json"),
        &weights_report_json(&method, &panel.asset_ids(), &weights, value, resolution, evaluations, wall_time_ms),
    )
}

fn cmd_simulate(
    args: SimulateArgs,
    section: &SimulateSection,
    seed_flag: Option<u64>,
    out_dir: &Path,
) -> CliResult<()> {
    let spec_path = args
        .spec
        .or(section.spec.clone())
        .ok_or_else(|| usage("--spec is required"))?;
    let text = std::fs::read_to_string(&spec_path)
        .map_err(|e| data(format!("cannot read spec {}: {e}", spec_path.display())))?;
    let mut spec: SimSpec = serde_json::from_str(&text)
        .map_err(|e| data(format!("bad simulation spec {}: {e}", spec_path.display())))?;
    if let Some(seed) = seed_flag {
        spec.seed = seed;
    }
    let out = simulate(&spec)?;
    write_atomic(&out_dir.join("returns.csv"), &sim_to_csv(&out))
}

fn cmd_cluster(args: ClusterArgs, section: &ClusterSection, out_dir: &Path) -> CliResult<()> {
    let dist_path = args
        .dist
        .or(section.dist.clone())
        .ok_or_else(|| usage("--dist is required"))?;
    let linkage: Linkage = args
        .linkage
        .or(section.linkage.clone())
        .map(|name| name.parse())
        .transpose()?
        .unwrap_or_default();
    let dist = DistanceMatrix::from_csv_path(&dist_path)?;
    let dendrogram = hclust(&dist, linkage)?;

    let mut json = serde_json::to_string_pretty(&dendrogram).expect("dendrogram serializes");
    json.push('\n');
    write_atomic(&out_dir.join("dendrogram.json"), &json)?;
    write_atomic(&out_dir.join("dendrogram.nwk"), &to_newick(&dendrogram))?;
    if let Some(k) = args.k.or(section.k) {
        let partition = cut(&dendrogram, k)?;
        write_atomic(&out_dir.join("partition.csv"), &partition_to_csv(&partition))?;
    }
    Ok(())
}

fn parse_date_range(text: &str, flag: &str) -> CliResult<(NaiveDate, NaiveDate)> {
    let (start, end) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("--{flag} must be START:END, got {text:?}")))?;
    let parse = |s: &str| {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map_err(|_| usage(format!("--{flag}: bad date {s:?} (expected YYYY-MM-DD)")))
    };
    Ok((parse(start)?, parse(end)?))
}

fn backtest_report_json(report: &BacktestReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

fn cmd_backtest(
    args: BacktestArgs,
    section: &BacktestSection,
    seed: u64,
    out_dir: &Path,
    store: &ThresholdStore,
) -> CliResult<()> {
    let prices = args
        .prices
        .or(section.prices.clone())
        .ok_or_else(|| usage("--prices is required"))?;
    let train = args.train.or(section.train.clone()).ok_or_else(|| usage("--train is required"))?;
    let test = args.test.or(section.test.clone()).ok_or_else(|| usage("--test is required"))?;
    let (train_start, train_end) = parse_date_range(&train, "train")?;
    let (test_start, test_end) = parse_date_range(&test, "test")?;
    let method = args.method.or(section.method.clone()).unwrap_or_else(|| "both".into());
    let methods: Vec<AllocationMethod> = match method.as_str() {
        "cpo" => vec![AllocationMethod::Cpo],
        "mvo" => vec![AllocationMethod::Mvo],
        "both" => vec![AllocationMethod::Cpo, AllocationMethod::Mvo],
        other => return Err(usage(format!("unknown method {other:?} (cpo, mvo, both)"))),
    };

    let (panel, dropped) = load_panel(&prices, args.date_column.or(section.date_column.clone()), None)?;
    report_drops(&dropped);
    let n = panel.n_assets();
    let bounds = Bounds::uniform(
        n,
        args.lower.or(section.lower).unwrap_or(0.0),
        args.upper.or(section.upper).unwrap_or(1.0),
    );
    let detector = detector_config(&args.detector, &section.detector, seed)?;
    let measure = measure_config(&args.measure, &section.measure)?;
    let bins = args.bins.or(section.bins).unwrap_or(50);

    let mut reports = Vec::new();
    for method in methods {
        let config = BacktestConfig {
            method,
            train_start,
            train_end,
            test_start,
            test_end,
            detector: detector.clone(),
            measure,
            bounds: bounds.clone(),
            risk_free: args.risk_free.or(section.risk_free).unwrap_or(0.0),
            resolution: args.resolution.or(section.resolution).unwrap_or(0.005),
        };
        let report = run_backtest(&panel, &config, store)?;
        let name = match method {
            AllocationMethod::Cpo => "report_cpo.json",
            AllocationMethod::Mvo => "report_mvo.json",
        };
        write_atomic(&out_dir.join(name), &backtest_report_json(&report))?;
        reports.push(report);
    }

    let refs: Vec<&BacktestReport> = reports.iter().collect();
    write_atomic(&out_dir.join("paths.csv"), &paths_to_csv(&refs))?;
    let densities: Vec<(AllocationMethod, Vec<cpo::backtest::DensityRow>)> = reports
        .iter()
        .map(|r| Ok((r.method, predictive_density(&r.portfolio_returns, bins)?)))
        .collect::<CliResult<_>>()?;
    write_atomic(&out_dir.join("density.csv"), &density_to_csv(&densities))
}
