//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them on success).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use cpo::backtest::{run_backtest, AllocationMethod, BacktestConfig};
use cpo::changepoint::{
    batch_detect_with, build_batch_thresholds, build_sequential_thresholds, first_alarm_time,
    sequential_detect_with, DetectionLevel, DetectorConfig, ThresholdStore, ThresholdTable,
};
use cpo::cluster::{cut, hclust, Linkage};
use cpo::ingest::{ReturnPanel, ReturnSeries};
use cpo::optimizer::{
    objective_value, optimize, PortfolioSpec, RiskMatrix, WeightVector,
};
use cpo::setdist::{
    affinity_matrix, distance_matrix, hausdorff_slice, mj_slice, wasserstein_slice, DistanceMeasure,
};
use cpo::synthetic::{simulate_cluster, SimSpec, SimOutput};

fn series(asset_id: &str, values: Vec<f64>) -> ReturnSeries {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let timestamps = (0..values.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
    ReturnSeries::new(asset_id, timestamps, values).unwrap()
}

fn normals(rng: &mut ChaCha12Rng, n: usize, mean: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            mean + z
        })
        .collect()
}

fn pass(name: &str, detail: String) {
    println!("criterion {name}: PASS - {detail}");
}

/// Sequential thresholds at ARL0 = 500, shared by criteria 4 and 5.
fn table_arl500() -> &'static (DetectorConfig, ThresholdTable) {
    static TABLE: OnceLock<(DetectorConfig, ThresholdTable)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let config = DetectorConfig {
            level: DetectionLevel::Arl0(500),
            min_segment: 20,
            mc_reps: 2000,
            seed: 5,
            horizon: Some(1000),
        };
        let table = build_sequential_thresholds(&config).unwrap();
        (config, table)
    })
}

/// Criterion 1: the offset-grid worked example, exact values, under 1 ms.
#[test]
fn criterion_1_worked_example_exact() {
    let s: Vec<f64> = (1..=9).map(|k| (100 * k) as f64).collect();
    let t: Vec<f64> = (2..=10).map(|k| (100 * k) as f64).collect();

    let started = Instant::now();
    let mj_half = mj_slice(&s, &t, 0.5).unwrap();
    let mj_one = mj_slice(&s, &t, 1.0).unwrap();
    let hausdorff = hausdorff_slice(&s, &t).unwrap();
    let wasserstein = wasserstein_slice(&s, &t, 1.0).unwrap();
    let elapsed = started.elapsed();

    assert!((mj_half - 100.0 / 81.0).abs() <= 1e-9, "MJ_0.5 = {mj_half}");
    assert!((mj_one - 100.0 / 9.0).abs() <= 1e-9, "MJ_1 = {mj_one}");
    assert_eq!(hausdorff, 100.0, "Hausdorff = {hausdorff}");
    assert!((wasserstein - 100.0).abs() <= 1e-9, "W_1 = {wasserstein}");
    assert!(elapsed.as_micros() < 1000, "runtime {elapsed:?} >= 1 ms");
    pass(
        "1",
        format!(
            "MJ_0.5 = {mj_half:.12}, MJ_1 = {mj_one:.9}, Hausdorff = {hausdorff}, W_1 = {wasserstein} in {elapsed:?}"
        ),
    );
}

/// Criterion 2: outlier asymptotics of Hausdorff and MJ.
#[test]
fn criterion_2_outlier_asymptotics() {
    let s: Vec<f64> = (1..=9).map(|k| (100 * k) as f64).collect();
    let outlier = 1e6;
    let mut t = s.clone();
    t.push(outlier);

    let h_ratio = hausdorff_slice(&s, &t).unwrap() / outlier;
    assert!((h_ratio - 1.0).abs() <= 0.01, "Hausdorff ratio {h_ratio}");
    let mut mj_ratios = Vec::new();
    for p in [0.5, 1.0] {
        let mj = mj_slice(&s, &t, p).unwrap();
        let ratio = mj * (2.0 * t.len() as f64).powf(1.0 / p) / outlier;
        assert!((ratio - 1.0).abs() <= 0.01, "MJ p={p} scaled ratio {ratio}");
        mj_ratios.push(ratio);
    }
    pass("2", format!("Hausdorff ratio {h_ratio:.6}; MJ scaled ratios {mj_ratios:?}"));
}

/// Criterion 3: intersection inequality on 1000 seeded pairs and the
/// Wasserstein translation identity on 100 seeded pairs.
#[test]
fn criterion_3_intersection_inequality_and_translation() {
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let mut max_slack: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        // Shared points on multiples of 3; set-specific extras on distinct
        // residues so the intersection size is exactly the shared count.
        let r_target = rng.random_range(0..5usize);
        let mut s: std::collections::BTreeSet<u64> = std::collections::BTreeSet::new();
        while s.len() < r_target {
            s.insert(rng.random_range(0..1000u64) * 3);
        }
        let mut t = s.clone();
        for _ in 0..rng.random_range(1..6usize) {
            s.insert(rng.random_range(0..1000u64) * 3 + 1);
        }
        for _ in 0..rng.random_range(1..6usize) {
            t.insert(rng.random_range(0..1000u64) * 3 + 2);
        }
        let sv: Vec<f64> = s.iter().map(|&x| x as f64).collect();
        let tv: Vec<f64> = t.iter().map(|&x| x as f64).collect();
        let r = s.intersection(&t).count() as f64;
        for p in [0.5, 1.0, 2.0] {
            let mj = mj_slice(&sv, &tv, p).unwrap();
            let h = hausdorff_slice(&sv, &tv).unwrap();
            let factor =
                (1.0 - (r / 2.0) * (1.0 / sv.len() as f64 + 1.0 / tv.len() as f64)).powf(1.0 / p);
            let slack = mj - factor * h;
            max_slack = max_slack.max(slack);
            assert!(slack <= 1e-9, "violation: p={p}, r={r}, slack={slack}");
        }
    }

    let mut max_translation_err: f64 = 0.0;
    for _ in 0..100 {
        let len = rng.random_range(1..10usize);
        let mut s: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 1000.0).collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup();
        let a = (rng.random::<f64>() - 0.5) * 2000.0;
        let shifted: Vec<f64> = s.iter().map(|x| x + a).collect();
        let d = wasserstein_slice(&s, &shifted, 1.0).unwrap();
        let err = (d - a.abs()).abs();
        max_translation_err = max_translation_err.max(err);
        assert!(err <= 1e-9, "translation: a={a}, d={d}");
    }
    pass(
        "3",
        format!(
            "inequality slack max {max_slack:.2e} over 1000 pairs; translation error max {max_translation_err:.2e} over 100 pairs"
        ),
    );
}

/// Criterion 4: detector calibration. Phase I false-positive rate inside the
/// binomial 99% CI around alpha; phase II empirical ARL within 25% of the
/// configured ARL0; all within the two-minute budget.
#[test]
fn criterion_4_detector_calibration() {
    let started = Instant::now();

    // Phase I at alpha = 0.05 on 1000 null series of length 400.
    let batch_config = DetectorConfig {
        level: DetectionLevel::Alpha(0.05),
        min_segment: 20,
        mc_reps: 10_000,
        seed: 2,
        horizon: None,
    };
    let table = build_batch_thresholds(&[400], &batch_config).unwrap();
    let rejections: usize = (0..1000)
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(777);
            rng.set_stream(i);
            let s = series("null", normals(&mut rng, 400, 0.0));
            usize::from(batch_detect_with(&s, &batch_config, &table).unwrap().is_some())
        })
        .sum();
    let rate = rejections as f64 / 1000.0;
    // 99% CI: 0.05 +/- 2.576 * sqrt(0.05 * 0.95 / 1000).
    let half_width = 2.576 * (0.05f64 * 0.95 / 1000.0).sqrt();
    assert!(
        (rate - 0.05).abs() <= half_width,
        "phase I rate {rate} outside 0.05 +/- {half_width:.4}"
    );

    // Phase II: mean run length to false alarm from monitoring start,
    // 200 null streams, censored at 8 * ARL0.
    let (seq_config, seq_table) = table_arl500();
    let monitor_start = 2 * seq_config.min_segment;
    let cap = 8 * 500;
    let run_lengths: Vec<usize> = (0..200)
        .map(|stream| {
            let mut rng = ChaCha12Rng::seed_from_u64(31_337);
            rng.set_stream(stream);
            let values = normals(&mut rng, cap, 0.0);
            let alarm = first_alarm_time(&values, seq_config, seq_table).unwrap();
            alarm.unwrap_or(cap) - monitor_start + 1
        })
        .collect();
    let mean_run = run_lengths.iter().sum::<usize>() as f64 / run_lengths.len() as f64;
    assert!(
        (mean_run - 500.0).abs() <= 125.0,
        "phase II empirical ARL {mean_run} outside 500 +/- 125"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "calibration took {elapsed:?}");
    pass(
        "4",
        format!("phase I rate {rate:.3} in 0.05 +/- {half_width:.4}; phase II ARL {mean_run:.1}; {elapsed:?}"),
    );
}

/// Criterion 5: two 8-sigma mean shifts recovered within +/-10 in at least
/// 90 of 100 seeded runs.
#[test]
fn criterion_5_detection_accuracy() {
    let (config, table) = table_arl500();
    let hits: usize = (0..100)
        .filter(|&run| {
            let mut rng = ChaCha12Rng::seed_from_u64(52_000 + run);
            let mut values = normals(&mut rng, 300, 0.0);
            values.extend(normals(&mut rng, 300, 8.0));
            values.extend(normals(&mut rng, 300, 0.0));
            let found = sequential_detect_with(&series("x", values), config, table).unwrap();
            [300i64, 600].iter().all(|&truth| {
                found.indices.iter().any(|&f| (f as i64 - truth).abs() <= 10)
            })
        })
        .count();
    assert!(hits >= 90, "recovered both shifts in only {hits}/100 runs");
    pass("5", format!("both 8-sigma shifts within +/-10 in {hits}/100 runs"));
}

/// Criterion 6: coarse grid search tracks an exhaustive fine-grid oracle
/// within one grid cell of objective variation, on 50 seeded instances.
#[test]
fn criterion_6_optimizer_oracle_equivalence() {
    fn fine_oracle(spec: &PortfolioSpec, risk: &RiskMatrix, resolution: f64) -> f64 {
        let units = (1.0 / resolution).round() as i64;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=units {
            for j in 0..=(units - i) {
                let k = units - i - j;
                let w = WeightVector {
                    weights: vec![
                        i as f64 * resolution,
                        j as f64 * resolution,
                        k as f64 * resolution,
                    ],
                };
                if let Ok(v) = objective_value(&w, spec, risk) {
                    best = best.max(v);
                }
            }
        }
        best
    }

    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    for instance in 0..50 {
        let n = 3;
        let spec = PortfolioSpec {
            asset_ids: (0..n).map(|i| format!("a{i}")).collect(),
            expected_returns: (0..n).map(|_| rng.random::<f64>() * 0.01).collect(),
            risk_free: 0.0,
            lower_bounds: vec![0.0; n],
            upper_bounds: vec![1.0; n],
        };
        let sets: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let len = rng.random_range(2..7usize);
                let mut v: Vec<f64> =
                    (0..len).map(|_| (rng.random_range(1..500u32) * 2) as f64).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                v
            })
            .collect();
        let breaks: Vec<cpo::changepoint::BreakSet> = sets
            .iter()
            .enumerate()
            .map(|(i, v)| cpo::changepoint::BreakSet {
                asset_id: format!("a{i}"),
                indices: v.iter().map(|&x| x as usize).collect(),
            })
            .collect();
        let affinity = affinity_matrix(&distance_matrix(&breaks, DistanceMeasure::Mj { p: 0.5 }).unwrap());
        let risk = RiskMatrix::from_affinity(&affinity);

        let coarse = optimize(&spec, &risk, 0.01).unwrap();
        let fine = fine_oracle(&spec, &risk, 0.001);

        // One coarse grid cell of variation around the coarse optimum.
        let mut cell = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut w = coarse.weights.weights.clone();
                let amt = 0.01f64.min(1.0 - w[i]).min(w[j]);
                if amt <= 0.0 {
                    continue;
                }
                w[i] += amt;
                w[j] -= amt;
                if let Ok(v) = objective_value(&WeightVector { weights: w }, &spec, &risk) {
                    cell = cell.max((coarse.value - v).abs());
                }
            }
        }
        let gap = fine - coarse.value;
        worst_gap = worst_gap.max(gap);
        assert!(gap <= cell + 1e-12, "instance {instance}: gap {gap} > cell variation {cell}");
    }
    pass("6", format!("50 instances; worst fine-minus-coarse gap {worst_gap:.2e}"));
}

/// The eight-asset break geometry mirroring the structured allocation
/// experiment: two internally identical triples and two mutually remote
/// singleton outliers.
fn table5_outputs() -> Vec<SimOutput> {
    let tight: Vec<usize> = (0..8).map(|k| 420 + 20 * k).collect();
    let spread = vec![60usize, 500, 940];
    let sets: Vec<Vec<usize>> = vec![
        tight.clone(),
        tight.clone(),
        tight,
        spread.clone(),
        spread.clone(),
        spread,
        vec![30],
        vec![970],
    ];
    let base = SimSpec { length: 1000, seed: 42, ..SimSpec::default() };
    simulate_cluster(&[], &sets, &base).unwrap()
}

/// Criterion 7: structured allocation. With equal expected returns and
/// bounds [5%, 40%], the outlier pair takes over half the portfolio, the
/// three-break cluster pins to the lower bound, and weights within each
/// cluster agree to one resolution step.
#[test]
fn criterion_7_structured_allocation() {
    let outputs = table5_outputs();
    let breaks: Vec<cpo::changepoint::BreakSet> =
        outputs.iter().map(|o| o.true_breaks.clone()).collect();
    let distances = distance_matrix(&breaks, DistanceMeasure::Mj { p: 0.5 }).unwrap();
    let affinity = affinity_matrix(&distances);
    let resolution = 0.01;
    let spec = PortfolioSpec {
        asset_ids: outputs.iter().map(|o| o.returns.asset_id.clone()).collect(),
        expected_returns: vec![0.001; 8],
        risk_free: 0.0,
        lower_bounds: vec![0.05; 8],
        upper_bounds: vec![0.40; 8],
    };
    let out = optimize(&spec, &RiskMatrix::from_affinity(&affinity), resolution).unwrap();
    let w = &out.weights.weights;

    let outlier_mass = w[6] + w[7];
    assert!(outlier_mass > 0.5, "outliers hold {outlier_mass}");
    for (i, &wi) in w.iter().enumerate().take(6).skip(3) {
        assert!(wi <= 0.05 + 1e-9, "asset {} above the floor: {wi}", i + 1);
    }
    for cluster in [[0usize, 1, 2], [3, 4, 5]] {
        for pair in cluster.windows(2) {
            assert!(
                (w[pair[0]] - w[pair[1]]).abs() <= resolution + 1e-12,
                "within-cluster gap {} vs {}",
                w[pair[0]],
                w[pair[1]]
            );
        }
    }
    // The dendrogram of the same matrix isolates both outliers once four
    // clusters are requested.
    let dendrogram = hclust(&distances, Linkage::Average).unwrap();
    let partition = cut(&dendrogram, 4).unwrap();
    assert!(partition.contains(&vec!["asset_7".to_string()]));
    assert!(partition.contains(&vec!["asset_8".to_string()]));
    pass(
        "7",
        format!("weights {w:?}; outlier mass {outlier_mass:.3}; cluster floor held"),
    );
}

/// Criterion 8: backtest arithmetic against brute-force recomputation.
#[test]
fn criterion_8_backtest_arithmetic() {
    let tight: Vec<usize> = vec![150, 300, 450];
    let spread = vec![200usize, 400];
    let base = SimSpec { length: 700, seed: 9, ..SimSpec::default() };
    let outputs = simulate_cluster(&[], &[tight, spread], &base).unwrap();
    let panel = ReturnPanel::new(outputs.iter().map(|o| o.returns.clone()).collect()).unwrap();
    let dates = panel.timestamps().to_vec();
    let store = ThresholdStore::in_memory();

    let mut checked = Vec::new();
    for method in [AllocationMethod::Cpo, AllocationMethod::Mvo] {
        let config = BacktestConfig {
            method,
            train_start: dates[0],
            train_end: dates[499],
            test_start: dates[500],
            test_end: *dates.last().unwrap(),
            detector: DetectorConfig {
                level: DetectionLevel::Arl0(300),
                min_segment: 20,
                mc_reps: 1000,
                seed: 17,
                horizon: Some(600),
            },
            measure: DistanceMeasure::default(),
            bounds: cpo::optimizer::Bounds::uniform(2, 0.0, 1.0),
            risk_free: 0.0,
            resolution: 0.02,
        };
        let report = run_backtest(&panel, &config, &store).unwrap();

        // Brute-force recomputation from raw slices.
        let test = panel.slice_dates(config.test_start, config.test_end).unwrap();
        let mut cumulative = 1.0f64;
        let mut path = vec![1.0f64];
        let mut rets = Vec::new();
        for row in 0..test.len() {
            let mut r = 0.0;
            for (i, asset) in test.assets().iter().enumerate() {
                r += report.weights[i] * (asset.values[row].exp() - 1.0);
            }
            cumulative *= 1.0 + r;
            path.push(cumulative);
            rets.push(r);
        }
        assert!((report.cumulative_return - cumulative).abs() <= 1e-10);

        // Quadratic drawdown oracle, exact match.
        let mut dd_oracle = 0.0f64;
        for s in 0..path.len() {
            for t in s..path.len() {
                dd_oracle = dd_oracle.max((path[s] - path[t]) / path[s] * 100.0);
            }
        }
        assert_eq!(report.max_drawdown_pct.to_bits(), dd_oracle.to_bits());

        // Kurtosis recomputation.
        let n = rets.len() as f64;
        let mean = rets.iter().sum::<f64>() / n;
        let m2 = rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        let m4 = rets.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / n;
        let kurt_oracle = m4 / (m2 * m2) - 3.0;
        assert!((report.excess_kurtosis - kurt_oracle).abs() <= 1e-10);
        checked.push(format!(
            "{:?}: cum {:.6}, dd {:.3}%, kurt {:.3}",
            method, report.cumulative_return, report.max_drawdown_pct, report.excess_kurtosis
        ));
    }
    pass("8", checked.join("; "));
}

/// Criterion 9: the full file pipeline, run twice with one seed, produces
/// byte-identical artifacts.
#[test]
fn criterion_9_pipeline_determinism() {
    fn bin() -> Command {
        Command::new(env!("CARGO_BIN_EXE_cpo"))
    }
    fn run(args: &[&str]) {
        let out = bin().args(args).output().expect("binary runs");
        assert!(
            out.status.success(),
            "command {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    fn write_prices(path: &Path) {
        let mut rng = ChaCha12Rng::seed_from_u64(2718);
        let mut csv = String::from("date,AAA,BBB,CCC\n");
        let mut prices = [100.0f64, 50.0, 200.0];
        let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
        for i in 0..700usize {
            let date = start + chrono::Days::new(i as u64);
            for (a, p) in prices.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let shift = match a {
                    0 if (180..420).contains(&i) => 0.04,
                    1 if i >= 350 => 0.03,
                    2 if (250..500).contains(&i) => -0.03,
                    _ => 0.0,
                };
                *p *= (shift + 0.01 * z).exp();
            }
            csv.push_str(&format!("{date},{},{},{}\n", prices[0], prices[1], prices[2]));
        }
        std::fs::write(path, csv).unwrap();
    }

    let root = tempfile::tempdir().unwrap();
    let prices = root.path().join("prices.csv");
    write_prices(&prices);
    let spec = serde_json::json!({
        "length": 300,
        "break_times": [90, 200],
        "ar_coeff": 0.5,
        "jump_prob_direction": 0.5,
        "jump_shape": 2.0,
        "jump_scale": 0.06,
        "garch_omega": 1e-4,
        "garch_alpha": 0.05,
        "garch_beta": 0.6,
        "leverage_gamma": 0.05,
        "student_dof": 8.0,
        "seed": 3
    });
    let spec_path = root.path().join("sim_spec.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();

    let mut artifact_sets: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run_id in 0..2 {
        let out_dir: PathBuf = root.path().join(format!("run{run_id}"));
        let cache_dir = out_dir.join("cache");
        let out = out_dir.to_str().unwrap();
        let prices = prices.to_str().unwrap();
        let detect_flags = [
            "--arl0", "300", "--min-segment", "20", "--mc-reps", "1000", "--horizon", "500",
            "--seed", "11", "--cache-dir", cache_dir.to_str().unwrap(),
        ];

        let mut args: Vec<&str> =
            vec!["detect", "--prices", prices, "--out-dir", out];
        args.extend_from_slice(&detect_flags);
        run(&args);

        let breaks = out_dir.join("breaks.csv");
        run(&[
            "distmat", "--breaks", breaks.to_str().unwrap(), "--measure", "mj", "--p", "0.5",
            "--out-dir", out,
        ]);
        run(&[
            "optimize", "--prices", prices, "--breaks", breaks.to_str().unwrap(), "--method",
            "cpo", "--resolution", "0.01", "--out-dir", out,
        ]);
        run(&[
            "cluster", "--dist", out_dir.join("dist.csv").to_str().unwrap(), "--linkage",
            "average", "--k", "2", "--out-dir", out,
        ]);
        let mut args: Vec<&str> = vec![
            "backtest", "--prices", prices, "--train", "2012-01-01:2013-06-30", "--test",
            "2013-07-01:2013-11-30", "--method", "both", "--resolution", "0.02", "--out-dir", out,
        ];
        args.extend_from_slice(&detect_flags);
        run(&args);
        run(&["simulate", "--spec", spec_path.to_str().unwrap(), "--out-dir", out]);

        let mut artifacts: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
            .unwrap()
            .filter_map(|entry| {
                let entry = entry.unwrap();
                entry.file_type().unwrap().is_file().then(|| {
                    (
                        entry.file_name().to_string_lossy().into_owned(),
                        std::fs::read(entry.path()).unwrap(),
                    )
                })
            })
            .collect();
        artifacts.sort_by(|a, b| a.0.cmp(&b.0));
        artifact_sets.push(artifacts);
    }

    let names: Vec<&String> = artifact_sets[0].iter().map(|(n, _)| n).collect();
    assert!(names.len() >= 10, "expected a full artifact set, got {names:?}");
    assert_eq!(
        artifact_sets[0].iter().map(|(n, _)| n).collect::<Vec<_>>(),
        artifact_sets[1].iter().map(|(n, _)| n).collect::<Vec<_>>()
    );
    for ((name, bytes_a), (_, bytes_b)) in artifact_sets[0].iter().zip(&artifact_sets[1]) {
        assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
    }
    pass("9", format!("{} artifacts byte-identical across two runs", names.len()));
}
