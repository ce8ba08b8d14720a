//! The toy filtering benchmark: every selected algorithm on every seed,
//! squared error of the decoded `(cos θ, sin θ)` against the truth, averaged
//! over seeds.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, BandwidthMode, ExperimentConfig, SCHEMA_VERSION};
use super::toy::{generate_toy, supervision_table, ToyDynamicsConfig, ToyTrajectory};
use crate::baselines::{
    run_gaussian_filter, run_kf, toy_linear_spec, toy_state_space, GaussianBelief,
    GaussianFilterKind, ToyFilterNoise,
};
use crate::error::{Error, Result};
use crate::filtering::{step_header, step_record, FilterMode, KernelFilterModel, KnownDynamics};
use crate::kernels::{median_heuristic, Kernel};
use crate::points::Points;

/// Train and test trajectories of one seed, drawn from independent streams.
#[derive(Debug, Clone)]
pub struct SeedData {
    pub seed: u64,
    pub train: ToyTrajectory,
    pub test: ToyTrajectory,
}

pub fn seed_data(config: &ExperimentConfig, seed: u64) -> Result<SeedData> {
    let toy = |length, stream| ToyDynamicsConfig {
        step: config.toy.step,
        process_variance: config.toy.process_variance,
        observation_variance: config.toy.observation_variance,
        length,
        seed,
        stream,
        initial_angle: None,
    };
    Ok(SeedData {
        seed,
        train: generate_toy(&toy(config.train_size, 0))?,
        test: generate_toy(&toy(config.test_size, 1))?,
    })
}

pub fn build_model(config: &ExperimentConfig, train: &ToyTrajectory) -> Result<KernelFilterModel> {
    let (bx, by) = match config.bandwidth {
        BandwidthMode::Median => (
            median_heuristic(&train.observations)?,
            median_heuristic(&train.states)?,
        ),
        BandwidthMode::Fixed { x, y } => (x, y),
    };
    KernelFilterModel::fit(
        train.states.clone(),
        train.observations.clone(),
        Kernel::gaussian(bx)?,
        Kernel::gaussian(by)?,
        config.lambda_t,
        config.delta_t,
    )
}

/// Decoded states and timings of one algorithm on one test trajectory.
#[derive(Debug, Clone)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub decoded: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub beta_plus_sum: Vec<Option<f64>>,
    pub step_wall_us: Vec<u128>,
    pub wall_us: u128,
}

impl AlgorithmRun {
    pub fn squared_errors(&self, truth: &Points) -> Vec<f64> {
        self.decoded
            .iter()
            .zip(truth.iter())
            .map(|(d, t)| d.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(step_header(2))?;
        for (t, d) in self.decoded.iter().enumerate() {
            csv.write_record(step_record(
                t + 1,
                self.algorithm.name(),
                d,
                self.converged[t],
                self.beta_plus_sum[t],
                self.step_wall_us[t],
            ))?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn toy_noise(config: &ExperimentConfig) -> ToyFilterNoise {
    ToyFilterNoise {
        step: config.toy.step,
        process_variance: config.baselines.process_variance,
        observation_variance: config.toy.observation_variance,
        initial_variance: config.baselines.initial_variance,
    }
}

/// Runs one algorithm. Kernel algorithms need `model`; the Gaussian filters
/// start from the known first angle of the test trajectory.
pub fn run_algorithm(
    config: &ExperimentConfig,
    data: &SeedData,
    model: Option<&KernelFilterModel>,
    algorithm: Algorithm,
) -> Result<AlgorithmRun> {
    let obs = &data.test.observations;
    let theta1 = data.test.initial_angle();
    let started = Instant::now();
    if algorithm.is_kernel() {
        let model = model.ok_or(Error::InvalidInput("kernel algorithms need a model".into()))?;
        let run = match algorithm {
            Algorithm::Pkbr => model.run_filter(obs, &mut FilterMode::Pkbr)?,
            Algorithm::Kbr => model.run_filter(
                obs,
                &mut FilterMode::Kbr {
                    threshold: config.kbr_threshold_beta,
                },
            )?,
            _ => {
                let (inputs, states) = supervision_table(theta1, obs.len(), config.toy.step)?;
                let mut provider = KnownDynamics::new(inputs, states)?;
                model.run_filter(
                    obs,
                    &mut FilterMode::KRegBayes {
                        provider: &mut provider,
                        mu: config.mu_t,
                    },
                )?
            }
        };
        let wall_us = started.elapsed().as_micros();
        return Ok(AlgorithmRun {
            algorithm,
            decoded: run.decoded(),
            converged: run.steps.iter().map(|s| s.converged).collect(),
            beta_plus_sum: run.steps.iter().map(|s| s.beta_plus_sum).collect(),
            step_wall_us: run.steps.iter().map(|s| s.wall_us).collect(),
            wall_us,
        });
    }
    let noise = toy_noise(config);
    let beliefs: Vec<GaussianBelief> = match algorithm {
        Algorithm::Kf => {
            let spec = toy_linear_spec(noise, theta1, &data.train.states, &data.train.observations)?;
            run_kf(&spec, obs)?
        }
        Algorithm::Ekf => run_gaussian_filter(&toy_state_space(noise, theta1)?, GaussianFilterKind::Ekf, obs)?,
        _ => run_gaussian_filter(
            &toy_state_space(noise, theta1)?,
            GaussianFilterKind::Ukf(config.baselines.ukf()),
            obs,
        )?,
    };
    let wall_us = started.elapsed().as_micros();
    let n = beliefs.len();
    Ok(AlgorithmRun {
        algorithm,
        decoded: beliefs.into_iter().map(|b| b.mean).collect(),
        converged: vec![true; n],
        beta_plus_sum: vec![None; n],
        step_wall_us: vec![wall_us / n as u128; n],
        wall_us,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub step: Option<usize>,
    pub message: String,
}

fn failure(seed: u64, algorithm: Algorithm, e: &Error) -> FailureRecord {
    FailureRecord {
        seed,
        algorithm,
        step: match e {
            Error::Step { step, .. } => Some(*step),
            _ => None,
        },
        message: e.to_string(),
    }
}

/// All algorithm outcomes for one seed.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub data: SeedData,
    pub runs: BTreeMap<Algorithm, std::result::Result<AlgorithmRun, FailureRecord>>,
}

pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedResult> {
    let data = seed_data(config, seed)?;
    let algorithms = config.algorithm_list();
    let model = if algorithms.iter().any(|a| a.is_kernel()) {
        Some(build_model(config, &data.train))
    } else {
        None
    };
    let mut runs = BTreeMap::new();
    for alg in algorithms {
        let outcome = match (&model, alg.is_kernel()) {
            (Some(Err(e)), true) => Err(failure(seed, alg, e)),
            (m, _) => {
                let m = m.as_ref().and_then(|r| r.as_ref().ok());
                run_algorithm(config, &data, m, alg).map_err(|e| failure(seed, alg, &e))
            }
        };
        runs.insert(alg, outcome);
    }
    Ok(SeedResult { data, runs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMse {
    pub seed: u64,
    pub mse: f64,
}

/// Seed-averaged running MSE of every algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMseReport {
    pub schema_version: u32,
    pub steps: usize,
    pub algorithms: Vec<Algorithm>,
    /// Mean over successful seeds of the squared error at each step.
    pub per_step_mse: BTreeMap<Algorithm, Vec<f64>>,
    /// Mean over steps of `per_step_mse`; absent when every seed failed.
    pub total_mse: BTreeMap<Algorithm, Option<f64>>,
    /// Filter wall time summed over seeds, model fitting excluded.
    pub wall_ms: BTreeMap<Algorithm, f64>,
    pub failures: BTreeMap<Algorithm, usize>,
    pub per_seed_mse: BTreeMap<Algorithm, Vec<SeedMse>>,
    pub failure_log: Vec<FailureRecord>,
}

impl RunningMseReport {
    pub fn total(&self, algorithm: Algorithm) -> Option<f64> {
        self.total_mse.get(&algorithm).copied().flatten()
    }

    pub fn wall(&self, algorithm: Algorithm) -> Option<f64> {
        self.wall_ms.get(&algorithm).copied()
    }

    /// `Σ_{s≤t} mse_s / t` for each step `t`.
    pub fn running_mse(&self, algorithm: Algorithm) -> Vec<f64> {
        let mut acc = 0.0;
        self.per_step_mse
            .get(&algorithm)
            .map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(t, m)| {
                        acc += m;
                        acc / (t + 1) as f64
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn summary(&self) -> serde_json::Value {
        let algorithms: serde_json::Map<String, serde_json::Value> = self
            .algorithms
            .iter()
            .map(|a| {
                (
                    a.name().to_string(),
                    serde_json::json!({
                        "total_mse": self.total(*a),
                        "wall_ms": self.wall(*a),
                        "failures": self.failures.get(a).copied().unwrap_or(0),
                    }),
                )
            })
            .collect();
        serde_json::json!({ "schema_version": SCHEMA_VERSION, "algorithms": algorithms })
    }
}

/// Aggregates seed results into the report.
pub fn aggregate(config: &ExperimentConfig, results: &[SeedResult]) -> RunningMseReport {
    let algorithms = config.algorithm_list();
    let steps = config.test_size;
    let mut report = RunningMseReport {
        schema_version: SCHEMA_VERSION,
        steps,
        algorithms: algorithms.clone(),
        per_step_mse: BTreeMap::new(),
        total_mse: BTreeMap::new(),
        wall_ms: BTreeMap::new(),
        failures: BTreeMap::new(),
        per_seed_mse: BTreeMap::new(),
        failure_log: Vec::new(),
    };
    for alg in algorithms {
        let mut sum = vec![0.0; steps];
        let mut used = 0usize;
        let mut wall_us = 0u128;
        let mut per_seed = Vec::new();
        for r in results {
            match &r.runs[&alg] {
                Ok(run) => {
                    let errors = run.squared_errors(&r.data.test.states);
                    for (s, e) in sum.iter_mut().zip(&errors) {
                        *s += e;
                    }
                    per_seed.push(SeedMse {
                        seed: r.data.seed,
                        mse: errors.iter().sum::<f64>() / errors.len() as f64,
                    });
                    wall_us += run.wall_us;
                    used += 1;
                }
                Err(f) => report.failure_log.push(f.clone()),
            }
        }
        let per_step: Vec<f64> = if used > 0 {
            sum.iter().map(|s| s / used as f64).collect()
        } else {
            Vec::new()
        };
        let total = (used > 0).then(|| per_step.iter().sum::<f64>() / steps as f64);
        report.per_step_mse.insert(alg, per_step);
        report.total_mse.insert(alg, total);
        report.wall_ms.insert(alg, wall_us as f64 / 1000.0);
        report.failures.insert(alg, results.len() - used);
        report.per_seed_mse.insert(alg, per_seed);
    }
    report
}

/// Runs every seed (on `workers` threads) and writes artifacts when an
/// output directory is configured.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<RunningMseReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let results: Vec<SeedResult> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(config, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let report = aggregate(config, &results);
    if let Some(dir) = &config.output {
        write_artifacts(dir, config, &results, &report)?;
    }
    Ok(report)
}

pub fn seed_csv_name(seed: u64, algorithm: Algorithm) -> String {
    format!("seed{seed}_{}.csv", algorithm.name())
}

pub fn truth_csv_name(seed: u64) -> String {
    format!("seed{seed}_truth.csv")
}

pub fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    results: &[SeedResult],
    report: &RunningMseReport,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in results {
        let mut truth = csv::Writer::from_path(dir.join(truth_csv_name(r.data.seed)))?;
        truth.write_record(["step", "theta", "y0", "y1"])?;
        for (t, (theta, s)) in r.data.test.angles.iter().zip(r.data.test.states.iter()).enumerate() {
            truth.write_record([
                (t + 1).to_string(),
                format!("{theta:e}"),
                format!("{:e}", s[0]),
                format!("{:e}", s[1]),
            ])?;
        }
        truth.flush()?;
        for run in r.runs.values().flatten() {
            let file = File::create(dir.join(seed_csv_name(r.data.seed, run.algorithm)))?;
            run.write_csv(BufWriter::new(file))?;
        }
    }
    let mut mse = csv::Writer::from_path(dir.join("mse.csv"))?;
    let mut header = vec!["step".to_string()];
    for a in &report.algorithms {
        header.push(format!("{a}_mse"));
        header.push(format!("{a}_running_mse"));
    }
    mse.write_record(&header)?;
    let running: Vec<Vec<f64>> = report.algorithms.iter().map(|a| report.running_mse(*a)).collect();
    for t in 0..report.steps {
        let mut row = vec![(t + 1).to_string()];
        for (i, a) in report.algorithms.iter().enumerate() {
            let cell = |v: Option<&f64>| v.map_or_else(String::new, |x| format!("{x:e}"));
            row.push(cell(report.per_step_mse[a].get(t)));
            row.push(cell(running[i].get(t)));
        }
        mse.write_record(&row)?;
    }
    mse.flush()?;
    let summary = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(summary), &report.summary())?;
    let echo = File::create(dir.join("config.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(echo), config)?;
    Ok(())
}

/// Re-derives each algorithm's mean total MSE from the per-seed CSVs in
/// `dir`, using only seeds whose run file exists.
pub fn mse_from_artifacts(dir: &Path, config: &ExperimentConfig) -> Result<BTreeMap<Algorithm, f64>> {
    let mut out = BTreeMap::new();
    for alg in config.algorithm_list() {
        let mut totals = Vec::new();
        for &seed in &config.seeds {
            let path = dir.join(seed_csv_name(seed, alg));
            if !path.exists() {
                continue;
            }
            let truth = read_columns(&dir.join(truth_csv_name(seed)), &["y0", "y1"])?;
            let decoded = read_columns(&path, &["y0", "y1"])?;
            let sq: f64 = truth
                .iter()
                .zip(&decoded)
                .map(|(t, d)| (t[0] - d[0]).powi(2) + (t[1] - d[1]).powi(2))
                .sum();
            totals.push(sq / truth.len() as f64);
        }
        if !totals.is_empty() {
            out.insert(alg, totals.iter().sum::<f64>() / totals.len() as f64);
        }
    }
    Ok(out)
}

fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::InvalidInput(format!("column {n} missing in {}", path.display())))
        })
        .collect::<Result<_>>()?;
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            idx.iter()
                .map(|&i| {
                    rec[i]
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithms: Vec<Algorithm>, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            train_size: 100,
            test_size: 20,
            algorithms,
            seeds,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_algorithm_report_shape() {
        let report = run_benchmark(&small(vec![Algorithm::Pkbr], vec![0])).unwrap();
        assert_eq!(report.per_step_mse[&Algorithm::Pkbr].len(), 20);
        assert_eq!(report.wall_ms.len(), 1);
        assert_eq!(report.failures[&Algorithm::Pkbr], 0);
        assert!(report.per_step_mse[&Algorithm::Pkbr].iter().all(|v| *v >= 0.0));
        let running = report.running_mse(Algorithm::Pkbr);
        assert!((running[19] - report.total(Algorithm::Pkbr).unwrap()).abs() < 1e-12);
    }

    fn strip_wall_time(text: &str) -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn artifacts_are_deterministic_and_self_consistent() {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut reports = Vec::new();
        for d in &dirs {
            let config = ExperimentConfig {
                output: Some(d.path().to_path_buf()),
                workers: 2,
                ..small(Algorithm::ALL.to_vec(), vec![1, 2])
            };
            let report = run_benchmark(&config).unwrap();
            let recomputed = mse_from_artifacts(d.path(), &config).unwrap();
            for (alg, v) in &recomputed {
                let total = report.total(*alg).unwrap();
                assert!((v - total).abs() <= 1e-12 * total.max(1.0), "{alg}: {v} vs {total}");
            }
            assert_eq!(recomputed.len(), 6);
            reports.push(report);
        }
        assert_eq!(reports[0].per_step_mse, reports[1].per_step_mse);
        for seed in [1, 2] {
            for alg in Algorithm::ALL {
                let name = seed_csv_name(seed, alg);
                let a = std::fs::read_to_string(dirs[0].path().join(&name)).unwrap();
                let b = std::fs::read_to_string(dirs[1].path().join(&name)).unwrap();
                assert_eq!(strip_wall_time(&a), strip_wall_time(&b), "{name}");
            }
        }
        for name in ["mse.csv", "summary.json", "config.json", "seed1_truth.csv"] {
            assert!(dirs[0].path().join(name).exists());
        }
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dirs[0].path().join("summary.json")).unwrap(),
        )
        .unwrap();
        assert!(summary["algorithms"]["ukf"]["total_mse"].is_number());
        let mse = std::fs::read_to_string(dirs[0].path().join("mse.csv")).unwrap();
        assert_eq!(mse.lines().count(), 21);
        assert!(mse.starts_with("step,kbr_mse,kbr_running_mse,pkbr_mse"));
    }

    #[test]
    fn failed_runs_are_counted_and_excluded() {
        let config = small(vec![Algorithm::Pkbr], vec![5, 6]);
        let mut results: Vec<SeedResult> = config
            .seeds
            .iter()
            .map(|&s| run_seed(&config, s).unwrap())
            .collect();
        let good = aggregate(&config, &results[..1]);
        results[1].runs.insert(
            Algorithm::Pkbr,
            Err(failure(6, Algorithm::Pkbr, &Error::DegenerateBelief.at_step(4))),
        );
        let report = aggregate(&config, &results);
        assert_eq!(report.failures[&Algorithm::Pkbr], 1);
        assert_eq!(report.failure_log[0].step, Some(4));
        assert_eq!(report.per_step_mse, good.per_step_mse);
    }

    #[test]
    fn baselines_start_near_known_angle() {
        let config = small(vec![Algorithm::Kf, Algorithm::Ekf, Algorithm::Ukf], vec![3]);
        let r = run_seed(&config, 3).unwrap();
        for run in r.runs.values() {
            let run = run.as_ref().unwrap();
            let first = &run.decoded[0];
            let truth = r.data.test.states.row(0);
            assert!((first[0] - truth[0]).hypot(first[1] - truth[1]) < 0.1);
        }
    }
}
