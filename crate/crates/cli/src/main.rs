use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use kbayes::embedding::{compute_beta, Embedding};
use kbayes::experiments::{
    generate_toy, oracle_check, run_benchmark, ExperimentConfig, OracleConfig, ToyDynamicsConfig,
};
use kbayes::filtering::{best_support_point, decode_objective, decode_traced, weighted_mean};
use kbayes::kernels::{median_heuristic, Kernel};
use kbayes::points::Points;
use kbayes::posterior::{fit_threshold, RegressorInfo};

#[derive(Parser)]
#[command(name = "kbayes", version, about = "Kernel Bayesian filtering benchmark and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a toy trajectory as CSV.
    Generate(GenerateArgs),
    /// Run a benchmark described by a JSON config.
    Benchmark(BenchmarkArgs),
    /// Run the discrete-posterior and Σβ⁺ convergence checks.
    OracleCheck(OracleArgs),
    /// Decode a single belief and report the iteration.
    DecodeDemo(DecodeArgs),
    /// Fit a regressor on toy training data and print its metadata.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long, default_value_t = 0.4)]
    step: f64,
    #[arg(long, default_value_t = 0.04)]
    process_variance: f64,
    #[arg(long, default_value_t = 0.04)]
    observation_variance: f64,
    /// Starting angle; uniform on [0, 2π) when omitted.
    #[arg(long)]
    initial_angle: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// JSON experiment config.
    #[arg(long, short)]
    config: PathBuf,
    /// Artifact directory, overriding the config.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// JSON oracle config; defaults are used when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Belief as an embedding JSON document. A random belief is used when
    /// omitted.
    #[arg(long, short)]
    belief: Option<PathBuf>,
    /// Support size of the random belief.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, default_value_t = 0.5)]
    bandwidth: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting point, comma separated; the weighted mean when omitted.
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<f64>>,
    /// Include every iterate in the output.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct DiagnosticsArgs {
    #[arg(long, default_value_t = 500)]
    train_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    lambda: f64,
    #[arg(long, default_value_t = 5e-6)]
    delta: f64,
}

#[derive(Serialize)]
struct DecodeReport {
    belief_size: usize,
    total_weight: f64,
    init: Vec<f64>,
    point: Vec<f64>,
    converged: bool,
    iterations: usize,
    objective_init: f64,
    objective_final: f64,
    best_support_point: Vec<f64>,
    objective_best_support: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct BetaSummary {
    len: usize,
    active: usize,
    positive_sum: f64,
    negative_mass: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    regressor: RegressorInfo,
    beta: BetaSummary,
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config = ToyDynamicsConfig {
        step: args.step,
        process_variance: args.process_variance,
        observation_variance: args.observation_variance,
        length: args.length,
        seed: args.seed,
        stream: args.stream,
        initial_angle: args.initial_angle,
    };
    let traj = generate_toy(&config)?;
    let sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(["step", "theta", "x0", "x1", "y0", "y1"])?;
    for (t, theta) in traj.angles.iter().enumerate() {
        let x = traj.observations.row(t);
        let y = traj.states.row(t);
        out.write_record([
            (t + 1).to_string(),
            format!("{theta:e}"),
            format!("{:e}", x[0]),
            format!("{:e}", x[1]),
            format!("{:e}", y[0]),
            format!("{:e}", y[1]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(dir) = args.output {
        config.output = Some(dir);
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let report = run_benchmark(&config)?;
    println!("{}", serde_json::to_string_pretty(&report.summary())?);
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<OracleConfig>(&text).context("parsing oracle config")?
        }
        None => OracleConfig::default(),
    };
    if let Some(s) = args.seeds {
        config.seeds = s;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let report = oracle_check(&config)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed())
}

fn random_belief(args: &DecodeArgs) -> Result<Embedding> {
    if args.points == 0 {
        bail!("--points must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let coords: Vec<f64> = (0..2 * args.points).map(|_| rng.random_range(-1.0..1.0)).collect();
    let weights: Vec<f64> = (0..args.points).map(|_| rng.random_range(0.1..1.0)).collect();
    Ok(Embedding::new(Points::from_flat(2, coords)?, weights, Kernel::gaussian(args.bandwidth)?)?)
}

fn decode_demo(args: DecodeArgs) -> Result<()> {
    let belief = match &args.belief {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<Embedding>(&text).context("parsing belief")?
        }
        None => random_belief(&args)?,
    };
    let init = args.init.clone().unwrap_or_else(|| weighted_mean(&belief));
    if init.len() != belief.points().dim() {
        bail!("--init has {} coordinates, belief has {}", init.len(), belief.points().dim());
    }
    let mut trace = Vec::new();
    let decoded = decode_traced(&belief, &init, |y| trace.push(y.to_vec()))?;
    let best = best_support_point(&belief)?;
    let report = DecodeReport {
        belief_size: belief.len(),
        total_weight: belief.total_weight(),
        objective_init: decode_objective(&belief, &init)?,
        objective_final: decode_objective(&belief, &decoded.point)?,
        objective_best_support: decode_objective(&belief, &best)?,
        best_support_point: best,
        init,
        point: decoded.point,
        converged: decoded.converged,
        iterations: decoded.iterations,
        trace: args.trace.then_some(trace),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn diagnostics(args: DiagnosticsArgs) -> Result<()> {
    let traj = generate_toy(&ToyDynamicsConfig {
        length: args.train_size + 1,
        seed: args.seed,
        ..Default::default()
    })?;
    let n = args.train_size;
    let states = traj.states.slice(0, n);
    let next = traj.states.slice(1, n + 1);
    let observations = traj.observations.slice(0, n);
    let ky = Kernel::gaussian(median_heuristic(&states)?)?;
    let kx = Kernel::gaussian(median_heuristic(&observations)?)?;
    // Prior: the one-step-ahead empirical distribution of the training states.
    let uniform = vec![1.0 / n as f64; n];
    let beta = compute_beta(&ky.gram_self(&states)?, &ky.gram(&states, &next)?, &uniform, args.lambda)?;
    let regressor = fit_threshold(&observations, &states, &beta, kx, ky, args.delta)?;
    let report = Diagnostics {
        regressor: regressor.info(),
        beta: BetaSummary {
            len: beta.len(),
            active: beta.active_indices().len(),
            positive_sum: beta.positive_sum(),
            negative_mass: beta.negative_mass(),
        },
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Benchmark(a) => benchmark(a).map(|_| true),
        Command::OracleCheck(a) => oracle(a),
        Command::DecodeDemo(a) => decode_demo(a).map(|_| true),
        Command::Diagnostics(a) => diagnostics(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("oracle check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
