//! Statistical checks against exact answers on finite state spaces:
//! convergence of `Σ β⁺` to one and of posterior-embedding expectations to
//! exact Bayes posteriors.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{compute_beta, lambda_schedule};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::points::Points;
use crate::posterior::{embed_pmf, exact_discrete_posterior, fit_threshold, DiscreteModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub seeds: u64,
    /// Number of equally spaced scalar y-states in the `Σβ⁺` check.
    pub sum_states: usize,
    pub sum_sizes: Vec<usize>,
    pub sum_bandwidth: f64,
    /// `λ_n = sum_lambda_scale · n^{-1/2}`.
    pub sum_lambda_scale: f64,
    pub sum_threshold: f64,
    /// Fixed `λ` of the over-smoothed negative control.
    pub negative_control_lambda: f64,
    pub posterior_sizes: Vec<usize>,
    pub posterior_bandwidth: f64,
    /// Scale of the `β` schedule in the posterior check.
    pub beta_lambda_scale: f64,
    /// Scale of the regressor schedule in the posterior check.
    pub regression_lambda_scale: f64,
    pub posterior_threshold: f64,
    /// Seed of the random prior and likelihood tables.
    pub model_seed: u64,
    pub deterministic_size: usize,
    pub deterministic_threshold: f64,
    pub workers: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            sum_states: 5,
            sum_sizes: vec![100, 2000],
            sum_bandwidth: 1.0,
            sum_lambda_scale: 1.0,
            sum_threshold: 0.1,
            negative_control_lambda: 0.5,
            posterior_sizes: vec![200, 1000, 5000],
            posterior_bandwidth: 1.0,
            beta_lambda_scale: 0.1,
            regression_lambda_scale: 0.1,
            posterior_threshold: 0.05,
            model_seed: 12345,
            deterministic_size: 2000,
            deterministic_threshold: 0.9,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub name: String,
    pub passed: bool,
    /// Median statistic at each sample size.
    pub medians: Vec<(usize, f64)>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub entries: Vec<OracleEntry>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn scalar_states(len: usize) -> Points {
    Points::from_scalars(&(0..len).map(|i| i as f64).collect::<Vec<_>>())
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `|Σ β⁺ − 1|` for one draw: `n` outputs sampled uniformly from the
/// states, a random prior embedded exactly.
pub fn sum_beta_deviation(
    states: usize,
    n: usize,
    bandwidth: f64,
    lambda: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_states = scalar_states(states);
    let prior = random_pmf(&mut rng, states);
    let sample: Vec<f64> = (0..n).map(|_| rng.random_range(0..states) as f64).collect();
    let y = Points::from_scalars(&sample);
    let kernel = Kernel::gaussian(bandwidth)?;
    let prior_embedding = embed_pmf(&prior, &y_states, kernel)?;
    let beta = compute_beta(
        &kernel.gram_self(&y)?,
        &kernel.gram(&y, prior_embedding.points())?,
        prior_embedding.weights(),
        lambda,
    )?;
    Ok((beta.positive_sum() - 1.0).abs())
}

fn par_seeds<T: Send>(
    config: &OracleConfig,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| (0..config.seeds).into_par_iter().map(f).collect())
}

fn sum_medians(config: &OracleConfig, lambda: impl Fn(usize) -> f64 + Sync) -> Result<Vec<(usize, f64)>> {
    config
        .sum_sizes
        .iter()
        .map(|&n| {
            let stats = par_seeds(config, |s| {
                sum_beta_deviation(config.sum_states, n, config.sum_bandwidth, lambda(n), s)
            })?;
            Ok((n, median(stats)))
        })
        .collect()
}

fn converging(medians: &[(usize, f64)], threshold: f64, strict: bool) -> bool {
    let ordered = medians.windows(2).all(|w| {
        if strict {
            w[1].1 < w[0].1
        } else {
            w[1].1 <= w[0].1
        }
    });
    ordered && medians.last().is_some_and(|m| m.1 < threshold)
}

/// Median `|Σβ⁺ − 1|` must decrease over the sizes and end below the
/// threshold.
pub fn sum_beta_check(config: &OracleConfig) -> Result<OracleEntry> {
    let medians = sum_medians(config, |n| lambda_schedule(n, config.sum_lambda_scale))?;
    Ok(OracleEntry {
        name: "sum-beta".into(),
        passed: converging(&medians, config.sum_threshold, true),
        detail: format!(
            "median |sum beta+ - 1| over {} seeds, lambda = {}/sqrt(n); threshold {}",
            config.seeds, config.sum_lambda_scale, config.sum_threshold
        ),
        medians,
    })
}

/// The same statistic with `λ` held fixed and large; passes when the check
/// correctly reports no convergence.
pub fn negative_control(config: &OracleConfig) -> Result<OracleEntry> {
    let medians = sum_medians(config, |_| config.negative_control_lambda)?;
    let converged = converging(&medians, config.sum_threshold, true);
    Ok(OracleEntry {
        name: "negative-control".into(),
        passed: !converged,
        detail: format!(
            "fixed lambda = {}: convergence {}",
            config.negative_control_lambda,
            if converged { "wrongly detected" } else { "not detected" }
        ),
        medians,
    })
}

/// A 4×3 model with random prior and likelihood tables.
pub fn random_discrete_model(seed: u64) -> Result<DiscreteModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = random_pmf(&mut rng, 3);
    let likelihood = (0..3).map(|_| random_pmf(&mut rng, 4)).collect();
    DiscreteModel::new(scalar_states(4), scalar_states(3), prior, likelihood)
}

/// Largest absolute error, over all x-states and y-indicators, between
/// the embedding posterior's indicator expectations and the exact posterior.
///
/// The joint sample draws `y` uniformly and `x ~ p(x | y)`; the prior is
/// embedded exactly.
pub fn posterior_error(
    model: &DiscreteModel,
    n: usize,
    bandwidth: f64,
    beta_scale: f64,
    regression_scale: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ny = model.y_states().len();
    let nx = model.x_states().len();
    let rows: Vec<WeightedIndex<f64>> = (0..ny)
        .map(|j| {
            WeightedIndex::new((0..nx).map(|i| model.likelihood(j, i)))
                .map_err(|e| Error::InvalidInput(format!("likelihood row {j}: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut y_idx = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let j = rng.random_range(0..ny);
        let i = rng.sample(&rows[j]);
        y_idx.push(j);
        xs.extend_from_slice(model.x_states().row(i));
        ys.extend_from_slice(model.y_states().row(j));
    }
    let x = Points::from_flat(model.x_states().dim(), xs)?;
    let y = Points::from_flat(model.y_states().dim(), ys)?;
    let kernel = Kernel::gaussian(bandwidth)?;
    let prior = embed_pmf(model.prior(), model.y_states(), kernel)?;
    let beta = compute_beta(
        &kernel.gram_self(&y)?,
        &kernel.gram(&y, prior.points())?,
        prior.weights(),
        lambda_schedule(n, beta_scale),
    )?;
    let regressor = fit_threshold(&x, &y, &beta, kernel, kernel, lambda_schedule(n, regression_scale))?;
    let mut worst = 0.0f64;
    for state in model.x_states().iter() {
        let exact = exact_discrete_posterior(model, state)?;
        let w = regressor.predict_weights(state)?;
        for (j, p) in exact.iter().enumerate() {
            let estimate: f64 = w.iter().zip(&y_idx).filter(|(_, &k)| k == j).map(|(v, _)| v).sum();
            worst = worst.max((estimate - p).abs());
        }
    }
    Ok(worst)
}

/// Median posterior error must not increase over the sizes and must end
/// below the threshold.
pub fn posterior_check(config: &OracleConfig) -> Result<OracleEntry> {
    let model = random_discrete_model(config.model_seed)?;
    let medians = config
        .posterior_sizes
        .iter()
        .map(|&n| {
            let errors = par_seeds(config, |s| {
                posterior_error(
                    &model,
                    n,
                    config.posterior_bandwidth,
                    config.beta_lambda_scale,
                    config.regression_lambda_scale,
                    s,
                )
            })?;
            Ok((n, median(errors)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleEntry {
        name: "discrete-posterior".into(),
        passed: converging(&medians, config.posterior_threshold, false),
        detail: format!(
            "median max |E[1{{y=j}}|x] - p(j|x)| over {} seeds; threshold {}",
            config.seeds, config.posterior_threshold
        ),
        medians,
    })
}

/// With `x = y` deterministically, the posterior at each x must put more
/// than the threshold on the matching state.
pub fn deterministic_check(config: &OracleConfig) -> Result<OracleEntry> {
    let identity = (0..3)
        .map(|j| (0..3).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.model_seed);
    let prior = random_pmf(&mut rng, 3);
    let model = DiscreteModel::new(scalar_states(3), scalar_states(3), prior, identity)?;
    let n = config.deterministic_size;
    let worst = posterior_error(
        &model,
        n,
        config.posterior_bandwidth,
        config.beta_lambda_scale,
        config.regression_lambda_scale,
        0,
    )?;
    // The exact posterior is an indicator, so the matching expectation is
    // at least 1 - worst.
    let matching = 1.0 - worst;
    Ok(OracleEntry {
        name: "deterministic-likelihood".into(),
        passed: matching > config.deterministic_threshold,
        medians: vec![(n, matching)],
        detail: format!(
            "smallest posterior mass on the true state; threshold {}",
            config.deterministic_threshold
        ),
    })
}

pub fn oracle_check(config: &OracleConfig) -> Result<OracleReport> {
    Ok(OracleReport {
        entries: vec![
            sum_beta_check(config)?,
            negative_control(config)?,
            posterior_check(config)?,
            deterministic_check(config)?,
        ],
    })
}
