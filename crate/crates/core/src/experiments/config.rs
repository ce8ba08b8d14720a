//! Benchmark configuration, read from JSON with unknown fields rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::UkfParams;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kbr,
    Pkbr,
    Kregbayes,
    Kf,
    Ekf,
    Ukf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Kbr,
        Algorithm::Pkbr,
        Algorithm::Kregbayes,
        Algorithm::Kf,
        Algorithm::Ekf,
        Algorithm::Ukf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Kbr => "kbr",
            Algorithm::Pkbr => "pkbr",
            Algorithm::Kregbayes => "kregbayes",
            Algorithm::Kf => "kf",
            Algorithm::Ekf => "ekf",
            Algorithm::Ukf => "ukf",
        }
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, Algorithm::Kbr | Algorithm::Pkbr | Algorithm::Kregbayes)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the Gaussian bandwidths of the filter model are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum BandwidthMode {
    /// Median heuristic on training observations (for `k_X`) and training
    /// states (for `k_Y`).
    Median,
    Fixed { x: f64, y: f64 },
}

/// Noise settings of the toy dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyNoise {
    pub step: f64,
    pub process_variance: f64,
    pub observation_variance: f64,
}

impl Default for ToyNoise {
    fn default() -> Self {
        Self {
            step: 0.4,
            process_variance: 0.04,
            observation_variance: 0.04,
        }
    }
}

/// Gaussian-filter settings on the `(cos θ, sin θ)` representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSettings {
    pub process_variance: f64,
    pub initial_variance: f64,
    pub ukf_alpha: f64,
    pub ukf_beta: f64,
    pub ukf_kappa: f64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        let ukf = UkfParams::default();
        Self {
            process_variance: 0.02,
            initial_variance: 1e-4,
            ukf_alpha: ukf.alpha,
            ukf_beta: ukf.beta,
            ukf_kappa: ukf.kappa,
        }
    }
}

impl BaselineSettings {
    pub fn ukf(&self) -> UkfParams {
        UkfParams {
            alpha: self.ukf_alpha,
            beta: self.ukf_beta,
            kappa: self.ukf_kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Training trajectory length; the filter model sees `train_size - 1`
    /// transitions.
    pub train_size: usize,
    pub test_size: usize,
    pub algorithms: Vec<Algorithm>,
    pub lambda_t: f64,
    pub delta_t: f64,
    pub mu_t: f64,
    pub bandwidth: BandwidthMode,
    /// Feed `β⁺` rather than the signed `β` into the KBR update.
    pub kbr_threshold_beta: bool,
    pub toy: ToyNoise,
    pub baselines: BaselineSettings,
    pub seeds: Vec<u64>,
    /// Directory for CSV and JSON artifacts; nothing is written when absent.
    pub output: Option<PathBuf>,
    /// Seeds processed concurrently. Timing comparisons need 1.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            train_size: 1000,
            test_size: 200,
            algorithms: Algorithm::ALL.to_vec(),
            lambda_t: 1e-6,
            delta_t: 5e-7,
            mu_t: 1e-5,
            bandwidth: BandwidthMode::Median,
            kbr_threshold_beta: false,
            toy: ToyNoise::default(),
            baselines: BaselineSettings::default(),
            seeds: (0..10).collect(),
            output: None,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    /// Regularization frozen after validation runs on seeds disjoint from
    /// the defaults: `λ_T = 1e-7`, `δ_T = 5e-6`, `μ_T = 1e-5`.
    pub fn calibrated() -> Self {
        Self {
            lambda_t: 1e-7,
            delta_t: 5e-6,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.train_size < 2 || self.test_size < 1 {
            return Err(Error::InvalidInput(
                "train_size must be at least 2 and test_size at least 1".into(),
            ));
        }
        for (name, v) in [
            ("lambda_t", self.lambda_t),
            ("delta_t", self.delta_t),
            ("mu_t", self.mu_t),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if let BandwidthMode::Fixed { x, y } = self.bandwidth {
            if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
                return Err(Error::InvalidInput("fixed bandwidths must be positive".into()));
            }
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidInput("no algorithms selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("no seeds given".into()));
        }
        if !(self.toy.process_variance >= 0.0 && self.toy.observation_variance >= 0.0) {
            return Err(Error::InvalidInput("toy noise variances must be nonnegative".into()));
        }
        let b = &self.baselines;
        if !(b.process_variance >= 0.0 && b.initial_variance > 0.0 && b.ukf_alpha > 0.0) {
            return Err(Error::InvalidInput("invalid baseline settings".into()));
        }
        Ok(())
    }

    /// Selected algorithms in canonical order, without repeats.
    pub fn algorithm_list(&self) -> Vec<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .filter(|a| self.algorithms.contains(a))
            .collect()
    }
}
