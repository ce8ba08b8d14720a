//! The rotating-angle toy dynamics.
//!
//! `θ_{t+1} = θ_t + step + ξ_t (mod 2π)` and
//! `x_t = (1 + sin 8θ_t)(cos θ_t, sin θ_t) + ζ_t`, with Gaussian `ξ`, `ζ`.
//! The state representation used everywhere else is `(cos θ, sin θ)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::Points;

pub const DEFAULT_STEP: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyDynamicsConfig {
    pub step: f64,
    pub process_variance: f64,
    pub observation_variance: f64,
    pub length: usize,
    pub seed: u64,
    /// Independent random stream under the same seed, so train and test
    /// trajectories can share a seed without sharing draws.
    pub stream: u64,
    /// `θ₁`; drawn uniformly from `[0, 2π)` when absent.
    pub initial_angle: Option<f64>,
}

impl Default for ToyDynamicsConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            process_variance: 0.04,
            observation_variance: 0.04,
            length: 1000,
            seed: 0,
            stream: 0,
            initial_angle: None,
        }
    }
}

impl ToyDynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.process_variance >= 0.0) || !(self.observation_variance >= 0.0) {
            return Err(Error::InvalidInput("noise variances must be nonnegative".into()));
        }
        if !self.step.is_finite() {
            return Err(Error::InvalidInput("step must be finite".into()));
        }
        if self.length == 0 {
            return Err(Error::InvalidInput("trajectory length must be at least 1".into()));
        }
        if let Some(a) = self.initial_angle {
            if !a.is_finite() {
                return Err(Error::InvalidInput("initial angle must be finite".into()));
            }
        }
        Ok(())
    }
}

/// A generated trajectory. Row `t` of each field belongs to time `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyTrajectory {
    pub angles: Vec<f64>,
    pub observations: Points,
    /// `(cos θ_t, sin θ_t)`.
    pub states: Points,
}

impl ToyTrajectory {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn initial_angle(&self) -> f64 {
        self.angles[0]
    }
}

pub fn state_of(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// The noiseless observation of angle `theta`.
pub fn observe(theta: f64) -> [f64; 2] {
    let r = 1.0 + (8.0 * theta).sin();
    [r * theta.cos(), r * theta.sin()]
}

pub fn generate_toy(config: &ToyDynamicsConfig) -> Result<ToyTrajectory> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    let process_sd = config.process_variance.sqrt();
    let obs_sd = config.observation_variance.sqrt();
    let mut theta = match config.initial_angle {
        Some(a) => a.rem_euclid(TAU),
        None => rng.random_range(0.0..TAU),
    };
    let n = config.length;
    let mut angles = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(2 * n);
    let mut states = Vec::with_capacity(2 * n);
    for t in 0..n {
        if t > 0 {
            let xi: f64 = rng.sample(StandardNormal);
            theta = (theta + config.step + process_sd * xi).rem_euclid(TAU);
        }
        let clean = observe(theta);
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        angles.push(theta);
        obs.extend([clean[0] + obs_sd * z0, clean[1] + obs_sd * z1]);
        states.extend(state_of(theta));
    }
    Ok(ToyTrajectory {
        angles,
        observations: Points::from_flat(2, obs)?,
        states: Points::from_flat(2, states)?,
    })
}

/// A supervision point from the noiseless rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySupervision {
    pub angle: f64,
    pub state: [f64; 2],
    pub observation: [f64; 2],
}

/// `θ̃ = θ₁ + step · t (mod 2π)`, the supervision for step `t + 1`.
pub fn toy_supervision_with_step(theta1: f64, t: usize, step: f64) -> ToySupervision {
    let angle = (theta1 + step * t as f64).rem_euclid(TAU);
    ToySupervision {
        angle,
        state: state_of(angle),
        observation: observe(angle),
    }
}

pub fn toy_supervision(theta1: f64, t: usize) -> ToySupervision {
    toy_supervision_with_step(theta1, t, DEFAULT_STEP)
}

/// Supervision pairs for steps `1..=len`, in the layout expected by
/// [`crate::filtering::KnownDynamics`].
pub fn supervision_table(theta1: f64, len: usize, step: f64) -> Result<(Points, Points)> {
    let mut inputs = Vec::with_capacity(2 * len);
    let mut states = Vec::with_capacity(2 * len);
    for t in 0..len {
        let s = toy_supervision_with_step(theta1, t, step);
        inputs.extend(s.observation);
        states.extend(s.state);
    }
    Ok((Points::from_flat(2, inputs)?, Points::from_flat(2, states)?))
}

/// Smallest absolute difference between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
