//! Recursive kernel filtering over a training trajectory.
//!
//! Beliefs are embeddings `Σ α_i ψ(y_i)` over the training states
//! `y_1..y_T`, optionally plus one supervision state `α̃ ψ(ỹ)`. Each step
//! predicts prior-to-joint weights `β` through the empirical transition
//! operator and then updates on the new observation with one of three rules:
//! thresholded regression (pKBR), the same regression augmented with a
//! supervision row (kRegBayes), or squared-regularization KBR.

use std::io::Write;
use std::time::Instant;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::embedding::{check_lambda, BetaWeights, Embedding};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{mat_vec, SpdSolver};
use crate::points::{squared_distance, Points};
use crate::posterior::kbr_squared_weights;

/// Step-size tolerance of the mean-shift preimage iteration.
pub const DECODE_TOLERANCE: f64 = 1e-8;
pub const DECODE_MAX_ITERATIONS: usize = 200;
/// Below this the mean-shift denominator is treated as degenerate.
pub const DECODE_MIN_DENOMINATOR: f64 = 1e-12;

/// Gram caches and factorizations learned from one training trajectory.
#[derive(Debug)]
pub struct KernelFilterModel {
    states: Points,
    observations: Points,
    kernel_x: Kernel,
    kernel_y: Kernel,
    lambda: f64,
    delta: f64,
    g_y: Mat<f64>,
    g_y_next: Mat<f64>,
    k_x: Mat<f64>,
    transition: SpdSolver,
    initial: SpdSolver,
}

impl KernelFilterModel {
    /// `states` and `observations` hold `y_1..y_{T+1}` and `x_1..x_{T+1}`.
    ///
    /// `lambda` regularizes the transition and initial-belief systems
    /// (`+ Tλ I`); `delta` is the Tikhonov constant of the update step.
    pub fn fit(
        states: Points,
        observations: Points,
        kernel_x: Kernel,
        kernel_y: Kernel,
        lambda: f64,
        delta: f64,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        check_lambda(delta)?;
        if states.len() != observations.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: observations.len(),
            });
        }
        if states.len() < 2 {
            return Err(Error::InvalidInput(
                "a filter model needs at least two training steps".into(),
            ));
        }
        let t = states.len() - 1;
        let current = states.slice(0, t);
        let next = states.slice(1, t + 1);
        let obs = observations.slice(0, t);

        let g_y = kernel_y.gram_self(&current)?.into_mat();
        let g_y_next = kernel_y.gram(&current, &next)?.into_mat();
        let k_x = kernel_x.gram_self(&obs)?.into_mat();
        let shift = t as f64 * lambda;
        let transition = SpdSolver::factor(shifted(&g_y, shift))?;
        let initial = SpdSolver::factor(shifted(&k_x, shift))?;
        Ok(Self {
            states,
            observations,
            kernel_x,
            kernel_y,
            lambda,
            delta,
            g_y,
            g_y_next,
            k_x,
            transition,
            initial,
        })
    }

    /// Number of transitions `T`.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y_1..y_T`, the points every belief is expressed over.
    pub fn train_states(&self) -> Points {
        self.states.slice(0, self.len())
    }

    /// `x_1..x_T`.
    pub fn train_observations(&self) -> Points {
        self.observations.slice(0, self.len())
    }

    pub fn kernel_x(&self) -> Kernel {
        self.kernel_x
    }

    pub fn kernel_y(&self) -> Kernel {
        self.kernel_y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(G_Y)_{ij} = k_Y(y_i, y_j)`.
    pub fn g_y(&self) -> &Mat<f64> {
        &self.g_y
    }

    /// `(G_{YY₊})_{ij} = k_Y(y_i, y_{j+1})`.
    pub fn g_y_next(&self) -> &Mat<f64> {
        &self.g_y_next
    }

    /// `(K_X)_{ij} = k_X(x_i, x_j)`.
    pub fn k_x(&self) -> &Mat<f64> {
        &self.k_x
    }

    fn obs_column(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = self.len();
        if x.len() != self.observations.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.observations.dim(),
                found: x.len(),
            });
        }
        Ok((0..t)
            .map(|i| self.kernel_x.value(self.observations.row(i), x))
            .collect())
    }

    /// `α⁽¹⁾ = (K_X + Tλ I)⁻¹ K_{:x₁}`, no supervision mass.
    pub fn init_state(&self, x1: &[f64]) -> Result<FilterState> {
        let col = self.obs_column(x1)?;
        Ok(FilterState {
            alpha: self.initial.solve(&col)?,
            supervision: None,
        })
    }

    /// The initial belief with a supervision row. This is
    /// [`Self::update_regularized`] with uniform weights `β_i = 1/T` and
    /// `λ_T` in place of `δ_T`: training rows carry `Tλ_T` as in
    /// [`Self::init_state`] and the supervision row carries `λ_T / μ_T`.
    pub fn init_state_regularized(
        &self,
        x1: &[f64],
        supervision: &Supervision,
        mu: f64,
    ) -> Result<FilterState> {
        let t = self.len();
        let beta = BetaWeights::from_raw(vec![1.0 / t as f64; t]);
        self.augmented_update(&beta, x1, supervision, mu, self.lambda)
    }

    /// `β = (G_Y + TλI)⁻¹ G_{YY₊} (G_Y + TλI)⁻¹ (G_Y α + G_{YỸ} α̃)`.
    pub fn predict_weights(&self, state: &FilterState) -> Result<BetaWeights> {
        let t = self.len();
        if state.alpha.len() != t {
            return Err(Error::DimensionMismatch {
                expected: t,
                found: state.alpha.len(),
            });
        }
        let mut rhs = mat_vec(self.g_y.as_ref(), &state.alpha);
        if let Some(mass) = &state.supervision {
            for (i, r) in rhs.iter_mut().enumerate() {
                *r += mass.weight * self.kernel_y.value(self.states.row(i), &mass.state);
            }
        }
        let prior = self.transition.solve(&rhs)?;
        let pushed = mat_vec(self.g_y_next.as_ref(), &prior);
        let raw = self.transition.solve(&pushed)?;
        Ok(BetaWeights::from_raw(raw))
    }

    /// `α⁽ᵗ⁺¹⁾ = (K_X + δ_T Λ⁺)⁻¹ K_{:x}` over the active rows of `β⁺`,
    /// zero elsewhere.
    pub fn update(&self, beta: &BetaWeights, x_next: &[f64]) -> Result<FilterState> {
        let active = self.active_rows(beta)?;
        let col = self.obs_column(x_next)?;
        let m = active.len();
        let mut system = Mat::from_fn(m, m, |a, b| self.k_x[(active[a], active[b])]);
        for (a, &i) in active.iter().enumerate() {
            system[(a, a)] += self.delta / beta.thresholded()[i];
        }
        let rhs: Vec<f64> = active.iter().map(|&i| col[i]).collect();
        let gamma = SpdSolver::factor(system)?.solve(&rhs)?;
        Ok(FilterState {
            alpha: scatter(self.len(), &active, &gamma),
            supervision: None,
        })
    }

    /// The supervision-augmented update. The system gains one row for
    /// `(x̃, ỹ)` with diagonal `δ_T / μ_T`; its solution weight becomes the
    /// supervision mass `α̃`.
    pub fn update_regularized(
        &self,
        beta: &BetaWeights,
        x_next: &[f64],
        supervision: &Supervision,
        mu: f64,
    ) -> Result<FilterState> {
        self.augmented_update(beta, x_next, supervision, mu, self.delta)
    }

    fn augmented_update(
        &self,
        beta: &BetaWeights,
        x_next: &[f64],
        supervision: &Supervision,
        mu: f64,
        delta: f64,
    ) -> Result<FilterState> {
        check_lambda(mu)?;
        if supervision.input.len() != self.observations.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.observations.dim(),
                found: supervision.input.len(),
            });
        }
        if supervision.state.len() != self.states.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.states.dim(),
                found: supervision.state.len(),
            });
        }
        let active = self.active_rows(beta)?;
        let col = self.obs_column(x_next)?;
        let m = active.len();
        let x_sup = &supervision.input;
        let mut system = Mat::from_fn(m + 1, m + 1, |a, b| match (a < m, b < m) {
            (true, true) => self.k_x[(active[a], active[b])],
            (true, false) => self.kernel_x.value(self.observations.row(active[a]), x_sup),
            (false, true) => self.kernel_x.value(x_sup, self.observations.row(active[b])),
            (false, false) => self.kernel_x.value(x_sup, x_sup),
        });
        for (a, &i) in active.iter().enumerate() {
            system[(a, a)] += delta / beta.thresholded()[i];
        }
        system[(m, m)] += delta / mu;
        let mut rhs: Vec<f64> = active.iter().map(|&i| col[i]).collect();
        rhs.push(self.kernel_x.value(x_sup, x_next));
        let gamma = SpdSolver::factor(system)?.solve(&rhs)?;
        Ok(FilterState {
            alpha: scatter(self.len(), &active, &gamma[..m]),
            supervision: Some(SupervisedMass {
                index: supervision.index,
                weight: gamma[m],
                state: supervision.state.clone(),
            }),
        })
    }

    /// Squared-regularization KBR update with `δ_T` as the ridge.
    ///
    /// With `threshold` set, `β⁺` replaces the signed `β`.
    pub fn update_kbr(
        &self,
        beta: &BetaWeights,
        x_next: &[f64],
        threshold: bool,
    ) -> Result<FilterState> {
        let col = self.obs_column(x_next)?;
        let weights = if threshold {
            beta.thresholded()
        } else {
            beta.raw()
        };
        let alpha = kbr_squared_weights(self.k_x.as_ref(), weights, &col, self.delta)?;
        Ok(FilterState {
            alpha,
            supervision: None,
        })
    }

    fn active_rows(&self, beta: &BetaWeights) -> Result<Vec<usize>> {
        if beta.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: beta.len(),
            });
        }
        let active = beta.active_indices();
        if active.is_empty() {
            return Err(Error::DegenerateBelief);
        }
        Ok(active)
    }

    /// The belief as an embedding over the training states, plus the
    /// supervision state when it carries mass.
    pub fn belief(&self, state: &FilterState) -> Result<Embedding> {
        let mut points = self.train_states();
        let mut weights = state.alpha.clone();
        if let Some(mass) = &state.supervision {
            points.push(&mass.state)?;
            weights.push(mass.weight);
        }
        Embedding::new(points, weights, self.kernel_y)
    }

    /// Runs the full recursion over `observations` and decodes every belief.
    pub fn run_filter(&self, observations: &Points, mode: &mut FilterMode<'_>) -> Result<FilterRun> {
        if observations.is_empty() {
            return Err(Error::EmptyInput("observations"));
        }
        let mut steps = Vec::with_capacity(observations.len());
        let mut state: Option<FilterState> = None;
        let mut previous: Option<Vec<f64>> = None;
        for (t, x) in observations.iter().enumerate() {
            let started = Instant::now();
            let (next, beta_sum) = self
                .advance(t, state.as_ref(), x, previous.as_deref(), mode)
                .map_err(|e| e.at_step(t + 1))?;
            let belief = self.belief(&next).map_err(|e| e.at_step(t + 1))?;
            let init = match &previous {
                Some(p) => p.clone(),
                None => weighted_mean(&belief),
            };
            let decoded = decode_or_fallback(&belief, &init).map_err(|e| e.at_step(t + 1))?;
            let wall_us = started.elapsed().as_micros();
            previous = Some(decoded.point.clone());
            steps.push(StepOutput {
                step: t + 1,
                decoded: decoded.point,
                converged: decoded.converged,
                fallback: decoded.fallback,
                beta_plus_sum: beta_sum,
                wall_us,
                belief,
            });
            state = Some(next);
        }
        Ok(FilterRun {
            mode: mode.name().to_string(),
            steps,
        })
    }

    fn advance(
        &self,
        t: usize,
        state: Option<&FilterState>,
        x: &[f64],
        previous: Option<&[f64]>,
        mode: &mut FilterMode<'_>,
    ) -> Result<(FilterState, Option<f64>)> {
        let Some(state) = state else {
            let init = match mode {
                FilterMode::KRegBayes { provider, mu } if *mu > 0.0 => {
                    match provider.supervise(t, None, x)? {
                        Some(sup) => self.init_state_regularized(x, &sup, *mu)?,
                        None => self.init_state(x)?,
                    }
                }
                _ => self.init_state(x)?,
            };
            return Ok((init, None));
        };
        let beta = self.predict_weights(state)?;
        let sum = Some(beta.positive_sum());
        let next = match mode {
            FilterMode::Pkbr => self.update(&beta, x)?,
            FilterMode::Kbr { threshold } => self.update_kbr(&beta, x, *threshold)?,
            // A zero weight drops the supervision row entirely.
            FilterMode::KRegBayes { mu, .. } if *mu == 0.0 => self.update(&beta, x)?,
            FilterMode::KRegBayes { provider, mu } => match provider.supervise(t, previous, x)? {
                Some(sup) => self.update_regularized(&beta, x, &sup, *mu)?,
                None => self.update(&beta, x)?,
            },
        };
        Ok((next, sum))
    }
}

fn shifted(m: &Mat<f64>, shift: f64) -> Mat<f64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += shift;
    }
    out
}

fn scatter(len: usize, indices: &[usize], values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (&i, &v) in indices.iter().zip(values) {
        out[i] = v;
    }
    out
}

/// Mass placed on a single supervision state.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedMass {
    /// Position in the supervision set.
    pub index: usize,
    pub weight: f64,
    pub state: Vec<f64>,
}

/// Belief coefficients at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub alpha: Vec<f64>,
    /// The sparse `α̃`: at most one supervision index carries mass.
    pub supervision: Option<SupervisedMass>,
}

impl FilterState {
    /// `α̃` as (index, weight) pairs.
    pub fn alpha_tilde(&self) -> Vec<(usize, f64)> {
        self.supervision
            .iter()
            .map(|m| (m.index, m.weight))
            .collect()
    }
}

/// One supervision pair `(x̃, ỹ)` for a filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    pub index: usize,
    pub input: Vec<f64>,
    pub state: Vec<f64>,
}

/// Supplies the supervision pair for each regularized update.
pub trait SupervisionProvider {
    /// `step` is the zero-based index of the observation being absorbed;
    /// `previous_estimate` is absent at the first step. `None` skips
    /// supervision for this step.
    fn supervise(
        &mut self,
        step: usize,
        previous_estimate: Option<&[f64]>,
        observation: &[f64],
    ) -> Result<Option<Supervision>>;
}

/// Supervision from known dynamics: a fixed pair per step.
#[derive(Debug, Clone)]
pub struct KnownDynamics {
    inputs: Points,
    states: Points,
}

impl KnownDynamics {
    /// Row `t` of each list is the supervision for step `t`.
    pub fn new(inputs: Points, states: Points) -> Result<Self> {
        if inputs.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                found: states.len(),
            });
        }
        Ok(Self { inputs, states })
    }
}

impl SupervisionProvider for KnownDynamics {
    fn supervise(&mut self, step: usize, _: Option<&[f64]>, _: &[f64]) -> Result<Option<Supervision>> {
        if step >= self.states.len() {
            return Err(Error::InvalidInput(format!(
                "no supervision for step {step}"
            )));
        }
        Ok(Some(Supervision {
            index: step,
            input: self.inputs.row(step).to_vec(),
            state: self.states.row(step).to_vec(),
        }))
    }
}

/// Supervision by nearest neighbour: predict the next state from the
/// previous estimate, then pick the closest point of a fixed supervision
/// set. The current observation serves as `x̃`.
pub struct NearestInSet<F> {
    states: Points,
    predictor: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> NearestInSet<F> {
    pub fn new(states: Points, predictor: F) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyInput("supervision set"));
        }
        Ok(Self { states, predictor })
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> SupervisionProvider for NearestInSet<F> {
    fn supervise(
        &mut self,
        _: usize,
        previous_estimate: Option<&[f64]>,
        observation: &[f64],
    ) -> Result<Option<Supervision>> {
        let Some(previous) = previous_estimate else {
            return Ok(None);
        };
        let target = (self.predictor)(previous);
        if target.len() != self.states.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.states.dim(),
                found: target.len(),
            });
        }
        let (index, _) = self
            .states
            .iter()
            .map(|s| squared_distance(s, &target))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("supervision set is nonempty");
        Ok(Some(Supervision {
            index,
            input: observation.to_vec(),
            state: self.states.row(index).to_vec(),
        }))
    }
}

/// Update rule used by [`KernelFilterModel::run_filter`].
pub enum FilterMode<'a> {
    Pkbr,
    /// Squared-regularization KBR; `threshold` feeds `β⁺` instead of `β`.
    Kbr { threshold: bool },
    KRegBayes {
        provider: &'a mut dyn SupervisionProvider,
        mu: f64,
    },
}

impl FilterMode<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            FilterMode::Pkbr => "pkbr",
            FilterMode::Kbr { .. } => "kbr",
            FilterMode::KRegBayes { .. } => "kregbayes",
        }
    }
}

/// Result of the mean-shift preimage iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub point: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the iteration degenerated and the best training point was
    /// returned instead.
    pub fallback: bool,
}

/// Approximates `argmin_y ‖m − ψ(y)‖` by the fixed-point iteration
/// `y ← Σ w_i k(y_i, y) y_i / Σ w_i k(y_i, y)`.
///
/// Gaussian kernels only, where `k(y, y) = 1` makes the objective
/// `‖m‖² − 2 m(y) + 1`.
pub fn decode(belief: &Embedding, init: &[f64]) -> Result<Decoded> {
    decode_traced(belief, init, |_| {})
}

/// [`decode`], calling `visit` on every iterate after the initial point.
pub fn decode_traced(
    belief: &Embedding,
    init: &[f64],
    mut visit: impl FnMut(&[f64]),
) -> Result<Decoded> {
    if !matches!(belief.kernel(), Kernel::Gaussian { .. }) {
        return Err(Error::InvalidInput(
            "preimage decoding needs a Gaussian kernel".into(),
        ));
    }
    let dim = belief.points().dim();
    if init.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: init.len(),
        });
    }
    let kernel = belief.kernel();
    let mut y = init.to_vec();
    let mut numerator = vec![0.0; dim];
    for iteration in 1..=DECODE_MAX_ITERATIONS {
        numerator.iter_mut().for_each(|v| *v = 0.0);
        let mut denominator = 0.0;
        for (p, w) in belief.points().iter().zip(belief.weights()) {
            let c = w * kernel.value(p, &y);
            denominator += c;
            for (n, pi) in numerator.iter_mut().zip(p) {
                *n += c * pi;
            }
        }
        if !(denominator.abs() >= DECODE_MIN_DENOMINATOR) {
            return Err(Error::DecodeDegenerate(denominator.abs()));
        }
        let next: Vec<f64> = numerator.iter().map(|n| n / denominator).collect();
        let step = squared_distance(&next, &y).sqrt();
        y = next;
        visit(&y);
        if step < DECODE_TOLERANCE {
            return Ok(Decoded {
                point: y,
                converged: true,
                iterations: iteration,
                fallback: false,
            });
        }
    }
    Ok(Decoded {
        point: y,
        converged: false,
        iterations: DECODE_MAX_ITERATIONS,
        fallback: false,
    })
}

/// [`decode`], falling back to the belief point maximizing `⟨ψ(y_i), m⟩`
/// when the iteration degenerates.
pub fn decode_or_fallback(belief: &Embedding, init: &[f64]) -> Result<Decoded> {
    match decode(belief, init) {
        Err(Error::DecodeDegenerate(_)) => {}
        other => return other,
    }
    Ok(Decoded {
        point: best_support_point(belief)?,
        converged: false,
        iterations: 0,
        fallback: true,
    })
}

/// The support point `y_i` maximizing `⟨ψ(y_i), m⟩ = m(y_i)`.
pub fn best_support_point(belief: &Embedding) -> Result<Vec<f64>> {
    let best = belief
        .points()
        .iter()
        .map(|p| belief.evaluate(p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or(Error::EmptyInput("belief"))?;
    Ok(belief.points().row(best).to_vec())
}

/// `‖m − ψ(y)‖²` for a Gaussian-kernel belief.
pub fn decode_objective(belief: &Embedding, y: &[f64]) -> Result<f64> {
    let norm_sq = crate::embedding::inner(belief, belief)?;
    Ok(norm_sq - 2.0 * belief.evaluate(y)? + belief.kernel().diagonal(y))
}

/// `Σ w_i y_i / Σ w_i`, or the plain mean when the weights cancel.
pub fn weighted_mean(belief: &Embedding) -> Vec<f64> {
    let dim = belief.points().dim();
    let total = belief.total_weight();
    let mut out = vec![0.0; dim];
    if total.abs() > DECODE_MIN_DENOMINATOR {
        for (p, w) in belief.points().iter().zip(belief.weights()) {
            for (o, v) in out.iter_mut().zip(p) {
                *o += w * v / total;
            }
        }
    } else {
        let n = belief.len() as f64;
        for p in belief.points().iter() {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v / n;
            }
        }
    }
    out
}

/// Per-step output of a filter run.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// One-based step index.
    pub step: usize,
    pub decoded: Vec<f64>,
    pub converged: bool,
    pub fallback: bool,
    /// `Σ β⁺` of the prediction feeding this step; `None` at the first step.
    pub beta_plus_sum: Option<f64>,
    pub wall_us: u128,
    pub belief: Embedding,
}

#[derive(Debug, Clone)]
pub struct FilterRun {
    pub mode: String,
    pub steps: Vec<StepOutput>,
}

impl FilterRun {
    pub fn decoded(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.decoded.clone()).collect()
    }

    pub fn total_wall_us(&self) -> u128 {
        self.steps.iter().map(|s| s.wall_us).sum()
    }

    /// Writes one CSV row per step:
    /// `step,mode,y0..y{d-1},converged,beta_plus_sum,wall_time_us`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let dim = self.steps.first().map_or(0, |s| s.decoded.len());
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(step_header(dim))?;
        for s in &self.steps {
            csv.write_record(step_record(
                s.step,
                &self.mode,
                &s.decoded,
                s.converged,
                s.beta_plus_sum,
                s.wall_us,
            ))?;
        }
        csv.flush()?;
        Ok(())
    }
}

pub fn step_header(dim: usize) -> Vec<String> {
    let mut h = vec!["step".to_string(), "mode".to_string()];
    h.extend((0..dim).map(|i| format!("y{i}")));
    h.extend(["converged", "beta_plus_sum", "wall_time_us"].map(String::from));
    h
}

pub fn step_record(
    step: usize,
    mode: &str,
    decoded: &[f64],
    converged: bool,
    beta_plus_sum: Option<f64>,
    wall_us: u128,
) -> Vec<String> {
    let mut r = vec![step.to_string(), mode.to_string()];
    r.extend(decoded.iter().map(|v| format!("{v:e}")));
    r.push(converged.to_string());
    r.push(beta_plus_sum.map_or_else(String::new, |v| format!("{v:e}")));
    r.push(wall_us.to_string());
    r
}
