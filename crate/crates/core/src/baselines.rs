//! Gaussian filters used as reference points: linear Kalman, extended
//! Kalman and unscented Kalman, plus the toy model expressed on the
//! `(cos θ, sin θ)` representation.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::SpdSolver;
use crate::points::Points;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-10;

/// Mean and covariance of a Gaussian state belief.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vec<f64>,
    pub covariance: Mat<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Vec<f64>, covariance: Mat<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::EmptyInput("mean"));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        let belief = Self { mean, covariance };
        if !belief.is_symmetric() {
            return Err(Error::InvalidInput("covariance is not symmetric".into()));
        }
        Ok(belief)
    }

    /// A belief with covariance `variance · I`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, scaled_identity(d, variance))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_symmetric(&self) -> bool {
        let c = &self.covariance;
        let scale = max_abs(c).max(f64::MIN_POSITIVE);
        (0..c.nrows()).all(|i| {
            (0..i).all(|j| (c[(i, j)] - c[(j, i)]).abs() <= SYMMETRY_TOLERANCE * scale)
        })
    }

    /// Symmetric, and no eigenvalue below `-1e-10` times the largest
    /// eigenvalue magnitude.
    pub fn is_valid(&self) -> Result<bool> {
        if !self.is_symmetric() || self.covariance.as_ref().has_nan() {
            return Ok(false);
        }
        let eig = self
            .covariance
            .as_ref()
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
        let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(eig.iter().all(|&v| v >= -PSD_TOLERANCE * top.max(f64::MIN_POSITIVE)))
    }
}

pub type VectorMap = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianMap = Box<dyn Fn(&[f64]) -> Mat<f64> + Send + Sync>;

/// A state-space model with additive Gaussian noise.
pub struct StateSpaceSpec {
    pub transition: VectorMap,
    pub transition_jacobian: JacobianMap,
    pub observation: VectorMap,
    pub observation_jacobian: JacobianMap,
    pub process_noise: Mat<f64>,
    pub observation_noise: Mat<f64>,
    pub initial: GaussianBelief,
}

impl StateSpaceSpec {
    pub fn state_dim(&self) -> usize {
        self.process_noise.nrows()
    }

    pub fn observation_dim(&self) -> usize {
        self.observation_noise.nrows()
    }
}

/// `s' = A s + w`, `z = H s + v`.
#[derive(Debug, Clone)]
pub struct LinearSpec {
    pub transition: Mat<f64>,
    pub observation: Mat<f64>,
    pub process_noise: Mat<f64>,
    pub observation_noise: Mat<f64>,
    pub initial: GaussianBelief,
}

impl LinearSpec {
    pub fn new(
        transition: Mat<f64>,
        observation: Mat<f64>,
        process_noise: Mat<f64>,
        observation_noise: Mat<f64>,
        initial: GaussianBelief,
    ) -> Result<Self> {
        let d = initial.dim();
        let p = observation.nrows();
        for (m, rows, cols) in [
            (&transition, d, d),
            (&observation, p, d),
            (&process_noise, d, d),
            (&observation_noise, p, p),
        ] {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    expected: rows * cols,
                    found: m.nrows() * m.ncols(),
                });
            }
        }
        GaussianBelief::new(vec![0.0; d], process_noise.clone())?;
        GaussianBelief::new(vec![0.0; p], observation_noise.clone())?;
        Ok(Self {
            transition,
            observation,
            process_noise,
            observation_noise,
            initial,
        })
    }

    /// The same model with the matrices wrapped as maps and constant
    /// Jacobians.
    pub fn to_spec(&self) -> StateSpaceSpec {
        let (a, a2) = (self.transition.clone(), self.transition.clone());
        let (h, h2) = (self.observation.clone(), self.observation.clone());
        StateSpaceSpec {
            transition: Box::new(move |s| apply(&a, s)),
            transition_jacobian: Box::new(move |_| a2.clone()),
            observation: Box::new(move |s| apply(&h, s)),
            observation_jacobian: Box::new(move |_| h2.clone()),
            process_noise: self.process_noise.clone(),
            observation_noise: self.observation_noise.clone(),
            initial: self.initial.clone(),
        }
    }
}

/// Unscented transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

pub fn kf_predict(belief: &GaussianBelief, spec: &LinearSpec) -> Result<GaussianBelief> {
    check_dim(belief, spec.transition.ncols())?;
    let a = &spec.transition;
    let mean = apply(a, &belief.mean);
    let cov = a * &belief.covariance * a.transpose() + &spec.process_noise;
    Ok(GaussianBelief {
        mean,
        covariance: symmetrized(cov),
    })
}

pub fn kf_update(belief: &GaussianBelief, spec: &LinearSpec, z: &[f64]) -> Result<GaussianBelief> {
    check_dim(belief, spec.observation.ncols())?;
    let predicted = apply(&spec.observation, &belief.mean);
    linearized_update(belief, &spec.observation, &predicted, &spec.observation_noise, z)
}

/// Standard Kalman predict followed by update.
pub fn kf_step(belief: &GaussianBelief, spec: &LinearSpec, z: &[f64]) -> Result<GaussianBelief> {
    kf_update(&kf_predict(belief, spec)?, spec, z)
}

pub fn ekf_predict(belief: &GaussianBelief, spec: &StateSpaceSpec) -> Result<GaussianBelief> {
    check_dim(belief, spec.state_dim())?;
    let f = (spec.transition_jacobian)(&belief.mean);
    let mean = (spec.transition)(&belief.mean);
    let cov = &f * &belief.covariance * f.transpose() + &spec.process_noise;
    Ok(GaussianBelief {
        mean,
        covariance: symmetrized(cov),
    })
}

pub fn ekf_update(belief: &GaussianBelief, spec: &StateSpaceSpec, z: &[f64]) -> Result<GaussianBelief> {
    check_dim(belief, spec.state_dim())?;
    let h = (spec.observation_jacobian)(&belief.mean);
    let predicted = (spec.observation)(&belief.mean);
    linearized_update(belief, &h, &predicted, &spec.observation_noise, z)
}

/// First-order linearization at the current and the predicted mean.
pub fn ekf_step(belief: &GaussianBelief, spec: &StateSpaceSpec, z: &[f64]) -> Result<GaussianBelief> {
    ekf_update(&ekf_predict(belief, spec)?, spec, z)
}

pub fn ukf_predict(
    belief: &GaussianBelief,
    spec: &StateSpaceSpec,
    params: UkfParams,
) -> Result<GaussianBelief> {
    check_dim(belief, spec.state_dim())?;
    let sigma = SigmaPoints::new(belief, params)?;
    let mapped: Vec<Vec<f64>> = sigma.points.iter().map(|p| (spec.transition)(p)).collect();
    let (mean, cov) = sigma.moments(&mapped);
    Ok(GaussianBelief {
        mean,
        covariance: symmetrized(cov + &spec.process_noise),
    })
}

pub fn ukf_update(
    belief: &GaussianBelief,
    spec: &StateSpaceSpec,
    z: &[f64],
    params: UkfParams,
) -> Result<GaussianBelief> {
    check_dim(belief, spec.state_dim())?;
    check_observation(z, spec.observation_dim())?;
    let sigma = SigmaPoints::new(belief, params)?;
    let mapped: Vec<Vec<f64>> = sigma.points.iter().map(|p| (spec.observation)(p)).collect();
    let (z_hat, z_cov) = sigma.moments(&mapped);
    let innovation_cov = z_cov + &spec.observation_noise;
    let cross = sigma.cross(&mapped);
    gain_update(belief, &cross, &innovation_cov, &z_hat, z)
}

/// Unscented predict and update with `2d + 1` sigma points.
pub fn ukf_step(
    belief: &GaussianBelief,
    spec: &StateSpaceSpec,
    z: &[f64],
    params: UkfParams,
) -> Result<GaussianBelief> {
    ukf_update(&ukf_predict(belief, spec, params)?, spec, z, params)
}

struct SigmaPoints {
    points: Vec<Vec<f64>>,
    /// Mean weight of every non-central point.
    weight: f64,
    /// `Wc₀ − Wm₀`.
    central_excess: f64,
}

impl SigmaPoints {
    fn new(belief: &GaussianBelief, params: UkfParams) -> Result<Self> {
        let d = belief.dim();
        let n = d as f64;
        let lambda = params.alpha * params.alpha * (n + params.kappa) - n;
        let spread = n + lambda;
        if !(spread > 0.0) {
            return Err(Error::InvalidInput(format!(
                "unscented spread d + λ = {spread} must be positive"
            )));
        }
        let scaled = Mat::from_fn(d, d, |i, j| spread * belief.covariance[(i, j)]);
        let solver = SpdSolver::factor(scaled)
            .map_err(|e| Error::Numeric(format!("sigma-point square root: {e}")))?;
        let l = solver.lower();
        let mut points = vec![belief.mean.clone()];
        for sign in [1.0, -1.0] {
            for j in 0..d {
                points.push((0..d).map(|i| belief.mean[i] + sign * l[(i, j)]).collect());
            }
        }
        Ok(Self {
            points,
            weight: 1.0 / (2.0 * spread),
            central_excess: 1.0 - params.alpha * params.alpha + params.beta,
        })
    }

    /// Weighted mean and covariance of the mapped points, accumulated as
    /// offsets from the image of the central point.
    fn moments(&self, mapped: &[Vec<f64>]) -> (Vec<f64>, Mat<f64>) {
        let offsets = offsets(mapped);
        let shift = self.weighted_sum(&offsets);
        let mean = mapped[0].iter().zip(&shift).map(|(c, s)| c + s).collect();
        let cov = self.second_moment(&offsets, &offsets, &shift, &shift);
        (mean, cov)
    }

    fn cross(&self, mapped: &[Vec<f64>]) -> Mat<f64> {
        let xs = offsets(&self.points);
        let zs = offsets(mapped);
        let (sx, sz) = (self.weighted_sum(&xs), self.weighted_sum(&zs));
        self.second_moment(&xs, &zs, &sx, &sz)
    }

    fn weighted_sum(&self, offsets: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; offsets[0].len()];
        for o in &offsets[1..] {
            for (a, v) in out.iter_mut().zip(o) {
                *a += self.weight * v;
            }
        }
        out
    }

    // Σᵢ Wcᵢ (aᵢ − ā)(bᵢ − b̄)ᵀ rewritten with offsets from the central
    // point: Σ_{i≥1} W aᵢ bᵢᵀ + (Wc₀ − Wm₀ − 1) ā b̄ᵀ.
    fn second_moment(&self, a: &[Vec<f64>], b: &[Vec<f64>], sa: &[f64], sb: &[f64]) -> Mat<f64> {
        let c = self.central_excess - 1.0;
        Mat::from_fn(sa.len(), sb.len(), |i, j| {
            let s: f64 = a[1..].iter().zip(&b[1..]).map(|(p, q)| p[i] * q[j]).sum();
            self.weight * s + c * sa[i] * sb[j]
        })
    }
}

fn offsets(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, c)| a - c).collect())
        .collect()
}

fn linearized_update(
    belief: &GaussianBelief,
    h: &Mat<f64>,
    predicted: &[f64],
    r: &Mat<f64>,
    z: &[f64],
) -> Result<GaussianBelief> {
    check_observation(z, h.nrows())?;
    let ph = &belief.covariance * h.transpose();
    let s = h * &ph + r;
    gain_update(belief, &ph, &s, predicted, z)
}

/// `K = C S⁻¹`, `m ← m + K(z − ẑ)`, `P ← P − K S Kᵀ`, then symmetrize.
fn gain_update(
    belief: &GaussianBelief,
    cross: &Mat<f64>,
    innovation_cov: &Mat<f64>,
    predicted: &[f64],
    z: &[f64],
) -> Result<GaussianBelief> {
    let solver = SpdSolver::factor(innovation_cov.clone())
        .map_err(|e| Error::Numeric(format!("innovation covariance: {e}")))?;
    let gain = solver.solve_matrix(cross.transpose())?.transpose().to_owned();
    let innovation: Vec<f64> = z.iter().zip(predicted).map(|(a, b)| a - b).collect();
    let correction = apply(&gain, &innovation);
    let mean = belief.mean.iter().zip(&correction).map(|(m, c)| m + c).collect();
    let cov = &belief.covariance - &gain * innovation_cov * gain.transpose();
    Ok(GaussianBelief {
        mean,
        covariance: symmetrized(cov),
    })
}

fn check_dim(belief: &GaussianBelief, d: usize) -> Result<()> {
    if belief.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: belief.dim(),
        });
    }
    Ok(())
}

fn check_observation(z: &[f64], p: usize) -> Result<()> {
    if z.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: z.len(),
        });
    }
    Ok(())
}

fn apply(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    crate::linalg::mat_vec(m.as_ref(), v)
}

fn symmetrized(m: Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

fn max_abs(m: &Mat<f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

pub fn scaled_identity(d: usize, s: f64) -> Mat<f64> {
    Mat::from_fn(d, d, |i, j| if i == j { s } else { 0.0 })
}

/// Which Gaussian filter to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianFilterKind {
    Ekf,
    Ukf(UkfParams),
}

/// Filters a sequence from `spec.initial`, treated as the belief before the
/// first observation: the first step only updates.
pub fn run_gaussian_filter(
    spec: &StateSpaceSpec,
    kind: GaussianFilterKind,
    observations: &Points,
) -> Result<Vec<GaussianBelief>> {
    let mut out: Vec<GaussianBelief> = Vec::with_capacity(observations.len());
    for (t, z) in observations.iter().enumerate() {
        let prior = match out.last() {
            None => spec.initial.clone(),
            Some(b) => match kind {
                GaussianFilterKind::Ekf => ekf_predict(b, spec),
                GaussianFilterKind::Ukf(p) => ukf_predict(b, spec, p),
            }
            .map_err(|e| e.at_step(t + 1))?,
        };
        let next = match kind {
            GaussianFilterKind::Ekf => ekf_update(&prior, spec, z),
            GaussianFilterKind::Ukf(p) => ukf_update(&prior, spec, z, p),
        }
        .map_err(|e| e.at_step(t + 1))?;
        out.push(next);
    }
    Ok(out)
}

/// [`run_gaussian_filter`] for the linear Kalman filter.
pub fn run_kf(spec: &LinearSpec, observations: &Points) -> Result<Vec<GaussianBelief>> {
    let mut out: Vec<GaussianBelief> = Vec::with_capacity(observations.len());
    for (t, z) in observations.iter().enumerate() {
        let prior = match out.last() {
            None => spec.initial.clone(),
            Some(b) => kf_predict(b, spec).map_err(|e| e.at_step(t + 1))?,
        };
        out.push(kf_update(&prior, spec, z).map_err(|e| e.at_step(t + 1))?);
    }
    Ok(out)
}

/// Largest central-difference discrepancy of a supplied Jacobian, relative
/// to the Frobenius norm of the finite-difference estimate (floored at 1).
pub fn jacobian_error(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    jacobian: &dyn Fn(&[f64]) -> Mat<f64>,
    x: &[f64],
    h: f64,
) -> f64 {
    let j = jacobian(x);
    let mut fd = Mat::<f64>::zeros(j.nrows(), j.ncols());
    for c in 0..x.len() {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[c] += h;
        minus[c] -= h;
        let (fp, fm) = (f(&plus), f(&minus));
        for r in 0..fp.len() {
            fd[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    let diff = (&j - &fd).norm_l2();
    diff / fd.norm_l2().max(1.0)
}

/// The toy rotation dynamics on `(cos θ, sin θ)`: the angle is extracted
/// with `atan2`, advanced by `step` and mapped back.
pub fn toy_transition(step: f64) -> impl Fn(&[f64]) -> Vec<f64> + Send + Sync + Clone {
    move |s| {
        let phi = s[1].atan2(s[0]) + step;
        vec![phi.cos(), phi.sin()]
    }
}

pub fn toy_transition_jacobian(step: f64) -> impl Fn(&[f64]) -> Mat<f64> + Send + Sync + Clone {
    move |s| {
        let grad = angle_gradient(s);
        let phi = s[1].atan2(s[0]) + step;
        let d = [-phi.sin(), phi.cos()];
        Mat::from_fn(2, 2, |i, j| d[i] * grad[j])
    }
}

/// `(1 + sin 8φ)(cos φ, sin φ)` with `φ = atan2(s₁, s₀)`.
pub fn toy_observation(s: &[f64]) -> Vec<f64> {
    let phi = s[1].atan2(s[0]);
    let r = 1.0 + (8.0 * phi).sin();
    vec![r * phi.cos(), r * phi.sin()]
}

pub fn toy_observation_jacobian(s: &[f64]) -> Mat<f64> {
    let grad = angle_gradient(s);
    let phi = s[1].atan2(s[0]);
    let r = 1.0 + (8.0 * phi).sin();
    let dr = 8.0 * (8.0 * phi).cos();
    let d = [
        dr * phi.cos() - r * phi.sin(),
        dr * phi.sin() + r * phi.cos(),
    ];
    Mat::from_fn(2, 2, |i, j| d[i] * grad[j])
}

fn angle_gradient(s: &[f64]) -> [f64; 2] {
    let r2 = s[0] * s[0] + s[1] * s[1];
    [-s[1] / r2, s[0] / r2]
}

/// Noise and initial-belief settings for the toy model's Gaussian filters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyFilterNoise {
    pub step: f64,
    /// Isotropic process covariance on the 2D representation.
    pub process_variance: f64,
    pub observation_variance: f64,
    pub initial_variance: f64,
}

/// The toy model on `(cos θ, sin θ)` with a known starting angle.
pub fn toy_state_space(noise: ToyFilterNoise, theta1: f64) -> Result<StateSpaceSpec> {
    Ok(StateSpaceSpec {
        transition: Box::new(toy_transition(noise.step)),
        transition_jacobian: Box::new(toy_transition_jacobian(noise.step)),
        observation: Box::new(toy_observation),
        observation_jacobian: Box::new(toy_observation_jacobian),
        process_noise: scaled_identity(2, noise.process_variance),
        observation_noise: scaled_identity(2, noise.observation_variance),
        initial: GaussianBelief::isotropic(
            vec![theta1.cos(), theta1.sin()],
            noise.initial_variance,
        )?,
    })
}

/// The linear surrogate used by the Kalman filter on the toy model: a
/// rotation by `step` for the dynamics and a least-squares observation
/// matrix `H` with residual covariance `R` fitted on training pairs.
pub fn toy_linear_spec(
    noise: ToyFilterNoise,
    theta1: f64,
    train_states: &Points,
    train_observations: &Points,
) -> Result<LinearSpec> {
    let (h, r) = fit_linear_observation(train_states, train_observations)?;
    let (c, s) = (noise.step.cos(), noise.step.sin());
    let rotation = Mat::from_fn(2, 2, |i, j| [[c, -s], [s, c]][i][j]);
    LinearSpec::new(
        rotation,
        h,
        scaled_identity(2, noise.process_variance),
        r,
        GaussianBelief::isotropic(vec![theta1.cos(), theta1.sin()], noise.initial_variance)?,
    )
}

/// Least-squares `H` in `z ≈ H s` and the residual covariance.
pub fn fit_linear_observation(states: &Points, observations: &Points) -> Result<(Mat<f64>, Mat<f64>)> {
    if states.len() != observations.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            found: observations.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::EmptyInput("states"));
    }
    let n = states.len();
    let (d, p) = (states.dim(), observations.dim());
    let s = Mat::from_fn(n, d, |i, j| states.row(i)[j]);
    let z = Mat::from_fn(n, p, |i, j| observations.row(i)[j]);
    let gram = s.transpose() * &s;
    let solver = SpdSolver::factor(gram)?;
    let h = solver.solve_matrix((s.transpose() * &z).as_ref())?.transpose().to_owned();
    let resid = &z - &s * h.transpose();
    let r = symmetrized(resid.transpose() * &resid * faer::Scale(1.0 / n as f64));
    Ok((h, r))
}
