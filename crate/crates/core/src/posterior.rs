//! Posterior-embedding estimators.
//!
//! * [`fit_threshold`]: the thresholded vector-valued ridge regressor
//!   `μ(x) = Ψ (K_X + λΛ⁺)⁻¹ K_{:x}` with `Λ⁺ = diag(1/β⁺)`.
//! * [`fit_kregbayes`]: the same system augmented with supervision pairs
//!   `(x̃, t)` whose diagonal entries are `1/δ`.
//! * [`kbr_squared_predict`]: the squared-regularization kernel Bayes' rule
//!   in Gram form, `w = ΛK((ΛK)² + δI)⁻¹Λk_x` with `Λ = diag(β)`.
//! * [`exact_discrete_posterior`]: Bayes' rule on a finite model, used as an
//!   oracle.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::embedding::{check_lambda, BetaWeights, Embedding};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{mat_vec, solve_general, SpdSolver};
use crate::points::Points;

/// A fitted map `x ↦ Embedding` over the active training outputs.
#[derive(Debug)]
pub struct PosteriorRegressor {
    inputs: Points,
    outputs: Points,
    kernel_x: Kernel,
    kernel_y: Kernel,
    lambda: f64,
    delta: Option<f64>,
    penalties: Vec<f64>,
    solver: SpdSolver,
    active_indices: Vec<usize>,
    likelihood_len: usize,
    supervision_len: usize,
}

/// Summary of a fitted regressor, for diagnostics output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressorInfo {
    pub n: usize,
    pub active: usize,
    pub supervision: usize,
    pub lambda: f64,
    pub delta: Option<f64>,
    pub kernel_x: Kernel,
    pub kernel_y: Kernel,
    pub jitter: f64,
    pub condition_estimate: f64,
}

impl PosteriorRegressor {
    /// Weight vector `(K_X + λΛ⁺)⁻¹ K_{:x}` over [`Self::outputs`].
    pub fn predict_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = self.kernel_x.column(&self.inputs, x)?;
        self.solver.solve(&k)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Embedding> {
        let w = self.predict_weights(x)?;
        Embedding::new(self.outputs.clone(), w, self.kernel_y)
    }

    /// Training inputs that participate in the system (active likelihood
    /// rows followed by supervision rows).
    pub fn inputs(&self) -> &Points {
        &self.inputs
    }

    pub fn outputs(&self) -> &Points {
        &self.outputs
    }

    /// Indices into the likelihood sample with `β⁺ > 0`.
    pub fn active_indices(&self) -> &[usize] {
        &self.active_indices
    }

    /// Diagonal of `λΛ⁺` over the active system rows.
    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel_x(&self) -> Kernel {
        self.kernel_x
    }

    pub fn kernel_y(&self) -> Kernel {
        self.kernel_y
    }

    /// Solves `(K_X + λΛ⁺) C = R` for an arbitrary right-hand side.
    pub fn solve_system(&self, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
        self.solver.solve_matrix(rhs)
    }

    pub fn info(&self) -> RegressorInfo {
        RegressorInfo {
            n: self.likelihood_len + self.supervision_len,
            active: self.active_indices.len(),
            supervision: self.supervision_len,
            lambda: self.lambda,
            delta: self.delta,
            kernel_x: self.kernel_x,
            kernel_y: self.kernel_y,
            jitter: self.solver.jitter(),
            condition_estimate: self.solver.condition_estimate(),
        }
    }
}

/// Fits the thresholded regressor on the likelihood sample `(x_i, y_i)`.
///
/// Rows with `β⁺_i = 0` are dropped before factoring.
pub fn fit_threshold(
    train_x: &Points,
    train_y: &Points,
    beta: &BetaWeights,
    kernel_x: Kernel,
    kernel_y: Kernel,
    lambda: f64,
) -> Result<PosteriorRegressor> {
    fit_augmented(train_x, train_y, beta, None, kernel_x, kernel_y, lambda)
}

/// Fits the posterior-regularized (kRegBayes) regressor.
///
/// The likelihood pairs carry `β` as in [`fit_threshold`]; each supervision
/// pair `(x̃_j, t_j)` adds a row with penalty `λ/δ`, pulling `μ(x̃_j)` toward
/// the point mass `ψ(t_j)`.
#[allow(clippy::too_many_arguments)]
pub fn fit_kregbayes(
    likelihood_x: &Points,
    likelihood_y: &Points,
    supervision_x: &Points,
    supervision_t: &Points,
    beta: &BetaWeights,
    kernel_x: Kernel,
    kernel_y: Kernel,
    lambda: f64,
    delta: f64,
) -> Result<PosteriorRegressor> {
    check_lambda(delta)?;
    if supervision_x.len() != supervision_t.len() {
        return Err(Error::DimensionMismatch {
            expected: supervision_x.len(),
            found: supervision_t.len(),
        });
    }
    let supervision = if supervision_x.is_empty() {
        None
    } else {
        Some((supervision_x, supervision_t, delta))
    };
    let mut fitted = fit_augmented(
        likelihood_x,
        likelihood_y,
        beta,
        supervision,
        kernel_x,
        kernel_y,
        lambda,
    )?;
    fitted.delta = Some(delta);
    Ok(fitted)
}

fn fit_augmented(
    train_x: &Points,
    train_y: &Points,
    beta: &BetaWeights,
    supervision: Option<(&Points, &Points, f64)>,
    kernel_x: Kernel,
    kernel_y: Kernel,
    lambda: f64,
) -> Result<PosteriorRegressor> {
    check_lambda(lambda)?;
    if train_x.len() != train_y.len() {
        return Err(Error::DimensionMismatch {
            expected: train_x.len(),
            found: train_y.len(),
        });
    }
    if beta.len() != train_x.len() {
        return Err(Error::DimensionMismatch {
            expected: train_x.len(),
            found: beta.len(),
        });
    }
    let active = beta.active_indices();
    let mut penalties: Vec<f64> = active
        .iter()
        .map(|&i| lambda / beta.thresholded()[i])
        .collect();

    let mut inputs = train_x.select(&active);
    let mut outputs = train_y.select(&active);
    let mut supervision_len = 0;
    if let Some((sx, st, delta)) = supervision {
        inputs = if active.is_empty() {
            sx.clone()
        } else {
            inputs.concat(sx)?
        };
        outputs = if active.is_empty() {
            st.clone()
        } else {
            outputs.concat(st)?
        };
        supervision_len = sx.len();
        penalties.extend(std::iter::repeat_n(lambda / delta, supervision_len));
    }
    if inputs.is_empty() {
        return Err(Error::DegenerateBelief);
    }

    let mut system = kernel_x.gram_self(&inputs)?.into_mat();
    for (i, p) in penalties.iter().enumerate() {
        system[(i, i)] += p;
    }
    let solver = SpdSolver::factor(system)?;
    Ok(PosteriorRegressor {
        inputs,
        outputs,
        kernel_x,
        kernel_y,
        lambda,
        delta: None,
        penalties,
        solver,
        active_indices: active,
        likelihood_len: train_x.len(),
        supervision_len,
    })
}

/// Weights of the squared-regularization kernel Bayes' rule,
/// `w = ΛK((ΛK)² + δI)⁻¹Λk_x` with `Λ = diag(β)` (signed).
pub fn kbr_squared_weights(
    k_x: MatRef<'_, f64>,
    beta_raw: &[f64],
    k_col: &[f64],
    delta: f64,
) -> Result<Vec<f64>> {
    check_lambda(delta)?;
    let n = beta_raw.len();
    if k_x.nrows() != n || k_x.ncols() != n || k_col.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k_col.len(),
        });
    }
    let scaled = Mat::from_fn(n, n, |i, j| beta_raw[i] * k_x[(i, j)]);
    let mut system = &scaled * &scaled;
    for i in 0..n {
        system[(i, i)] += delta;
    }
    let rhs: Vec<f64> = beta_raw.iter().zip(k_col).map(|(b, k)| b * k).collect();
    let z = solve_general(system.as_ref(), &rhs)?;
    Ok(mat_vec(scaled.as_ref(), &z))
}

/// Squared-regularization KBR posterior at `x` over `train_y`.
#[allow(clippy::too_many_arguments)]
pub fn kbr_squared_predict(
    train_x: &Points,
    train_y: &Points,
    beta_raw: &[f64],
    kernel_x: Kernel,
    kernel_y: Kernel,
    x: &[f64],
    delta_n: f64,
) -> Result<Embedding> {
    if train_x.len() != train_y.len() {
        return Err(Error::DimensionMismatch {
            expected: train_x.len(),
            found: train_y.len(),
        });
    }
    let k = kernel_x.gram_self(train_x)?;
    let col = kernel_x.column(train_x, x)?;
    let w = kbr_squared_weights(k.as_mat(), beta_raw, &col, delta_n)?;
    Embedding::new(train_y.clone(), w, kernel_y)
}

/// A finite joint model: prior over `y_states`, likelihood rows `p(x | y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    x_states: Points,
    y_states: Points,
    prior: Vec<f64>,
    likelihood: Vec<Vec<f64>>,
}

const PMF_TOLERANCE: f64 = 1e-9;

impl DiscreteModel {
    /// `likelihood[j][i] = p(x_i | y_j)`.
    pub fn new(
        x_states: Points,
        y_states: Points,
        prior: Vec<f64>,
        likelihood: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if x_states.is_empty() || y_states.is_empty() {
            return Err(Error::EmptyInput("discrete states"));
        }
        check_pmf(&prior, y_states.len(), "prior")?;
        if likelihood.len() != y_states.len() {
            return Err(Error::DimensionMismatch {
                expected: y_states.len(),
                found: likelihood.len(),
            });
        }
        for row in &likelihood {
            check_pmf(row, x_states.len(), "likelihood row")?;
        }
        Ok(Self {
            x_states,
            y_states,
            prior,
            likelihood,
        })
    }

    pub fn x_states(&self) -> &Points {
        &self.x_states
    }

    pub fn y_states(&self) -> &Points {
        &self.y_states
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// `p(x_i | y_j)`.
    pub fn likelihood(&self, y: usize, x: usize) -> f64 {
        self.likelihood[y][x]
    }

    /// Index of an observed state, matched exactly.
    pub fn x_index(&self, x: &[f64]) -> Result<usize> {
        self.x_states
            .iter()
            .position(|s| s == x)
            .ok_or_else(|| Error::InvalidInput(format!("{x:?} is not an x-state")))
    }
}

fn check_pmf(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: p.len(),
        });
    }
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(format!("{what} has a negative entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::InvalidInput(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// `p(y | x) = π(y) p(x | y) / Σ_y' π(y') p(x | y')`.
pub fn exact_discrete_posterior(model: &DiscreteModel, x: &[f64]) -> Result<Vec<f64>> {
    let xi = model.x_index(x)?;
    let joint: Vec<f64> = model
        .prior
        .iter()
        .enumerate()
        .map(|(j, p)| p * model.likelihood(j, xi))
        .collect();
    let evidence: f64 = joint.iter().sum();
    if !(evidence > 0.0) {
        return Err(Error::InvalidInput(format!("zero evidence at {x:?}")));
    }
    Ok(joint.into_iter().map(|v| v / evidence).collect())
}

/// The exact embedding `Σ_y p(y) ψ(y)` of a finite distribution.
pub fn embed_pmf(pmf: &[f64], y_states: &Points, kernel_y: Kernel) -> Result<Embedding> {
    Embedding::new(y_states.clone(), pmf.to_vec(), kernel_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::expectation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g(s: f64) -> Kernel {
        Kernel::gaussian(s).unwrap()
    }

    #[test]
    fn single_point_vanishing_ridge_is_point_mass() {
        let x = Points::from_rows(&[[0.2, 0.1]]).unwrap();
        let y = Points::from_scalars(&[3.0]);
        let beta = BetaWeights::from_raw(vec![1.0]);
        for lambda in [1e-3, 1e-6, 1e-9] {
            let r = fit_threshold(&x, &y, &beta, g(1.0), g(1.0), lambda).unwrap();
            let w = r.predict_weights(&[0.2, 0.1]).unwrap();
            assert!((w[0] - 1.0 / (1.0 + lambda)).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_two_point_hand_solve() {
        // K_X + Λ⁺ = [[1,2],[2,4]] + I = [[2,2],[2,5]]; K_{:x} = (1, 2).
        let x = Points::from_scalars(&[1.0, 2.0]);
        let y = Points::from_scalars(&[10.0, 20.0]);
        let beta = BetaWeights::from_raw(vec![1.0, 1.0]);
        let r = fit_threshold(&x, &y, &beta, Kernel::Linear, Kernel::Linear, 1.0).unwrap();
        let w = r.predict_weights(&[1.0]).unwrap();
        let det = 2.0 * 5.0 - 2.0 * 2.0;
        let oracle = [(1.0 * 5.0 - 2.0 * 2.0) / det, (2.0 * 2.0 - 2.0 * 1.0) / det];
        assert!((w[0] - oracle[0]).abs() < 1e-14 && (w[1] - oracle[1]).abs() < 1e-14);
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-14 && (w[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn inactive_rows_are_dropped() {
        let x = Points::from_scalars(&[0.0, 1.0, 2.0]);
        let y = Points::from_scalars(&[5.0, 6.0, 7.0]);
        let beta = BetaWeights::from_raw(vec![0.4, -0.1, 0.6]);
        let r = fit_threshold(&x, &y, &beta, g(1.0), g(1.0), 0.1).unwrap();
        assert_eq!(r.active_indices(), &[0, 2]);
        assert_eq!(r.outputs().as_flat(), &[5.0, 7.0]);
        assert_eq!(r.predict(&[0.5]).unwrap().len(), 2);
        assert_eq!(r.info().active, 2);
    }

    #[test]
    fn all_zero_beta_is_degenerate() {
        let x = Points::from_scalars(&[0.0, 1.0]);
        let beta = BetaWeights::from_raw(vec![-0.3, 0.0]);
        let err = fit_threshold(&x, &x, &beta, g(1.0), g(1.0), 0.1).unwrap_err();
        assert!(matches!(err, Error::DegenerateBelief));
    }

    #[test]
    fn pure_supervision_collapses_to_point_mass() {
        let empty = Points::from_flat(2, vec![]).unwrap();
        let empty_y = Points::from_flat(1, vec![]).unwrap();
        let sx = Points::from_rows(&[[0.5, -0.5]]).unwrap();
        let st = Points::from_scalars(&[2.0]);
        let beta = BetaWeights::from_raw(vec![]);
        let r = fit_kregbayes(&empty, &empty_y, &sx, &st, &beta, g(1.0), g(1.0), 1e-10, 1.0)
            .unwrap();
        let e = r.predict(&[0.5, -0.5]).unwrap();
        assert_eq!(e.points().as_flat(), &[2.0]);
        assert!((e.weights()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vanishing_delta_recovers_threshold_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Points::from_flat(2, (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let y = Points::from_scalars(&(0..8).map(|i| i as f64).collect::<Vec<_>>());
        let beta = BetaWeights::from_raw((0..8).map(|_| rng.random_range(-0.05..0.25)).collect());
        let sx = Points::from_rows(&[[0.1, 0.2], [-0.3, 0.4]]).unwrap();
        let st = Points::from_scalars(&[9.0, 10.0]);
        let base = fit_threshold(&x, &y, &beta, g(0.7), g(1.0), 0.01).unwrap();
        let reg =
            fit_kregbayes(&x, &y, &sx, &st, &beta, g(0.7), g(1.0), 0.01, 1e-12).unwrap();
        let query = [0.05, 0.1];
        let wb = base.predict_weights(&query).unwrap();
        let wr = reg.predict_weights(&query).unwrap();
        assert_eq!(wr.len(), wb.len() + 2);
        for (a, b) in wb.iter().zip(&wr) {
            assert!((a - b).abs() < 1e-6);
        }
        for s in &wr[wb.len()..] {
            assert!(s.abs() < 1e-6);
        }
    }

    #[test]
    fn kregbayes_one_plus_one_hand_solve() {
        // One likelihood pair (x=1, β=0.5), one supervision pair (x̃=2),
        // λ=1, δ=0.25, linear kernel on x.
        let lx = Points::from_scalars(&[1.0]);
        let ly = Points::from_scalars(&[0.0]);
        let sx = Points::from_scalars(&[2.0]);
        let st = Points::from_scalars(&[1.0]);
        let beta = BetaWeights::from_raw(vec![0.5]);
        let r = fit_kregbayes(&lx, &ly, &sx, &st, &beta, Kernel::Linear, Kernel::Linear, 1.0, 0.25)
            .unwrap();
        // System [[1 + 1/0.5, 2], [2, 4 + 1/0.25]] = [[3, 2], [2, 8]], rhs (3, 6) at x=3.
        let (a, b, c, d): (f64, f64, f64, f64) = (3.0, 2.0, 2.0, 8.0);
        let (r0, r1) = (3.0, 6.0);
        let det = a * d - b * c;
        let oracle = [(r0 * d - b * r1) / det, (a * r1 - c * r0) / det];
        let w = r.predict_weights(&[3.0]).unwrap();
        assert!((w[0] - oracle[0]).abs() < 1e-14 && (w[1] - oracle[1]).abs() < 1e-14);
        assert_eq!(r.outputs().as_flat(), &[0.0, 1.0]);
        assert_eq!(r.info().supervision, 1);
        assert_eq!(r.info().delta, Some(0.25));
    }

    #[test]
    fn kregbayes_without_supervision_is_bitwise_threshold() {
        let x = Points::from_scalars(&[0.0, 0.4, 1.1, 2.0]);
        let y = Points::from_scalars(&[1.0, 2.0, 3.0, 4.0]);
        let beta = BetaWeights::from_raw(vec![0.3, 0.2, -0.1, 0.6]);
        let none_x = Points::from_flat(1, vec![]).unwrap();
        let a = fit_threshold(&x, &y, &beta, g(0.5), g(1.0), 0.05).unwrap();
        let b = fit_kregbayes(&x, &y, &none_x, &none_x, &beta, g(0.5), g(1.0), 0.05, 1e-5)
            .unwrap();
        for q in [-0.5, 0.3, 1.7] {
            assert_eq!(a.predict_weights(&[q]).unwrap(), b.predict_weights(&[q]).unwrap());
        }
    }

    #[test]
    fn kbr_scalar_reduction() {
        let x = Points::from_rows(&[[0.0, 0.0]]).unwrap();
        let y = Points::from_scalars(&[1.0]);
        let query = [0.5, 0.0];
        let kq = g(1.0).eval(&query, &[0.0, 0.0]).unwrap();
        for delta in [0.1, 1e-3] {
            let e = kbr_squared_predict(&x, &y, &[1.0], g(1.0), g(1.0), &query, delta).unwrap();
            assert!((e.weights()[0] - kq / (1.0 + delta)).abs() < 1e-14);
        }
    }

    #[test]
    fn kbr_signed_beta_gives_signed_weights() {
        let x = Points::from_scalars(&[0.0, 0.5, 1.0, 1.5]);
        let y = x.clone();
        let beta = [0.5, -0.2, 0.4, 0.3];
        let e = kbr_squared_predict(&x, &y, &beta, g(0.5), g(0.5), &[0.5], 1e-3).unwrap();
        // No sign constraint; only finiteness and the shape.
        assert_eq!(e.len(), 4);
        assert!(expectation(&e, |_| 1.0).is_finite());
    }

    fn two_state_model() -> DiscreteModel {
        DiscreteModel::new(
            Points::from_scalars(&[0.0, 1.0]),
            Points::from_scalars(&[0.0, 1.0, 2.0]),
            vec![0.2, 0.3, 0.5],
            vec![vec![0.5, 0.5]; 3],
        )
        .unwrap()
    }

    #[test]
    fn uninformative_likelihood_returns_prior() {
        let m = two_state_model();
        let p = exact_discrete_posterior(&m, &[1.0]).unwrap();
        for (a, b) in p.iter().zip(m.prior()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_likelihood_returns_point_mass() {
        let m = DiscreteModel::new(
            Points::from_scalars(&[0.0, 1.0, 2.0]),
            Points::from_scalars(&[0.0, 1.0, 2.0]),
            vec![0.2, 0.3, 0.5],
            vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(exact_discrete_posterior(&m, &[0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(exact_discrete_posterior(&m, &[2.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn random_model_matches_log_space_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pmf = |n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let prior = pmf(3);
        let lik = vec![pmf(3), pmf(3), pmf(3)];
        let states = Points::from_scalars(&[0.0, 1.0, 2.0]);
        let m = DiscreteModel::new(states.clone(), states, prior.clone(), lik.clone()).unwrap();
        for xi in 0..3 {
            let got = exact_discrete_posterior(&m, &[xi as f64]).unwrap();
            // Oracle: log-sum-exp normalization.
            let logs: Vec<f64> = (0..3).map(|j| prior[j].ln() + lik[j][xi].ln()).collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            for (g, l) in got.iter().zip(&logs) {
                assert!((g - (l - lse).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_evidence_and_unknown_state_are_errors() {
        let m = DiscreteModel::new(
            Points::from_scalars(&[0.0, 1.0]),
            Points::from_scalars(&[0.0, 1.0]),
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(matches!(
            exact_discrete_posterior(&m, &[1.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(exact_discrete_posterior(&m, &[7.0]).is_err());
    }

    #[test]
    fn model_validation() {
        let s = Points::from_scalars(&[0.0, 1.0]);
        assert!(DiscreteModel::new(s.clone(), s.clone(), vec![0.5, 0.6], vec![vec![0.5, 0.5]; 2])
            .is_err());
        assert!(DiscreteModel::new(s.clone(), s.clone(), vec![0.5, 0.5], vec![vec![1.5, -0.5]; 2])
            .is_err());
        assert!(DiscreteModel::new(s.clone(), s, vec![0.5, 0.5], vec![vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn embed_pmf_examples() {
        let states = Points::from_scalars(&[0.0, 1.0, 2.0]);
        let delta = embed_pmf(&[0.0, 1.0, 0.0], &states, g(1.0)).unwrap();
        let mass = Embedding::point_mass(&[1.0], g(1.0)).unwrap();
        assert!(crate::embedding::rkhs_distance(&delta, &mass).unwrap() < 1e-7);
        let u = embed_pmf(&[1.0 / 3.0; 3], &states, g(1.0)).unwrap();
        assert_eq!(u.weights(), &[1.0 / 3.0; 3]);
        let pmf = [0.1, 0.6, 0.3];
        let e = embed_pmf(&pmf, &states, g(1.0)).unwrap();
        let h = |y: &[f64]| y[0] * y[0] - 1.0;
        let direct: f64 = pmf.iter().zip(states.iter()).map(|(p, y)| p * h(y)).sum();
        assert_eq!(expectation(&e, h), direct);
    }
}
