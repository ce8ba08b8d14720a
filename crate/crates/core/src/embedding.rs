//! Weighted-sample representations of RKHS mean elements and the
//! prior-to-joint weight computation.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, Kernel};
use crate::linalg::{mat_vec, SpdSolver};
use crate::points::Points;

/// The RKHS element `Σ_i w_i ψ(y_i)`.
///
/// Weights may be signed; thresholding happens upstream in [`BetaWeights`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmbeddingRepr")]
pub struct Embedding {
    points: Points,
    weights: Vec<f64>,
    kernel: Kernel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingRepr {
    points: Points,
    weights: Vec<f64>,
    kernel: Kernel,
}

impl TryFrom<EmbeddingRepr> for Embedding {
    type Error = Error;

    fn try_from(r: EmbeddingRepr) -> Result<Self> {
        Embedding::new(r.points, r.weights, r.kernel)
    }
}

impl Embedding {
    pub fn new(points: Points, weights: Vec<f64>, kernel: Kernel) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("embedding points"));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::Numeric(format!("non-finite embedding weight {bad}")));
        }
        Ok(Self {
            points,
            weights,
            kernel,
        })
    }

    /// `ψ(y)`, the embedding of the point distribution at `y`.
    pub fn point_mass(point: &[f64], kernel: Kernel) -> Result<Self> {
        Self::new(Points::from_rows(&[point])?, vec![1.0], kernel)
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Evaluates the embedding as a function, `Σ_i w_i k(y_i, y)`.
    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.points.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points.dim(),
                found: y.len(),
            });
        }
        Ok(self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * self.kernel.value(p, y))
            .sum())
    }

    /// Same points, weights scaled to sum to one.
    pub fn renormalized(&self) -> Result<Self> {
        Ok(Self {
            points: self.points.clone(),
            weights: renormalize(&self.weights)?,
            kernel: self.kernel,
        })
    }
}

/// Uniform-weight embedding `(1/N) Σ ψ(y_i)` of a sample.
pub fn embed_empirical(points: &Points, kernel: Kernel) -> Result<Embedding> {
    if points.is_empty() {
        return Err(Error::EmptyInput("sample"));
    }
    let w = 1.0 / points.len() as f64;
    Embedding::new(points.clone(), vec![w; points.len()], kernel)
}

fn check_compatible(a: &Embedding, b: &Embedding) -> Result<()> {
    if a.kernel != b.kernel {
        return Err(Error::InvalidInput(format!(
            "kernel mismatch: {:?} vs {:?}",
            a.kernel, b.kernel
        )));
    }
    if a.points.dim() != b.points.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.points.dim(),
            found: b.points.dim(),
        });
    }
    Ok(())
}

/// RKHS inner product `w_1ᵀ G w_2`.
pub fn inner(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_compatible(a, b)?;
    let k = a.kernel;
    let mut total = 0.0;
    for (p, wp) in a.points.iter().zip(&a.weights) {
        let row: f64 = b
            .points
            .iter()
            .zip(&b.weights)
            .map(|(q, wq)| wq * k.value(p, q))
            .sum();
        total += wp * row;
    }
    Ok(total)
}

/// `‖a − b‖` in the RKHS, clamped at zero against roundoff.
pub fn rkhs_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    let aa = inner(a, a)?;
    let ab = inner(a, b)?;
    let bb = inner(b, b)?;
    Ok((aa - 2.0 * ab + bb).max(0.0).sqrt())
}

/// `Σ_i w_i h(y_i)`, the embedding estimate of `E[h]`.
pub fn expectation(e: &Embedding, h: impl Fn(&[f64]) -> f64) -> f64 {
    e.points.iter().zip(&e.weights).map(|(p, w)| w * h(p)).sum()
}

/// Signed weights `β` and their positive parts `β⁺ = max(0, β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaWeights {
    raw: Vec<f64>,
    thresholded: Vec<f64>,
}

impl BetaWeights {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let thresholded = raw.iter().map(|b| b.max(0.0)).collect();
        Self { raw, thresholded }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn thresholded(&self) -> &[f64] {
        &self.thresholded
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Indices with `β⁺ > 0`.
    pub fn active_indices(&self) -> Vec<usize> {
        self.thresholded
            .iter()
            .enumerate()
            .filter(|(_, b)| **b > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `Σ β⁺`.
    pub fn positive_sum(&self) -> f64 {
        self.thresholded.iter().sum()
    }

    /// `Σ β⁻` with `β⁻ = −min(0, β)`.
    pub fn negative_mass(&self) -> f64 {
        self.raw.iter().map(|b| (-b).max(0.0)).sum()
    }
}

/// Solves `(G_Y + nλI) β = G̃_Y α̃` and thresholds the result.
///
/// `g_y` is the `n×n` Gram matrix of the likelihood-sample outputs and
/// `g_tilde` the `n×l` cross Gram against the prior sample carrying weights
/// `alpha_tilde`.
pub fn compute_beta(
    g_y: &GramMatrix,
    g_tilde: &GramMatrix,
    alpha_tilde: &[f64],
    lambda: f64,
) -> Result<BetaWeights> {
    let n = g_y.nrows();
    if g_y.ncols() != n {
        return Err(Error::InvalidInput("G_Y must be square".into()));
    }
    if g_tilde.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g_tilde.nrows(),
        });
    }
    if g_tilde.ncols() != alpha_tilde.len() {
        return Err(Error::DimensionMismatch {
            expected: g_tilde.ncols(),
            found: alpha_tilde.len(),
        });
    }
    check_lambda(lambda)?;
    let shift = n as f64 * lambda;
    let system = Mat::from_fn(n, n, |i, j| {
        g_y.get(i, j) + if i == j { shift } else { 0.0 }
    });
    let rhs = mat_vec(g_tilde.as_mat(), alpha_tilde);
    let raw = SpdSolver::factor(system)?.solve(&rhs)?;
    Ok(BetaWeights::from_raw(raw))
}

/// Scales nonnegative weights to sum to one.
pub fn renormalize(weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateBelief);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// The consistency schedule `λ_n = c · n^{-1/2}`.
pub fn lambda_schedule(n: usize, c: f64) -> f64 {
    c / (n as f64).sqrt()
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "regularization must be positive, got {lambda}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::residual_norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn g(s: f64) -> Kernel {
        Kernel::gaussian(s).unwrap()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Points {
        let data = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
        Points::from_flat(dim, data).unwrap()
    }

    fn random_embedding(rng: &mut ChaCha8Rng, n: usize, kernel: Kernel) -> Embedding {
        let points = random_points(rng, n, 2);
        let weights = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Embedding::new(points, weights, kernel).unwrap()
    }

    #[test]
    fn empirical_weights_are_uniform() {
        let e = embed_empirical(&Points::from_scalars(&[1.0, 2.0, 3.0, 4.0]), g(1.0)).unwrap();
        assert_eq!(e.weights(), &[0.25; 4]);
        let e = embed_empirical(&Points::from_scalars(&[5.0]), g(1.0)).unwrap();
        assert_eq!(e.weights(), &[1.0]);
        assert!(embed_empirical(&Points::from_scalars(&[]), g(1.0)).is_err());
    }

    #[test]
    fn empirical_inner_with_point_mass_is_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sample = random_points(&mut rng, 1000, 2);
        let k = g(0.8);
        let e = embed_empirical(&sample, k).unwrap();
        let z = [0.3, -0.2];
        let via_inner = inner(&Embedding::point_mass(&z, k).unwrap(), &e).unwrap();

        let mut direct = 0.0;
        for p in sample.iter() {
            let d2 = (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2);
            direct += (-d2 / (2.0 * 0.8 * 0.8)).exp();
        }
        direct /= 1000.0;
        assert!((via_inner - direct).abs() < 1e-12);
    }

    #[test]
    fn point_mass_inner_products() {
        let k = g(1.0);
        let a = Embedding::point_mass(&[0.5, 0.5], k).unwrap();
        let b = Embedding::point_mass(&[1.5, -0.5], k).unwrap();
        assert_eq!(inner(&a, &a).unwrap(), 1.0);
        let kab = k.eval(&[0.5, 0.5], &[1.5, -0.5]).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), kab);
        assert_eq!(rkhs_distance(&a, &a).unwrap(), 0.0);
        let d = rkhs_distance(&a, &b).unwrap();
        assert!((d - (2.0 - 2.0 * kab).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn inner_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = g(1.3);
        let a = random_embedding(&mut rng, 50, k);
        let b = random_embedding(&mut rng, 50, k);
        let mut oracle = 0.0;
        for i in 0..50 {
            for j in 0..50 {
                let (p, q) = (a.points().row(i), b.points().row(j));
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                oracle += a.weights()[i] * b.weights()[j] * (-d2 / (2.0 * 1.3 * 1.3)).exp();
            }
        }
        assert!((inner(&a, &b).unwrap() - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn distance_matches_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = g(0.7);
        let a = random_embedding(&mut rng, 20, k);
        let b = random_embedding(&mut rng, 30, k);
        let expanded =
            inner(&a, &a).unwrap() - 2.0 * inner(&a, &b).unwrap() + inner(&b, &b).unwrap();
        assert!((rkhs_distance(&a, &b).unwrap() - expanded.max(0.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kernel_mismatch_is_rejected() {
        let a = Embedding::point_mass(&[0.0], g(1.0)).unwrap();
        let b = Embedding::point_mass(&[0.0], g(2.0)).unwrap();
        assert!(matches!(inner(&a, &b), Err(Error::InvalidInput(_))));
        assert!(rkhs_distance(&a, &b).is_err());
    }

    #[test]
    fn expectation_examples() {
        let e = embed_empirical(&Points::from_scalars(&[1.0, 2.0, 3.0]), g(1.0)).unwrap();
        assert!((expectation(&e, |y| y[0]) - 2.0).abs() < 1e-15);
        let signed = Embedding::new(
            Points::from_scalars(&[0.0, 1.0, 2.0]),
            vec![0.5, -0.25, 2.0],
            g(1.0),
        )
        .unwrap();
        assert_eq!(expectation(&signed, |_| 1.0), signed.total_weight());
    }

    #[test]
    fn beta_scalar_case() {
        let k = g(1.0);
        let y = Points::from_scalars(&[0.3]);
        let gy = k.gram_self(&y).unwrap();
        let gt = k.gram(&y, &y).unwrap();
        let beta = compute_beta(&gy, &gt, &[1.0], 0.5).unwrap();
        assert!((beta.raw()[0] - 1.0 / 1.5).abs() < 1e-15);
        assert!((beta.raw()[0] - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn beta_linear_two_point_case() {
        // (G_Y + 2·0.5·I) = [[2,2],[2,5]], G̃α̃ = (1,2).
        let y = Points::from_scalars(&[1.0, 2.0]);
        let yt = Points::from_scalars(&[1.0]);
        let gy = Kernel::Linear.gram_self(&y).unwrap();
        let gt = Kernel::Linear.gram(&y, &yt).unwrap();
        let beta = compute_beta(&gy, &gt, &[1.0], 0.5).unwrap();

        // Cramer's rule on the 2x2 system.
        let (a, b, c, d): (f64, f64, f64, f64) = (2.0, 2.0, 2.0, 5.0);
        let (r0, r1) = (1.0, 2.0);
        let det = a * d - b * c;
        let oracle = [(r0 * d - b * r1) / det, (a * r1 - c * r0) / det];
        assert!((oracle[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((oracle[1] - 1.0 / 3.0).abs() < 1e-15);
        for (got, want) in beta.raw().iter().zip(oracle) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn thresholding_clips_negatives() {
        let b = BetaWeights::from_raw(vec![0.5, -0.2, 0.7]);
        assert_eq!(b.thresholded(), &[0.5, 0.0, 0.7]);
        assert_eq!(b.active_indices(), vec![0, 2]);
        assert!((b.positive_sum() - 1.2).abs() < 1e-15);
        assert!((b.negative_mass() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn beta_rejects_bad_inputs() {
        let k = g(1.0);
        let y = Points::from_scalars(&[0.0, 1.0]);
        let gy = k.gram_self(&y).unwrap();
        let gt = k.gram(&y, &y).unwrap();
        assert!(compute_beta(&gy, &gt, &[1.0], 0.1).is_err());
        assert!(compute_beta(&gy, &gt, &[0.5, 0.5], 0.0).is_err());
        let nan = GramMatrix::from_mat(Mat::from_fn(2, 2, |_, _| f64::NAN), k);
        assert!(matches!(
            compute_beta(&nan, &gt, &[0.5, 0.5], 0.1),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn renormalize_examples() {
        assert_eq!(renormalize(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(renormalize(&[1.0, 0.0, 3.0]).unwrap(), vec![0.25, 0.0, 0.75]);
        assert!(matches!(renormalize(&[0.0, 0.0]), Err(Error::DegenerateBelief)));
    }

    #[test]
    fn json_round_trip() {
        let e = Embedding::new(
            Points::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap(),
            vec![0.25, -0.5],
            g(0.5),
        )
        .unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(
            s,
            r#"{"points":[[0.0,1.0],[2.0,3.0]],"weights":[0.25,-0.5],"kernel":{"variant":"gaussian","bandwidth":0.5}}"#
        );
        assert_eq!(serde_json::from_str::<Embedding>(&s).unwrap(), e);
        let ragged = r#"{"points":[[0.0]],"weights":[1.0,2.0],"kernel":{"variant":"linear"}}"#;
        assert!(serde_json::from_str::<Embedding>(ragged).is_err());
    }

    proptest! {
        #[test]
        fn inner_is_symmetric(seed in any::<u64>(), n in 1usize..30, m in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = g(rng.random_range(0.2..2.0));
            let a = random_embedding(&mut rng, n, k);
            let b = random_embedding(&mut rng, m, k);
            let ab = inner(&a, &b).unwrap();
            let ba = inner(&b, &a).unwrap();
            // Relative to Σ|w_i||v_j|k_ij, the scale of the summation error.
            let abs_a = Embedding::new(a.points().clone(), a.weights().iter().map(|w| w.abs()).collect(), k).unwrap();
            let abs_b = Embedding::new(b.points().clone(), b.weights().iter().map(|w| w.abs()).collect(), k).unwrap();
            let scale = inner(&abs_a, &abs_b).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * scale);
        }

        #[test]
        fn distance_triangle_inequality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = g(rng.random_range(0.2..2.0));
            let a = random_embedding(&mut rng, 8, k);
            let b = random_embedding(&mut rng, 8, k);
            let c = random_embedding(&mut rng, 8, k);
            let ab = rkhs_distance(&a, &b).unwrap();
            let bc = rkhs_distance(&b, &c).unwrap();
            let ac = rkhs_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn beta_residual_is_small(seed in any::<u64>(), n in 2usize..40, l in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = g(rng.random_range(0.3..2.0));
            let y = random_points(&mut rng, n, 2);
            let yt = random_points(&mut rng, l, 2);
            let alpha: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..1.0)).collect();
            let lambda = rng.random_range(1e-4..1.0);
            let gy = k.gram_self(&y).unwrap();
            let gt = k.gram(&y, &yt).unwrap();
            let beta = compute_beta(&gy, &gt, &alpha, lambda).unwrap();
            let system = Mat::from_fn(n, n, |i, j| {
                gy.get(i, j) + if i == j { n as f64 * lambda } else { 0.0 }
            });
            let rhs = mat_vec(gt.as_mat(), &alpha);
            let r = residual_norm(system.as_ref(), beta.raw(), &rhs);
            prop_assert!(r <= 1e-8 * crate::linalg::norm(&rhs));
        }

        // ‖μ̂⁺ − μ̂‖ ≤ √κ Σ β⁻ for the joint embedding on the product kernel.
        #[test]
        fn thresholding_perturbation_bound(seed in any::<u64>(), n in 2usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kx = g(rng.random_range(0.3..2.0));
            let ky = g(rng.random_range(0.3..2.0));
            let x = random_points(&mut rng, n, 2);
            let y = random_points(&mut rng, n, 1);
            let yt = random_points(&mut rng, 5, 1);
            let gy = ky.gram_self(&y).unwrap();
            let gt = ky.gram(&y, &yt).unwrap();
            let alpha = vec![0.2; 5];
            let beta = compute_beta(&gy, &gt, &alpha, rng.random_range(1e-4..0.1)).unwrap();
            let gx = kx.gram_self(&x).unwrap();
            // Product-kernel Gram of the joint sample.
            let joint = Mat::from_fn(n, n, |i, j| gx.get(i, j) * gy.get(i, j));
            let kappa = (0..n).map(|i| joint[(i, i)]).fold(0.0, f64::max);
            let diff: Vec<f64> = beta.raw().iter().map(|b| (-b).max(0.0)).collect();
            let sq: f64 = mat_vec(joint.as_ref(), &diff).iter().zip(&diff).map(|(a, b)| a * b).sum();
            let lhs = sq.max(0.0).sqrt();
            prop_assert!(lhs <= kappa.sqrt() * beta.negative_mass() + 1e-12);
        }
    }
}
