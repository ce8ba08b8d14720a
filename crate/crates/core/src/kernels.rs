//! Positive-definite kernels, Gram matrices and the median bandwidth
//! heuristic.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{dot, squared_distance, Points};

/// Relative eigenvalue floor used when checking that a Gram matrix is PSD.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// A positive-definite kernel on `R^d`.
///
/// The Gaussian variant is `k(a, b) = exp(-‖a − b‖² / (2 σ²))` with
/// bandwidth `σ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", try_from = "KernelRepr")]
pub enum Kernel {
    Gaussian { bandwidth: f64 },
    Linear,
}

#[derive(Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
enum KernelRepr {
    Gaussian { bandwidth: f64 },
    Linear,
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;

    fn try_from(repr: KernelRepr) -> Result<Self> {
        match repr {
            KernelRepr::Gaussian { bandwidth } => Kernel::gaussian(bandwidth),
            KernelRepr::Linear => Ok(Kernel::Linear),
        }
    }
}

impl Kernel {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if bandwidth.is_finite() && bandwidth > 0.0 {
            Ok(Kernel::Gaussian { bandwidth })
        } else {
            Err(Error::InvalidBandwidth(bandwidth))
        }
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match *self {
            Kernel::Gaussian { bandwidth } => Some(bandwidth),
            Kernel::Linear => None,
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        Ok(self.value(a, b))
    }

    /// Kernel value without the dimension check.
    #[inline]
    pub(crate) fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { bandwidth } => {
                (-squared_distance(a, b) / (2.0 * bandwidth * bandwidth)).exp()
            }
            Kernel::Linear => dot(a, b),
        }
    }

    /// `k(a, a)`. Equal to one for every Gaussian kernel.
    pub fn diagonal(&self, a: &[f64]) -> f64 {
        self.value(a, a)
    }

    /// Gram matrix between two point lists, `G[i][j] = k(left[i], right[j])`.
    pub fn gram(&self, left: &Points, right: &Points) -> Result<GramMatrix> {
        check_pair(left, right)?;
        let entries = Mat::from_fn(left.len(), right.len(), |i, j| {
            self.value(left.row(i), right.row(j))
        });
        Ok(GramMatrix {
            entries,
            kernel: *self,
            symmetric: false,
        })
    }

    /// Gram matrix of a point list with itself. Exactly symmetric.
    pub fn gram_self(&self, points: &Points) -> Result<GramMatrix> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point list"));
        }
        let n = points.len();
        let mut entries = Mat::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = self.value(points.row(i), points.row(j));
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(GramMatrix {
            entries,
            kernel: *self,
            symmetric: true,
        })
    }

    /// The column `(k(x, p_1), …, k(x, p_n))`.
    pub fn column(&self, points: &Points, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                found: x.len(),
            });
        }
        Ok(points.iter().map(|p| self.value(p, x)).collect())
    }
}

fn check_pair(left: &Points, right: &Points) -> Result<()> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptyInput("point list"));
    }
    if left.dim() != right.dim() {
        return Err(Error::DimensionMismatch {
            expected: left.dim(),
            found: right.dim(),
        });
    }
    Ok(())
}

/// Dense matrix of pairwise kernel values.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: Mat<f64>,
    kernel: Kernel,
    symmetric: bool,
}

impl GramMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.entries
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// True when built from one point list against itself.
    pub fn is_self_gram(&self) -> bool {
        self.symmetric
    }

    /// Wraps an explicit matrix, e.g. a test fixture.
    pub fn from_mat(entries: Mat<f64>, kernel: Kernel) -> Self {
        let symmetric = entries.nrows() == entries.ncols()
            && (0..entries.nrows())
                .all(|i| (0..i).all(|j| entries[(i, j)] == entries[(j, i)]));
        Self {
            entries,
            kernel,
            symmetric,
        }
    }

    /// Smallest and largest eigenvalue of a symmetric Gram matrix.
    pub fn eigenvalue_range(&self) -> Result<(f64, f64)> {
        if self.nrows() != self.ncols() {
            return Err(Error::InvalidInput("eigenvalues need a square matrix".into()));
        }
        let eig = self
            .entries
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numeric(format!("eigenvalue solver failed: {e:?}")))?;
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    /// PSD check: smallest eigenvalue ≥ −[`PSD_TOLERANCE`] · largest.
    pub fn is_psd(&self) -> Result<bool> {
        let (lo, hi) = self.eigenvalue_range()?;
        Ok(lo >= -PSD_TOLERANCE * hi.abs().max(f64::MIN_POSITIVE))
    }

    /// Largest diagonal entry, the `κ` of the thresholding bound.
    pub fn max_diagonal(&self) -> f64 {
        (0..self.nrows().min(self.ncols()))
            .map(|i| self.entries[(i, i)])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Median of the pairwise Euclidean distances over distinct index pairs
/// `i < j`.
pub fn median_heuristic(points: &Points) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "median heuristic needs at least two points".into(),
        ));
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            distances.push(squared_distance(points.row(i), points.row(j)).sqrt());
        }
    }
    let median = median_in_place(&mut distances);
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::InvalidBandwidth(median))
    }
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let m = values.len();
    let mid = m / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if m % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}
