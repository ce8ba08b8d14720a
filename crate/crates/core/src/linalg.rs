//! Dense solves shared by the estimators.
//!
//! Every regularized system in this crate is either symmetric positive
//! definite (Gram matrix plus a positive diagonal) or a general square
//! system (the squared-regularization baseline). The SPD path factors with
//! Cholesky and, if that fails, retries exactly once after adding
//! `1e-10 * trace / n` to the diagonal.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

const JITTER_SCALE: f64 = 1e-10;

/// A Cholesky factorization of a symmetric positive-definite system.
#[derive(Debug)]
pub struct SpdSolver {
    llt: Llt<f64>,
    jitter: f64,
}

impl SpdSolver {
    pub fn factor(matrix: Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "expected a nonempty square system, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        ensure_finite(matrix.as_ref())?;
        if let Ok(llt) = matrix.llt(Side::Lower) {
            return Ok(Self { llt, jitter: 0.0 });
        }
        let trace: f64 = (0..n).map(|i| matrix[(i, i)]).sum();
        let jitter = JITTER_SCALE * trace.abs().max(f64::MIN_POSITIVE) / n as f64;
        let mut shifted = matrix;
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        let llt = shifted
            .llt(Side::Lower)
            .map_err(|e| Error::Numeric(format!("cholesky failed after jitter {jitter:e}: {e:?}")))?;
        Ok(Self { llt, jitter })
    }

    pub fn dim(&self) -> usize {
        self.llt.L().nrows()
    }

    /// Diagonal shift applied by the fallback path; zero when the first
    /// factorization succeeded.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// The lower Cholesky factor `L` with `L Lᵀ` equal to the (possibly
    /// jittered) matrix.
    pub fn lower(&self) -> MatRef<'_, f64> {
        self.llt.L()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rhs.len(),
            });
        }
        let b = column(rhs);
        let x = self.llt.solve(&b);
        finite_column(x.as_ref())
    }

    pub fn solve_matrix(&self, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
        let x = self.llt.solve(rhs.to_owned());
        ensure_finite(x.as_ref())?;
        Ok(x)
    }

    /// Cheap 2-norm condition estimate from the Cholesky diagonal,
    /// `(max L_ii / min L_ii)^2`. A lower bound on the true condition number.
    pub fn condition_estimate(&self) -> f64 {
        let l = self.llt.L();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..l.nrows() {
            let d = l[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (hi / lo).powi(2)
    }
}

/// Solves a general square system by LU with partial pivoting.
pub fn solve_general(matrix: MatRef<'_, f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    ensure_finite(matrix)?;
    let lu = matrix.partial_piv_lu();
    let x = lu.solve(&column(rhs));
    finite_column(x.as_ref())
}

pub fn mat_vec(m: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), v.len());
    let mut out = vec![0.0; m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (o, &mij) in out.iter_mut().zip(col.iter()) {
            *o += mij * vj;
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖A x − b‖`.
pub fn residual_norm(a: MatRef<'_, f64>, x: &[f64], b: &[f64]) -> f64 {
    let ax = mat_vec(a, x);
    ax.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn column(values: &[f64]) -> Mat<f64> {
    Mat::from_fn(values.len(), 1, |i, _| values[i])
}

fn finite_column(x: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let out: Vec<f64> = (0..x.nrows()).map(|i| x[(i, 0)]).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::Numeric("solve produced non-finite entries".into()))
    }
}

fn ensure_finite(m: MatRef<'_, f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::Numeric(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}
