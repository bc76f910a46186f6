//! Central finite differences, used to validate user derivatives and to
//! differentiate the least-squares multiplier map.

use super::matrix::DenseMatrix;
use super::vec_ops;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default step `1e-5 * (1 + ||x||_inf)`.
pub fn default_step<S: Scalar>(x: &[S]) -> S {
    S::of(1e-5) * (S::one() + vec_ops::norm_inf(x))
}

/// Jacobian of `f` at `x` by central differences with step `h`:
/// column `j` is `(f(x + h e_j) - f(x - h e_j)) / (2 h)`.
///
/// The closure may itself fail; its errors pass through. Non-finite outputs
/// are rejected.
pub fn finite_diff_jacobian<S, F>(mut f: F, x: &[S], h: S) -> Result<DenseMatrix<S>>
where
    S: Scalar,
    F: FnMut(&[S]) -> Result<Vec<S>>,
{
    assert!(h > S::zero(), "finite difference step must be positive");
    let n = x.len();
    let mut work = x.to_vec();
    let mut columns: Vec<Vec<S>> = Vec::with_capacity(n);
    let two_h = S::of(2.0) * h;
    let mut m = None;
    for j in 0..n {
        let xj = work[j];
        work[j] = xj + h;
        let plus = f(&work)?;
        work[j] = xj - h;
        let minus = f(&work)?;
        work[j] = xj;
        if !vec_ops::all_finite(&plus) || !vec_ops::all_finite(&minus) {
            return Err(Error::NonFiniteEvaluation {
                field: "finite difference probe",
            });
        }
        if plus.len() != minus.len() || *m.get_or_insert(plus.len()) != plus.len() {
            return Err(Error::DimensionMismatch {
                what: "finite difference output",
                expected: m.unwrap_or(plus.len()),
                got: plus.len(),
            });
        }
        columns.push(
            plus.iter()
                .zip(&minus)
                .map(|(&p, &q)| (p - q) / two_h)
                .collect(),
        );
    }
    let m = m.unwrap_or(0);
    Ok(DenseMatrix::from_fn(m, n, |i, j| columns[j][i]))
}
