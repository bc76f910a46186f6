//! Dense symmetric and LU solvers for the small systems this crate produces.

use super::matrix::DenseMatrix;
use super::vec_ops;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<S> {
    l: DenseMatrix<S>,
}

impl<S: Scalar> CholeskyFactor<S> {
    /// Plain factorization; fails on a non-positive pivot.
    pub fn new(g: &DenseMatrix<S>, context: &'static str) -> Result<Self> {
        assert_eq!(g.rows(), g.cols(), "cholesky needs a square matrix");
        let n = g.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= S::zero() || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { context });
                    }
                    l[(i, j)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(CholeskyFactor { l })
    }

    /// Factorization with one retry after adding `1e-12 * trace(G)/n` to the
    /// diagonal. The jitter absorbs rounding-level indefiniteness; a retry
    /// failure is reported as a genuine rank problem.
    pub fn new_with_jitter(g: &DenseMatrix<S>, context: &'static str) -> Result<Self> {
        match Self::new(g, context) {
            Ok(f) => Ok(f),
            Err(_) => {
                let n = g.rows().max(1);
                let jitter = S::of(1e-12) * g.trace() / S::of(n as f64);
                let mut gj = g.clone();
                gj.add_scaled_identity(jitter.abs());
                Self::new(&gj, context)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `G x = b` by forward/back substitution.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.dim();
        assert_eq!(b.len(), n, "cholesky solve dimension");
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - self.l[(i, k)] * y[k];
            }
            y[i] = y[i] / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] = y[i] - self.l[(k, i)] * y[k];
            }
            y[i] = y[i] / self.l[(i, i)];
        }
        y
    }
}

/// Solves `G x = b` for symmetric positive definite `G`.
///
/// Uses a Cholesky factorization with one diagonal-jitter retry, then a single
/// step of iterative refinement so moderately conditioned systems come back
/// with `||G x - b|| <= 1e-10 (1 + ||b||)`.
pub fn spd_solve<S: Scalar>(g: &DenseMatrix<S>, b: &[S]) -> Result<Vec<S>> {
    if g.rows() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "spd_solve rhs",
            expected: g.rows(),
            got: b.len(),
        });
    }
    let factor = CholeskyFactor::new_with_jitter(g, "spd_solve")?;
    let mut x = factor.solve(b);
    let r = vec_ops::sub(b, &g.matvec(&x));
    let dx = factor.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi = *xi + *di;
    }
    Ok(x)
}

/// Computes the constraint Gram matrix `G = J T J^T` for a metric given as a
/// vector operator `v -> T v`, symmetrized as `(G + G^T)/2`.
pub fn gram<S: Scalar>(
    j: &DenseMatrix<S>,
    mut apply_t: impl FnMut(&[S]) -> Vec<S>,
) -> DenseMatrix<S> {
    let m = j.rows();
    if m > j.cols() {
        log::warn!(
            "gram: more constraints ({}) than variables ({}); the Gram matrix is singular",
            m,
            j.cols()
        );
    }
    let t_rows: Vec<Vec<S>> = (0..m).map(|i| apply_t(j.row(i))).collect();
    let mut g = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            g[(i, k)] = vec_ops::dot(j.row(i), &t_rows[k]);
        }
    }
    g.symmetrized()
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor<S> {
    lu: DenseMatrix<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> LuFactor<S> {
    pub fn new(a: &DenseMatrix<S>, context: &'static str) -> Result<Self> {
        assert_eq!(a.rows(), a.cols(), "lu needs a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == S::zero() || !best.is_finite() {
                return Err(Error::SingularMatrix { context });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            for i in (k + 1)..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    lu[(i, j)] = lu[(i, j)] - f * lu[(k, j)];
                }
            }
        }
        Ok(LuFactor { lu, perm })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "lu solve dimension");
        let mut y: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - self.lu[(i, k)] * y[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] = y[i] - self.lu[(i, k)] * y[k];
            }
            y[i] = y[i] / self.lu[(i, i)];
        }
        y
    }
}

/// Solves `A x = b` by LU with partial pivoting plus one refinement step.
pub fn lu_solve<S: Scalar>(a: &DenseMatrix<S>, b: &[S], context: &'static str) -> Result<Vec<S>> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "lu_solve rhs",
            expected: a.rows(),
            got: b.len(),
        });
    }
    let factor = LuFactor::new(a, context)?;
    let mut x = factor.solve(b);
    let r = vec_ops::sub(b, &a.matvec(&x));
    let dx = factor.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi = *xi + *di;
    }
    Ok(x)
}

/// Least-norm solution of `A x + b = 0` for full-row-rank `A`:
/// `x = -A^T (A A^T)^{-1} b`.
pub fn least_norm_solution<S: Scalar>(a: &DenseMatrix<S>, b: &[S]) -> Result<Vec<S>> {
    let aat = gram(a, |v| v.to_vec());
    let w = spd_solve(&aat, b)?;
    Ok(vec_ops::neg(&a.matvec_t(&w)))
}

/// Spectral norm `||A||_2` by power iteration on `A^T A`.
///
/// Deterministic: fixed start vector and iteration count, which is plenty for
/// the matrix sizes in this crate.
pub fn spectral_norm<S: Scalar>(a: &DenseMatrix<S>) -> S {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return S::zero();
    }
    let mut v: Vec<S> = (0..n)
        .map(|i| S::of(1.0 + (i as f64) / (n as f64)))
        .collect();
    let mut sq = S::zero();
    for _ in 0..200 {
        let w = a.matvec_t(&a.matvec(&v));
        let norm = vec_ops::norm2(&w);
        if norm == S::zero() {
            return S::zero();
        }
        sq = norm;
        v = vec_ops::scaled(&w, S::one() / norm);
    }
    sq.sqrt()
}

/// Smallest eigenvalue of a symmetric positive definite matrix, by inverse
/// power iteration with Rayleigh-quotient output.
pub fn min_eigenvalue_spd<S: Scalar>(g: &DenseMatrix<S>) -> Result<S> {
    let n = g.rows();
    let factor = CholeskyFactor::new_with_jitter(g, "min_eigenvalue_spd")?;
    let mut v: Vec<S> = (0..n)
        .map(|i| S::of(1.0 + (i as f64) / (n as f64)))
        .collect();
    let norm = vec_ops::norm2(&v);
    v = vec_ops::scaled(&v, S::one() / norm);
    let mut rayleigh = S::zero();
    for _ in 0..300 {
        let w = factor.solve(&v);
        let norm = vec_ops::norm2(&w);
        v = vec_ops::scaled(&w, S::one() / norm);
        rayleigh = vec_ops::dot(&v, &g.matvec(&v));
    }
    Ok(rayleigh)
}
