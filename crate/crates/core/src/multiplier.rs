//! Multiplier (control input) solvers.
//!
//! Equality constraints admit a closed-form multiplier through one symmetric
//! solve. Inequality constraints require the minimizer of a quadratic over the
//! nonnegative orthant (NNQP); that optimality system is
//!
//! ```text
//! s = G lambda + c,   s >= 0,   lambda >= 0,   s^T lambda = 0,
//! ```
//!
//! solved here by a primal active-set method in the style of Lawson-Hanson
//! NNLS. The constraint count stays small in this problem family, so exact
//! finite termination on nondegenerate problems beats iterative schemes.
//! `nnqp_brute_force` enumerates all active sets and serves as the independent
//! ground truth.

use crate::error::{Error, Result};
use crate::kernel::{gram, lu_solve, spd_solve, vec_ops, DenseMatrix};
use crate::problem::{EvalRecord, MetricAt};
use crate::scalar::Scalar;

/// Multiplier vector with its complementary slack and the residual of the
/// optimality system it solves.
#[derive(Debug, Clone)]
pub struct MultiplierSolution<S> {
    pub lambda: Vec<S>,
    /// `G lambda + c` for the inequality subproblem; zeros for equality.
    pub slack: Vec<S>,
    pub kkt_residual: S,
    /// Indices with `lambda_i > 0`.
    pub active_set: Vec<usize>,
}

impl<S: Scalar> MultiplierSolution<S> {
    pub fn empty() -> Self {
        MultiplierSolution {
            lambda: Vec::new(),
            slack: Vec::new(),
            kkt_residual: S::zero(),
            active_set: Vec::new(),
        }
    }

    pub fn lambda_inf_norm(&self) -> S {
        vec_ops::norm_inf(&self.lambda)
    }

    fn from_lambda(lambda: Vec<S>, slack: Vec<S>, kkt_residual: S) -> Self {
        let active_set = lambda
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > S::zero())
            .map(|(i, _)| i)
            .collect();
        MultiplierSolution {
            lambda,
            slack,
            kkt_residual,
            active_set,
        }
    }
}

/// Closed-form equality multiplier: solves
/// `(J T J^T) lambda = -(J T grad_f - K h)`.
///
/// `k` holds the diagonal control gains (length `m`, all positive).
pub fn equality_multiplier<S: Scalar>(
    eval: &EvalRecord<S>,
    metric: &MetricAt<S>,
    k: &[S],
) -> Result<MultiplierSolution<S>> {
    let m = eval.jac_h.rows();
    debug_assert!(m >= 1, "equality_multiplier needs at least one constraint");
    if k.len() != m {
        return Err(Error::DimensionMismatch {
            what: "gain vector",
            expected: m,
            got: k.len(),
        });
    }
    let g = gram(&eval.jac_h, |v| metric.apply(v));
    let t_grad = metric.apply(&eval.grad_f);
    let j_t_grad = eval.jac_h.matvec(&t_grad);
    let rhs: Vec<S> = (0..m).map(|i| k[i] * eval.h[i] - j_t_grad[i]).collect();
    let lambda = spd_solve(&g, &rhs)?;
    let residual = vec_ops::norm2(&vec_ops::sub(&g.matvec(&lambda), &rhs));
    Ok(MultiplierSolution::from_lambda(
        lambda,
        vec![S::zero(); m],
        residual,
    ))
}

/// Residual of the NNQP optimality system at `lambda`:
/// `max{ ||min(lambda, 0)||_inf, ||min(G lambda + c, 0)||_inf, |lambda^T (G lambda + c)| }`.
pub fn nnqp_kkt_residual<S: Scalar>(g: &DenseMatrix<S>, c: &[S], lambda: &[S]) -> S {
    let s = vec_ops::add_scaled(&g.matvec(lambda), S::one(), c);
    let primal = lambda
        .iter()
        .fold(S::zero(), |m, &v| m.max((-v).max(S::zero())));
    let dual = s.iter().fold(S::zero(), |m, &v| m.max((-v).max(S::zero())));
    let comp = vec_ops::dot(lambda, &s).abs();
    primal.max(dual).max(comp)
}

/// Objective `1/2 lambda^T G lambda + c^T lambda`.
pub fn nnqp_objective<S: Scalar>(g: &DenseMatrix<S>, c: &[S], lambda: &[S]) -> S {
    S::of(0.5) * vec_ops::dot(lambda, &g.matvec(lambda)) + vec_ops::dot(c, lambda)
}

const LAMBDA_BLOWUP: f64 = 1e8;

/// Minimizes `1/2 lambda^T G lambda + c^T lambda` over `lambda >= 0` by a
/// primal active-set method. Ties in the entering-index selection break
/// toward the smallest index, so runs are deterministic.
pub fn nnqp_solve<S: Scalar>(g: &DenseMatrix<S>, c: &[S]) -> Result<MultiplierSolution<S>> {
    let m = c.len();
    if g.rows() != m || g.cols() != m {
        return Err(Error::DimensionMismatch {
            what: "nnqp matrix",
            expected: m,
            got: g.rows(),
        });
    }
    if m == 0 {
        return Ok(MultiplierSolution::empty());
    }

    let tol_dual = S::of(1e-10) * (S::one() + vec_ops::norm_inf(c));
    let cap = 50 * m;
    let blowup = S::of(LAMBDA_BLOWUP);

    let mut lambda = vec![S::zero(); m];
    let mut in_active = vec![false; m];
    let mut iterations = 0usize;

    loop {
        // Dual check over the zero set; enter the most negative slack.
        let s = vec_ops::add_scaled(&g.matvec(&lambda), S::one(), c);
        let mut enter = None;
        let mut best_w = tol_dual;
        for i in 0..m {
            if !in_active[i] {
                let w = -s[i];
                if w > best_w {
                    best_w = w;
                    enter = Some(i);
                }
            }
        }
        let Some(enter) = enter else {
            let residual = nnqp_kkt_residual(g, c, &lambda);
            return Ok(MultiplierSolution::from_lambda(lambda, s, residual));
        };
        in_active[enter] = true;

        // Re-solve on the active set, pruning until the candidate is feasible.
        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::MaxIterations { cap });
            }
            let active: Vec<usize> = (0..m).filter(|&i| in_active[i]).collect();
            let y_active = solve_on_subset(g, c, &active)?;

            let feasible = y_active.iter().all(|&v| v > S::zero());
            if feasible {
                lambda = vec![S::zero(); m];
                for (idx, &i) in active.iter().enumerate() {
                    lambda[i] = y_active[idx];
                }
                break;
            }

            // Interpolate back to the boundary and drop the blocking index.
            let mut alpha = S::one();
            let mut drop_idx = None;
            for (idx, &i) in active.iter().enumerate() {
                if y_active[idx] <= S::zero() {
                    let denom = lambda[i] - y_active[idx];
                    let t = if denom > S::zero() {
                        lambda[i] / denom
                    } else {
                        S::zero()
                    };
                    if t < alpha {
                        alpha = t;
                        drop_idx = Some(i);
                    }
                }
            }
            for (idx, &i) in active.iter().enumerate() {
                lambda[i] = lambda[i] + alpha * (y_active[idx] - lambda[i]);
            }
            match drop_idx {
                Some(i) => {
                    lambda[i] = S::zero();
                    in_active[i] = false;
                }
                // Numerical fallback: drop everything that reached zero.
                None => {
                    for i in 0..m {
                        if in_active[i] && lambda[i] <= S::zero() {
                            lambda[i] = S::zero();
                            in_active[i] = false;
                        }
                    }
                }
            }
        }

        if vec_ops::norm_inf(&lambda) > blowup {
            return Err(Error::Unbounded);
        }
    }
}

fn solve_on_subset<S: Scalar>(g: &DenseMatrix<S>, c: &[S], subset: &[usize]) -> Result<Vec<S>> {
    let k = subset.len();
    let sub = DenseMatrix::from_fn(k, k, |a, b| g[(subset[a], subset[b])]);
    let rhs: Vec<S> = subset.iter().map(|&i| -c[i]).collect();
    spd_solve(&sub, &rhs)
}

const BRUTE_FORCE_CAP: usize = 12;
const FEAS_TOL: f64 = 1e-10;

/// Exhaustive oracle: enumerates all `2^m` active sets, keeps candidates that
/// satisfy the optimality system within `1e-10`, and returns the one with the
/// least objective (smallest multiplier norm on ties).
pub fn nnqp_brute_force<S: Scalar>(g: &DenseMatrix<S>, c: &[S]) -> Result<MultiplierSolution<S>> {
    let m = c.len();
    if m > BRUTE_FORCE_CAP {
        return Err(Error::TooManyConstraints {
            m,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if m == 0 {
        return Ok(MultiplierSolution::empty());
    }
    let feas_tol = S::of(FEAS_TOL);
    let mut best: Option<(S, S, Vec<S>)> = None; // (objective, norm, lambda)

    'subsets: for mask in 0u32..(1u32 << m) {
        let subset: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let mut lambda = vec![S::zero(); m];
        if !subset.is_empty() {
            let k = subset.len();
            let sub = DenseMatrix::from_fn(k, k, |a, b| g[(subset[a], subset[b])]);
            let rhs: Vec<S> = subset.iter().map(|&i| -c[i]).collect();
            let Ok(sol) = lu_solve(&sub, &rhs, "nnqp brute force subset") else {
                continue 'subsets;
            };
            for (idx, &i) in subset.iter().enumerate() {
                if sol[idx] < -feas_tol {
                    continue 'subsets;
                }
                lambda[i] = sol[idx].max(S::zero());
            }
        }
        let s = vec_ops::add_scaled(&g.matvec(&lambda), S::one(), c);
        for (i, &si) in s.iter().enumerate() {
            if !subset.contains(&i) && si < -feas_tol {
                continue 'subsets;
            }
        }
        let obj = nnqp_objective(g, c, &lambda);
        let norm = vec_ops::norm2(&lambda);
        let better = match &best {
            None => true,
            Some((bobj, bnorm, _)) => {
                obj < *bobj - S::of(1e-12)
                    || ((obj - *bobj).abs() <= S::of(1e-12) && norm < *bnorm)
            }
        };
        if better {
            best = Some((obj, norm, lambda));
        }
    }

    let (_, _, lambda) = best.ok_or(Error::NoFeasibleCandidate)?;
    let s = vec_ops::add_scaled(&g.matvec(&lambda), S::one(), c);
    let residual = nnqp_kkt_residual(g, c, &lambda);
    Ok(MultiplierSolution::from_lambda(lambda, s, residual))
}
