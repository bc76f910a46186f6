//! Independent reference implementations used only for cross-validation.
//!
//! These deliberately take different algorithmic routes from the production
//! code they check: the equality subproblem is solved through the assembled
//! block KKT system with a pivoted LU (never through the Gram-matrix path),
//! and the inequality subproblem by exhaustive active-set enumeration.

use crate::error::{Error, Result};
use crate::kernel::{lu_solve, spd_solve, vec_ops, DenseMatrix, LuFactor};
use crate::problem::{evaluate, MetricVariant, ObjectiveSpec, ProblemInstance};
use crate::scalar::Scalar;

/// `T(x)^{-1}` as an explicit matrix: identity, the Hessian itself, or the
/// LU inverse of a custom metric.
fn metric_inverse_matrix<S: Scalar>(
    problem: &ProblemInstance<S>,
    x: &[S],
) -> Result<DenseMatrix<S>> {
    let n = problem.dim();
    match &problem.metric.variant {
        MetricVariant::Identity => Ok(DenseMatrix::identity(n)),
        MetricVariant::InverseHessian => {
            let hessian = problem
                .objective
                .hessian
                .as_ref()
                .ok_or(Error::HessianUnavailable)?;
            let h = hessian(x);
            if !h.is_finite() {
                return Err(Error::NonFiniteEvaluation { field: "hessian" });
            }
            Ok(h)
        }
        MetricVariant::Custom(f) => {
            let t = f(x);
            let factor =
                LuFactor::new(&t, "custom metric inverse").map_err(|_| Error::SingularKktMatrix)?;
            let mut inv = DenseMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = vec![S::zero(); n];
                e[j] = S::one();
                let col = factor.solve(&e);
                for i in 0..n {
                    inv[(i, j)] = col[i];
                }
            }
            Ok(inv)
        }
    }
}

/// Solves the quadratic subproblem restricted to constraint rows `active`:
/// minimize `grad^T d + (1/(2 eta)) d^T T^{-1} d` subject to
/// `h_A + J_A d = 0`, through the assembled block system
/// `[[T^{-1}/eta, J_A^T], [J_A, 0]] (d, lambda_A) = (-grad, -h_A)`.
fn solve_subproblem<S: Scalar>(
    t_inv: &DenseMatrix<S>,
    eta: S,
    grad: &[S],
    jac: &DenseMatrix<S>,
    h: &[S],
    active: &[usize],
) -> Result<(Vec<S>, Vec<S>)> {
    let n = grad.len();
    let ma = active.len();
    let dim = n + ma;
    let mut kkt = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = t_inv[(i, j)] / eta;
        }
    }
    for (a, &row) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(j, n + a)] = jac[(row, j)];
            kkt[(n + a, j)] = jac[(row, j)];
        }
    }
    let mut rhs = vec![S::zero(); dim];
    for i in 0..n {
        rhs[i] = -grad[i];
    }
    for (a, &row) in active.iter().enumerate() {
        rhs[n + a] = -h[row];
    }
    let sol = lu_solve(&kkt, &rhs, "block KKT").map_err(|_| Error::SingularKktMatrix)?;
    Ok((sol[..n].to_vec(), sol[n..].to_vec()))
}

/// One step of the equality-constrained quadratic subproblem: returns
/// `x + d` where `d` minimizes the local model with proximal weight
/// `T(x)^{-1}/eta` subject to the linearized constraints.
pub fn sqp_equality_oracle<S: Scalar>(
    problem: &ProblemInstance<S>,
    x: &[S],
    eta: S,
) -> Result<Vec<S>> {
    let eval = evaluate(problem, x)?;
    let t_inv = metric_inverse_matrix(problem, x)?;
    let active: Vec<usize> = (0..problem.constraint_count()).collect();
    let (d, _) = solve_subproblem(&t_inv, eta, &eval.grad_f, &eval.jac_h, &eval.h, &active)?;
    Ok(vec_ops::add_scaled(x, S::one(), &d))
}

const ENUMERATION_CAP: usize = 12;

/// One step of the inequality-constrained quadratic subproblem by exhaustive
/// active-set enumeration: every subset of rows is solved as an equality
/// subproblem and kept if primal feasible (all linearized rows `<= 1e-9`) and
/// dual feasible (active multipliers `>= -1e-10`); the least-objective
/// candidate wins.
pub fn sqp_inequality_oracle<S: Scalar>(
    problem: &ProblemInstance<S>,
    x: &[S],
    eta: S,
) -> Result<Vec<S>> {
    let m = problem.constraint_count();
    if m > ENUMERATION_CAP {
        return Err(Error::TooManyConstraints {
            m,
            cap: ENUMERATION_CAP,
        });
    }
    let eval = evaluate(problem, x)?;
    let t_inv = metric_inverse_matrix(problem, x)?;
    let feas_tol = S::of(1e-9);
    let dual_tol = S::of(-1e-10);

    let objective = |d: &[S]| -> S {
        vec_ops::dot(&eval.grad_f, d)
            + vec_ops::dot(d, &t_inv.matvec(d)) / (S::of(2.0) * eta)
    };

    let mut best: Option<(S, Vec<S>)> = None;
    'subsets: for mask in 0u32..(1u32 << m) {
        let active: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let Ok((d, lambda_a)) =
            solve_subproblem(&t_inv, eta, &eval.grad_f, &eval.jac_h, &eval.h, &active)
        else {
            continue 'subsets;
        };
        for &l in &lambda_a {
            if l < dual_tol {
                continue 'subsets;
            }
        }
        let lin = vec_ops::add_scaled(&eval.h, S::one(), &eval.jac_h.matvec(&d));
        for &v in &lin {
            if v > feas_tol {
                continue 'subsets;
            }
        }
        let obj = objective(&d);
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, d));
        }
    }
    let (_, d) = best.ok_or(Error::Infeasible)?;
    Ok(vec_ops::add_scaled(x, S::one(), &d))
}

/// One step of momentum-accelerated projected gradient descent for affine
/// constraints `A x + b = 0`: extrapolate `w = x + beta (x - x_prev)`, take
/// the gradient step, then project onto the affine set through
/// `(I - A^T (A A^T)^{-1} A)(.) - A^T (A A^T)^{-1} b`.
pub fn momentum_projected_gradient_oracle<S: Scalar>(
    a: &DenseMatrix<S>,
    b: &[S],
    objective: &ObjectiveSpec<S>,
    x: &[S],
    x_prev: &[S],
    beta: S,
    eta: S,
) -> Result<Vec<S>> {
    let w: Vec<S> = x
        .iter()
        .zip(x_prev)
        .map(|(&xi, &pi)| xi + beta * (xi - pi))
        .collect();
    let grad = (objective.gradient)(&w);
    let v = vec_ops::add_scaled(&w, -eta, &grad);
    // Projection: v - A^T (A A^T)^{-1} (A v + b).
    let aat = crate::kernel::gram(a, |row| row.to_vec());
    let residual = vec_ops::add_scaled(&a.matvec(&v), S::one(), b);
    let w2 = spd_solve(&aat, &residual)?;
    Ok(vec_ops::add_scaled(&v, -S::one(), &a.matvec_t(&w2)))
}

/// Componentwise `e^{-k_i t} h0_i`.
pub fn exponential_decay_reference<S: Scalar>(h0: &[S], k: &[S], t: S) -> Vec<S> {
    debug_assert!(t >= S::zero());
    h0.iter()
        .zip(k)
        .map(|(&h, &ki)| (-ki * t).exp() * h)
        .collect()
}

/// Upper envelope `e^{-2 mu t} * gap0` for the objective gap of a strongly
/// convex problem under the identity-metric flow.
pub fn strongly_convex_rate_reference<S: Scalar>(f0_gap: S, mu: S, t: S) -> S {
    debug_assert!(mu > S::zero() && f0_gap >= S::zero() && t >= S::zero());
    (-S::of(2.0) * mu * t).exp() * f0_gap
}
