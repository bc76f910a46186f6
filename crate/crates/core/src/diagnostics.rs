//! Convergence diagnostics: KKT gaps, least-squares multipliers, and merit
//! functions used as Lyapunov-style monitors along trajectories.

use crate::error::{Error, Result};
use crate::kernel::{default_step, finite_diff_jacobian, gram, spd_solve, vec_ops};
use crate::problem::{evaluate, ConstraintKind, EvalRecord, MetricAt, ProblemInstance};
use crate::scalar::Scalar;

/// Componentwise KKT violation measure.
///
/// `gap` is the max of the applicable components: stationarity
/// `||grad_f + J^T lambda||`, feasibility (`||h||_inf` for equality,
/// `max_i [h_i]_+` for inequality), and for inequality constraints the
/// complementarity `|lambda^T h|`.
#[derive(Debug, Clone, Copy)]
pub struct KktReport<S> {
    pub stationarity: S,
    pub feasibility: S,
    pub complementarity: S,
    pub gap: S,
}

pub fn kkt_gap<S: Scalar>(
    eval: &EvalRecord<S>,
    lambda: &[S],
    kind: ConstraintKind,
) -> Result<KktReport<S>> {
    let m = eval.h.len();
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            what: "multiplier",
            expected: m,
            got: lambda.len(),
        });
    }
    if kind == ConstraintKind::Inequality {
        for &l in lambda {
            if l < S::of(-1e-10) {
                return Err(Error::MethodMismatch(
                    "inequality KKT gap needs a nonnegative multiplier",
                ));
            }
        }
    }
    let stationarity = if m == 0 {
        vec_ops::norm2(&eval.grad_f)
    } else {
        vec_ops::norm2(&vec_ops::add_scaled(
            &eval.grad_f,
            S::one(),
            &eval.jac_h.matvec_t(lambda),
        ))
    };
    let (feasibility, complementarity) = match kind {
        ConstraintKind::Equality => (vec_ops::norm_inf(&eval.h), S::zero()),
        ConstraintKind::Inequality => {
            let viol = eval
                .h
                .iter()
                .fold(S::zero(), |acc, &v| acc.max(v.max(S::zero())));
            (viol, vec_ops::dot(lambda, &eval.h).abs())
        }
    };
    Ok(KktReport {
        stationarity,
        feasibility,
        complementarity,
        gap: stationarity.max(feasibility).max(complementarity),
    })
}

/// Least-squares multiplier `-(J T J^T)^{-1} J T grad_f`, the gain-free limit
/// of the equality multiplier as `h -> 0`.
pub fn lambda_bar<S: Scalar>(eval: &EvalRecord<S>, metric: &MetricAt<S>) -> Result<Vec<S>> {
    let m = eval.jac_h.rows();
    if m == 0 {
        return Ok(Vec::new());
    }
    let g = gram(&eval.jac_h, |v| metric.apply(v));
    let t_grad = metric.apply(&eval.grad_f);
    let rhs = eval.jac_h.matvec(&t_grad);
    Ok(vec_ops::neg(&spd_solve(&g, &rhs)?))
}

/// Absolute-value penalty merit `f + rho * sum_i |h_i|` for equality runs.
pub fn merit_equality<S: Scalar>(eval: &EvalRecord<S>, rho: S) -> S {
    debug_assert!(rho > S::zero());
    eval.f + rho * eval.h.iter().map(|&v| v.abs()).sum::<S>()
}

/// Hinge penalty merit `f + l * sum_i max(h_i, 0)` for inequality runs.
pub fn merit_inequality<S: Scalar>(eval: &EvalRecord<S>, l: S) -> S {
    debug_assert!(l > S::zero());
    eval.f + l * eval.h.iter().map(|&v| v.max(S::zero())).sum::<S>()
}

/// Merit for the momentum dynamics (equality constraints, identity metric):
///
/// ```text
/// l(x, z) = a1 alpha f + (a2 alpha / 2) ||h||^2 + a1 alpha lbar^T h
///           + 1/2 ||z||^2
///           + (a1 grad_f + a2 J^T h + a1 J^T lbar + a1 (d lbar/dx)^T h)^T z
/// ```
///
/// with `lbar(x) = -(J J^T)^{-1} J grad_f` and its Jacobian taken by central
/// finite differences. The kinetic term is `1/2 ||z||^2`: that is the
/// combination whose time derivative is provably nonpositive for damping
/// above the analysis threshold.
pub fn momentum_merit<S: Scalar>(
    problem: &ProblemInstance<S>,
    x: &[S],
    z: &[S],
    a1: S,
    a2: S,
    alpha: S,
) -> Result<S> {
    if problem.kind() != ConstraintKind::Equality {
        return Err(Error::MethodMismatch(
            "momentum merit is defined for equality constraints",
        ));
    }
    debug_assert!(a1 > S::zero() && a2 > S::zero() && alpha > S::zero());
    let eval = evaluate(problem, x)?;
    let lbar = lambda_bar(&eval, &MetricAt::Identity)?;
    let dlbar_dx = finite_diff_jacobian(
        |p| {
            let e = evaluate(problem, p)?;
            lambda_bar(&e, &MetricAt::Identity)
        },
        x,
        default_step(x),
    )?;

    let half = S::of(0.5);
    let h_sq = vec_ops::dot(&eval.h, &eval.h);
    let mut value = a1 * alpha * eval.f
        + a2 * alpha * half * h_sq
        + a1 * alpha * vec_ops::dot(&lbar, &eval.h)
        + half * vec_ops::dot(z, z);

    // Cross term: (a1 grad_f + a2 J^T h + a1 J^T lbar + a1 (d lbar/dx)^T h)^T z.
    let mut w = vec_ops::scaled(&eval.grad_f, a1);
    w = vec_ops::add_scaled(&w, a2, &eval.jac_h.matvec_t(&eval.h));
    w = vec_ops::add_scaled(&w, a1, &eval.jac_h.matvec_t(&lbar));
    w = vec_ops::add_scaled(&w, a1, &dlbar_dx.matvec_t(&eval.h));
    value = value + vec_ops::dot(&w, z);
    Ok(value)
}
