//! Right-hand sides of the feedback-linearized optimization flows.
//!
//! All variants share the primal form `x_dot = -T(x)(grad_f + J^T lambda)` and
//! differ in how the multiplier closes the loop on the constraint output
//! `y = h(x)`:
//!
//! * equality: closed-form `lambda` placing `y_dot = -K y`;
//! * inequality: `lambda` from the nonnegative QP, which yields
//!   `y_dot = -K y - s` with complementary slack `s`;
//! * momentum: second-order dynamics `x_dot = z`,
//!   `z_dot = -alpha z - (grad_f + J^T lambda)` with the identity metric;
//! * PI: proportional-integral regulation `-(K_p y + K_i int y)` through an
//!   exact or diagonal-approximate Gram inverse, identity metric.
//!
//! The inequality field is discontinuous in `x` (the multiplier is an argmin);
//! it is evaluated pointwise here and any nonsmoothness handling is left to
//! the integrator.

use crate::error::{Error, Result};
use crate::kernel::{gram, spd_solve, vec_ops, DenseMatrix};
use crate::multiplier::{equality_multiplier, nnqp_solve, MultiplierSolution};
use crate::problem::{evaluate, ConstraintKind, EvalRecord, MetricAt, ProblemInstance};
use crate::scalar::Scalar;

/// Diagonal control gains for the constraint loop plus momentum/PI parameters.
#[derive(Debug, Clone)]
pub struct GainConfig<S> {
    /// Proportional gains `k_i > 0`, length `m`.
    pub k: Vec<S>,
    /// Momentum damping `alpha >= 0`.
    pub alpha: S,
    /// PI proportional gains, length `m`.
    pub kp: Vec<S>,
    /// PI integral gains, length `m`; zeros degrade PI to proportional.
    pub ki: Vec<S>,
}

impl<S: Scalar> GainConfig<S> {
    pub fn uniform(m: usize, k: S) -> Self {
        GainConfig {
            k: vec![k; m],
            alpha: S::zero(),
            kp: vec![k; m],
            ki: vec![S::zero(); m],
        }
    }

    pub fn with_alpha(mut self, alpha: S) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_pi(mut self, kp: Vec<S>, ki: Vec<S>) -> Self {
        self.kp = kp;
        self.ki = ki;
        self
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        for (strict, v) in [(true, &self.k), (true, &self.kp), (false, &self.ki)] {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "gain vector",
                    expected: m,
                    got: v.len(),
                });
            }
            for &g in v.iter() {
                if !g.is_finite() || g < S::zero() || (strict && g == S::zero()) {
                    return Err(Error::MethodMismatch("gains must be positive (ki >= 0)"));
                }
            }
        }
        if self.alpha < S::zero() || !self.alpha.is_finite() {
            return Err(Error::MethodMismatch("alpha must be nonnegative"));
        }
        Ok(())
    }
}

/// Time derivative of the solver state at one point.
#[derive(Debug, Clone)]
pub struct Derivative<S> {
    pub x_dot: Vec<S>,
    /// Present only for momentum dynamics.
    pub z_dot: Option<Vec<S>>,
    /// Present only for PI dynamics (`xi_dot = h(x)`).
    pub xi_dot: Option<Vec<S>>,
    pub multiplier: MultiplierSolution<S>,
}

/// How the PI variant applies `(J J^T)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMode {
    Exact,
    DiagonalApprox,
}

fn primal_flow<S: Scalar>(eval: &EvalRecord<S>, metric: &MetricAt<S>, lambda: &[S]) -> Vec<S> {
    let pulled = if lambda.is_empty() {
        eval.grad_f.clone()
    } else {
        vec_ops::add_scaled(&eval.grad_f, S::one(), &eval.jac_h.matvec_t(lambda))
    };
    vec_ops::neg(&metric.apply(&pulled))
}

/// Equality-constrained flow: `x_dot = -T(x)(grad_f + J^T lambda)` with the
/// closed-form multiplier. Satisfies `J x_dot = -K h` by construction.
pub fn fl_equality_rhs<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    x: &[S],
) -> Result<Derivative<S>> {
    let eval = evaluate(problem, x)?;
    fl_equality_rhs_at(problem, gains, &eval)
}

pub fn fl_equality_rhs_at<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    eval: &EvalRecord<S>,
) -> Result<Derivative<S>> {
    let metric = problem.metric.at(&problem.objective, &eval.x)?;
    let multiplier = if problem.constraint_count() == 0 {
        MultiplierSolution::empty()
    } else {
        equality_multiplier(eval, &metric, &gains.k)?
    };
    let x_dot = primal_flow(eval, &metric, &multiplier.lambda);
    Ok(Derivative {
        x_dot,
        z_dot: None,
        xi_dot: None,
        multiplier,
    })
}

/// Inequality-constrained flow: the multiplier minimizes the nonnegative QP
/// with `G = J T J^T` and `c = J T grad_f - K h`, after which
/// `J x_dot = -K h - s`.
pub fn fl_inequality_rhs<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    x: &[S],
) -> Result<Derivative<S>> {
    let eval = evaluate(problem, x)?;
    fl_inequality_rhs_at(problem, gains, &eval)
}

pub fn fl_inequality_rhs_at<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    eval: &EvalRecord<S>,
) -> Result<Derivative<S>> {
    let metric = problem.metric.at(&problem.objective, &eval.x)?;
    let multiplier = if problem.constraint_count() == 0 {
        MultiplierSolution::empty()
    } else {
        let g = gram(&eval.jac_h, |v| metric.apply(v));
        let t_grad = metric.apply(&eval.grad_f);
        let j_t_grad = eval.jac_h.matvec(&t_grad);
        let c: Vec<S> = (0..eval.h.len())
            .map(|i| j_t_grad[i] - gains.k[i] * eval.h[i])
            .collect();
        nnqp_solve(&g, &c)?
    };
    let x_dot = primal_flow(eval, &metric, &multiplier.lambda);
    Ok(Derivative {
        x_dot,
        z_dot: None,
        xi_dot: None,
        multiplier,
    })
}

/// Momentum flow `x_dot = z`, `z_dot = -alpha z - (grad_f + J^T lambda)`.
///
/// Defined with the identity metric only; the multiplier uses `G = J J^T`
/// (closed form for equality constraints, nonnegative QP for inequality).
pub fn fl_momentum_rhs<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    x: &[S],
    z: &[S],
) -> Result<Derivative<S>> {
    let eval = evaluate(problem, x)?;
    fl_momentum_rhs_at(problem, gains, &eval, z)
}

pub fn fl_momentum_rhs_at<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    eval: &EvalRecord<S>,
    z: &[S],
) -> Result<Derivative<S>> {
    if !problem.metric.is_identity() {
        return Err(Error::MetricNotIdentity);
    }
    if z.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            what: "momentum state",
            expected: problem.dim(),
            got: z.len(),
        });
    }
    let metric = MetricAt::Identity;
    let multiplier = if problem.constraint_count() == 0 {
        MultiplierSolution::empty()
    } else {
        match problem.kind() {
            ConstraintKind::Equality => equality_multiplier(eval, &metric, &gains.k)?,
            ConstraintKind::Inequality => {
                let g = gram(&eval.jac_h, |v| v.to_vec());
                let j_grad = eval.jac_h.matvec(&eval.grad_f);
                let c: Vec<S> = (0..eval.h.len())
                    .map(|i| j_grad[i] - gains.k[i] * eval.h[i])
                    .collect();
                nnqp_solve(&g, &c)?
            }
        }
    };
    let pulled = if multiplier.lambda.is_empty() {
        eval.grad_f.clone()
    } else {
        vec_ops::add_scaled(
            &eval.grad_f,
            S::one(),
            &eval.jac_h.matvec_t(&multiplier.lambda),
        )
    };
    let z_dot: Vec<S> = z
        .iter()
        .zip(&pulled)
        .map(|(&zi, &gi)| -gains.alpha * zi - gi)
        .collect();
    Ok(Derivative {
        x_dot: z.to_vec(),
        z_dot: Some(z_dot),
        xi_dot: None,
        multiplier,
    })
}

/// Diagonal approximation of `(J J^T)^{-1}`: the reciprocal diagonal of the
/// Gram matrix as a vector of entries.
pub fn approx_inverse_diag<S: Scalar>(j: &DenseMatrix<S>) -> Result<Vec<S>> {
    let m = j.rows();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let d = vec_ops::dot(j.row(i), j.row(i));
        if d <= S::of(1e-14) {
            return Err(Error::ZeroDiagonal { index: i });
        }
        out.push(S::one() / d);
    }
    Ok(out)
}

/// PI-regulated flow for equality constraints, identity metric:
/// `lambda = -F(x)(J grad_f - (K_p h + K_i xi))` where `F(x)` applies
/// `(J J^T)^{-1}` exactly or via the diagonal approximation, and
/// `xi_dot = h(x)` accumulates the constraint integral.
pub fn fl_pi_rhs<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    x: &[S],
    xi: &[S],
    mode: InverseMode,
) -> Result<Derivative<S>> {
    let eval = evaluate(problem, x)?;
    fl_pi_rhs_at(problem, gains, &eval, xi, mode)
}

pub fn fl_pi_rhs_at<S: Scalar>(
    problem: &ProblemInstance<S>,
    gains: &GainConfig<S>,
    eval: &EvalRecord<S>,
    xi: &[S],
    mode: InverseMode,
) -> Result<Derivative<S>> {
    if problem.kind() != ConstraintKind::Equality {
        return Err(Error::MethodMismatch(
            "PI dynamics are defined for equality constraints",
        ));
    }
    let m = problem.constraint_count();
    if xi.len() != m {
        return Err(Error::DimensionMismatch {
            what: "integral state",
            expected: m,
            got: xi.len(),
        });
    }
    let multiplier = if m == 0 {
        MultiplierSolution::empty()
    } else {
        let j_grad = eval.jac_h.matvec(&eval.grad_f);
        let target: Vec<S> = (0..m)
            .map(|i| j_grad[i] - (gains.kp[i] * eval.h[i] + gains.ki[i] * xi[i]))
            .collect();
        let lambda = match mode {
            InverseMode::Exact => {
                let g = gram(&eval.jac_h, |v| v.to_vec());
                vec_ops::neg(&spd_solve(&g, &target)?)
            }
            InverseMode::DiagonalApprox => {
                let f = approx_inverse_diag(&eval.jac_h)?;
                (0..m).map(|i| -f[i] * target[i]).collect()
            }
        };
        MultiplierSolution {
            active_set: lambda
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > S::zero())
                .map(|(i, _)| i)
                .collect(),
            slack: vec![S::zero(); m],
            kkt_residual: S::zero(),
            lambda,
        }
    };
    let pulled = if multiplier.lambda.is_empty() {
        eval.grad_f.clone()
    } else {
        vec_ops::add_scaled(
            &eval.grad_f,
            S::one(),
            &eval.jac_h.matvec_t(&multiplier.lambda),
        )
    };
    Ok(Derivative {
        x_dot: vec_ops::neg(&pulled),
        z_dot: None,
        xi_dot: Some(eval.h.clone()),
        multiplier,
    })
}
