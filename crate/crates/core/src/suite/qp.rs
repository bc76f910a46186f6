//! Quadratic-program instances: the serializable data form, the seeded random
//! generator, and the affine-equality variant with a stored optimum.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    least_norm_solution, lu_solve, min_eigenvalue_spd, spd_solve, vec_ops, DenseMatrix,
    DeterministicRng,
};
use crate::problem::{ConstraintKind, ConstraintSpec, MetricSpec, ObjectiveSpec, ProblemInstance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpConstraint {
    #[serde(rename = "eq")]
    Eq,
    #[serde(rename = "ineq")]
    Ineq,
}

impl QpConstraint {
    pub fn kind(self) -> ConstraintKind {
        match self {
            QpConstraint::Eq => ConstraintKind::Equality,
            QpConstraint::Ineq => ConstraintKind::Inequality,
        }
    }
}

/// On-disk form of a dense QP
/// `min 1/2 x^T Q x + c^T x  s.t.  A x + b = 0 (or <= 0)`.
///
/// Matrices are row-major arrays of arrays; dimensions are inferred from the
/// arrays and cross-checked by [`QpForm::validate`]. `Q` is symmetrized on
/// conversion so the gradient is exactly `Q x + c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpForm {
    pub kind: String,
    pub constraint: QpConstraint,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl QpForm {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != "qp" {
            return Err(Error::MethodMismatch("problem file kind must be \"qp\""));
        }
        let n = self.dim();
        if self.q.len() != n {
            return Err(Error::DimensionMismatch {
                what: "Q row count",
                expected: n,
                got: self.q.len(),
            });
        }
        for row in &self.q {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "Q row",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let m = self.constraint_count();
        if self.a.len() != m {
            return Err(Error::DimensionMismatch {
                what: "A row count",
                expected: m,
                got: self.a.len(),
            });
        }
        for row in &self.a {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "A row",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let finite = self.q.iter().chain(&self.a).flatten().all(|v| v.is_finite())
            && self.c.iter().all(|v| v.is_finite())
            && self.b.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFiniteEvaluation { field: "problem file" });
        }
        Ok(())
    }

    pub fn to_problem<S: Scalar>(&self, name: impl Into<String>) -> Result<ProblemInstance<S>> {
        self.validate()?;
        let n = self.dim();
        let m = self.constraint_count();
        let q = DenseMatrix::<S>::from_rows(
            &self
                .q
                .iter()
                .map(|row| row.iter().map(|&v| S::of(v)).collect())
                .collect::<Vec<_>>(),
        )?
        .symmetrized();
        let c: Vec<S> = self.c.iter().map(|&v| S::of(v)).collect();
        let a = DenseMatrix::<S>::from_rows(
            &self
                .a
                .iter()
                .map(|row| row.iter().map(|&v| S::of(v)).collect())
                .collect::<Vec<_>>(),
        )?;
        let b: Vec<S> = self.b.iter().map(|&v| S::of(v)).collect();

        let q_value = q.clone();
        let c_value = c.clone();
        let value = Arc::new(move |x: &[S]| {
            S::of(0.5) * vec_ops::dot(x, &q_value.matvec(x)) + vec_ops::dot(&c_value, x)
        });
        let q_grad = q.clone();
        let c_grad = c.clone();
        let gradient =
            Arc::new(move |x: &[S]| vec_ops::add_scaled(&q_grad.matvec(x), S::one(), &c_grad));
        let q_hess = q.clone();
        let hessian = Arc::new(move |_: &[S]| q_hess.clone());

        let a_value = a.clone();
        let b_value = b.clone();
        let cons_value =
            Arc::new(move |x: &[S]| vec_ops::add_scaled(&a_value.matvec(x), S::one(), &b_value));
        let a_jac = a.clone();
        let jacobian = Arc::new(move |_: &[S]| a_jac.clone());

        Ok(ProblemInstance::new(
            name,
            ObjectiveSpec::new(n, value, gradient).with_hessian(hessian),
            ConstraintSpec::new(m, self.constraint.kind(), cons_value, jacobian),
            MetricSpec::identity(),
        ))
    }
}

/// Deterministic reseed stride used when a drawn instance fails its
/// feasibility screen; substitutions are visible in the instance name.
const RESEED_STRIDE: u64 = 1_000_003;

/// Draws the raw QP data for one seed. Draw order (all standard normals
/// except the noted scaling): `R` row-major `n x n`, then `c` (`n`), then `A`
/// row-major `m x n` with rows rescaled to unit norm, then `b` (`m`);
/// `Q = R^T R + 0.1 I`, so the objective is strongly convex with parameter at
/// least `0.1` on every seed.
fn draw_qp(n: usize, m: usize, constraint: QpConstraint, seed: u64) -> QpForm {
    let mut rng = DeterministicRng::new(seed);
    let r = DenseMatrix::<f64>::from_fn(n, n, |_, _| rng.standard_normal());
    let mut q = r.transpose().matmul(&r);
    q.add_scaled_identity(0.1);
    let c: Vec<f64> = rng.normal_vec(n);
    let mut a_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row: Vec<f64> = rng.normal_vec(n);
        let norm = vec_ops::norm2(&row);
        if norm > 0.0 {
            for v in &mut row {
                *v /= norm;
            }
        }
        a_rows.push(row);
    }
    let b: Vec<f64> = rng.normal_vec(m);
    QpForm {
        kind: "qp".to_string(),
        constraint,
        q: (0..n).map(|i| q.row(i).to_vec()).collect(),
        c,
        a: a_rows,
        b,
    }
}

/// Screens a drawn instance: the constraint rows must admit a point with
/// `A x + b = 0` (which also witnesses feasibility of the inequality form).
fn qp_is_usable(form: &QpForm) -> bool {
    let a = DenseMatrix::<f64>::from_rows(
        &form.a.iter().cloned().collect::<Vec<_>>(),
    )
    .expect("validated rows");
    match least_norm_solution(&a, &form.b) {
        Ok(x) => {
            let r = vec_ops::add_scaled(&a.matvec(&x), 1.0, &form.b);
            vec_ops::norm_inf(&r) <= 1e-8
        }
        Err(_) => false,
    }
}

/// Seeded random QP data, resampling deterministically (seed + stride) on the
/// rare constraint-degenerate draw.
pub fn random_qp_form(n: usize, m: usize, constraint: QpConstraint, seed: u64) -> (QpForm, u64) {
    assert!(m >= 1 && m <= n, "need 1 <= m <= n");
    let mut effective = seed;
    loop {
        let form = draw_qp(n, m, constraint, effective);
        if qp_is_usable(&form) {
            return (form, effective);
        }
        effective = effective.wrapping_add(RESEED_STRIDE);
    }
}

/// Seeded random QP instance.
pub fn random_qp<S: Scalar>(
    n: usize,
    m: usize,
    constraint: QpConstraint,
    seed: u64,
) -> ProblemInstance<S> {
    let (form, effective) = random_qp_form(n, m, constraint, seed);
    let tag = match constraint {
        QpConstraint::Eq => "eq",
        QpConstraint::Ineq => "ineq",
    };
    let name = if effective == seed {
        format!("random_qp(n={n},m={m},{tag},seed={seed})")
    } else {
        format!("random_qp(n={n},m={m},{tag},seed={seed}->resampled:{effective})")
    };
    form.to_problem(name).expect("generated data is well-formed")
}

/// Strongly convex quadratic with affine equality constraints and a stored
/// closed-form optimum.
#[derive(Clone)]
pub struct AffineQp<S> {
    pub problem: ProblemInstance<S>,
    pub form: QpForm,
    pub x_star: Vec<S>,
    pub f_star: S,
    /// Strong-convexity parameter: the smallest eigenvalue of `Q`.
    pub mu: S,
    /// Least-norm point on the constraint set, handy as a feasible start.
    pub feasible_point: Vec<S>,
}

/// Builds the affine-equality instance for a seed. The optimum solves the
/// stationarity system `[[Q, A^T], [A, 0]] (x, nu) = (-c, -b)` assembled and
/// factored at construction.
pub fn affine_equality_quadratic<S: Scalar>(n: usize, m: usize, seed: u64) -> AffineQp<S> {
    assert!(m < n, "need m < n");
    let mut effective = seed;
    loop {
        let form = draw_qp(n, m, QpConstraint::Eq, effective);
        if let Some(built) = try_build_affine(n, m, seed, effective, &form) {
            return built;
        }
        effective = effective.wrapping_add(RESEED_STRIDE);
    }
}

fn try_build_affine<S: Scalar>(
    n: usize,
    m: usize,
    seed: u64,
    effective: u64,
    form: &QpForm,
) -> Option<AffineQp<S>> {
    let q = DenseMatrix::<f64>::from_rows(&form.q.to_vec()).ok()?;
    let a = DenseMatrix::<f64>::from_rows(&form.a.to_vec()).ok()?;
    let dim = n + m;
    let mut kkt = DenseMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = q[(i, j)];
        }
    }
    for i in 0..m {
        for j in 0..n {
            kkt[(n + i, j)] = a[(i, j)];
            kkt[(j, n + i)] = a[(i, j)];
        }
    }
    let rhs: Vec<f64> = form
        .c
        .iter()
        .map(|v| -v)
        .chain(form.b.iter().map(|v| -v))
        .collect();
    let sol = lu_solve(&kkt, &rhs, "affine qp optimum").ok()?;
    let x_star_f64 = &sol[..n];

    let feasible = least_norm_solution(&a, &form.b).ok()?;
    let mu = min_eigenvalue_spd(&q).ok()?;
    let unconstrained = spd_solve(&q, &vec_ops::neg(&form.c)).ok()?;
    let f_min_global = 0.5 * vec_ops::dot(&unconstrained, &q.matvec(&unconstrained))
        + vec_ops::dot(&form.c, &unconstrained);

    let name = if effective == seed {
        format!("affine_qp(n={n},m={m},seed={seed})")
    } else {
        format!("affine_qp(n={n},m={m},seed={seed}->resampled:{effective})")
    };
    let problem = form
        .to_problem::<S>(name)
        .ok()?;
    let problem = ProblemInstance {
        objective: problem.objective.clone().with_lower_bound(S::of(f_min_global)),
        ..problem
    };
    let f_star = 0.5 * vec_ops::dot(x_star_f64, &q.matvec(x_star_f64))
        + vec_ops::dot(&form.c, x_star_f64);
    Some(AffineQp {
        problem,
        form: form.clone(),
        x_star: x_star_f64.iter().map(|&v| S::of(v)).collect(),
        f_star: S::of(f_star),
        mu: S::of(mu),
        feasible_point: feasible.iter().map(|&v| S::of(v)).collect(),
    })
}
