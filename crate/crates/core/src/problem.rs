//! Optimization problem instances: objective, constraints, and the metric
//! operator that preconditions the primal flow.
//!
//! Instances are immutable after construction and cheap to clone (callables
//! are reference-counted), so one instance can back many concurrent runs. All
//! user-supplied callables must be pure: same input, same output, no hidden
//! mutable state. That contract is what makes repeated evaluation at one point
//! deterministic.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{
    default_step, finite_diff_jacobian, vec_ops, CholeskyFactor, DenseMatrix, DeterministicRng,
};
use crate::scalar::Scalar;

pub type ValueFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
pub type VectorFn<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;
pub type MatrixFn<S> = Arc<dyn Fn(&[S]) -> DenseMatrix<S> + Send + Sync>;

/// Smooth objective with first (and optionally second) derivatives.
#[derive(Clone)]
pub struct ObjectiveSpec<S> {
    pub dim: usize,
    pub value: ValueFn<S>,
    pub gradient: VectorFn<S>,
    pub hessian: Option<MatrixFn<S>>,
    pub known_lower_bound: Option<S>,
}

impl<S: Scalar> ObjectiveSpec<S> {
    pub fn new(dim: usize, value: ValueFn<S>, gradient: VectorFn<S>) -> Self {
        ObjectiveSpec {
            dim,
            value,
            gradient,
            hessian: None,
            known_lower_bound: None,
        }
    }

    pub fn with_hessian(mut self, hessian: MatrixFn<S>) -> Self {
        self.hessian = Some(hessian);
        self
    }

    pub fn with_lower_bound(mut self, bound: S) -> Self {
        self.known_lower_bound = Some(bound);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Equality,
    Inequality,
}

/// Vector constraint `h` with Jacobian; interpreted as `h(x) = 0` or
/// `h(x) <= 0` depending on `kind`. `count == 0` is allowed and turns the
/// dynamics into plain preconditioned gradient flow.
#[derive(Clone)]
pub struct ConstraintSpec<S> {
    pub count: usize,
    pub value: VectorFn<S>,
    pub jacobian: MatrixFn<S>,
    pub kind: ConstraintKind,
}

impl<S: Scalar> ConstraintSpec<S> {
    pub fn new(count: usize, kind: ConstraintKind, value: VectorFn<S>, jacobian: MatrixFn<S>) -> Self {
        ConstraintSpec {
            count,
            value,
            jacobian,
            kind,
        }
    }

    /// Unconstrained problem placeholder (`m = 0`).
    pub fn none(dim: usize) -> Self {
        ConstraintSpec {
            count: 0,
            value: Arc::new(|_| Vec::new()),
            jacobian: Arc::new(move |_| DenseMatrix::zeros(0, dim)),
            kind: ConstraintKind::Equality,
        }
    }
}

/// The positive definite preconditioner `T(x)`.
#[derive(Clone)]
pub enum MetricVariant<S> {
    Identity,
    /// `T(x) = (hess f(x))^{-1}`, applied by symmetric solve; the Hessian is
    /// factored once per evaluation point and never inverted explicitly.
    InverseHessian,
    Custom(MatrixFn<S>),
}

/// Metric with user-declared spectral bounds `lambda_min I <= T <= lambda_max I`.
///
/// The bounds are declarative: the flow never needs them, but
/// [`MetricSpec::spot_check`] verifies them at sampled points and analysis
/// constants reference them.
#[derive(Clone)]
pub struct MetricSpec<S> {
    pub variant: MetricVariant<S>,
    pub lambda_min: S,
    pub lambda_max: S,
}

impl<S: Scalar> MetricSpec<S> {
    pub fn identity() -> Self {
        MetricSpec {
            variant: MetricVariant::Identity,
            lambda_min: S::one(),
            lambda_max: S::one(),
        }
    }

    /// Inverse-Hessian metric with loose default bounds; callers that know
    /// the conditioning of their Hessian should declare tighter ones.
    pub fn inverse_hessian() -> Self {
        MetricSpec {
            variant: MetricVariant::InverseHessian,
            lambda_min: S::of(1e-12),
            lambda_max: S::of(1e12),
        }
    }

    pub fn custom(f: MatrixFn<S>, lambda_min: S, lambda_max: S) -> Self {
        MetricSpec {
            variant: MetricVariant::Custom(f),
            lambda_min,
            lambda_max,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.variant, MetricVariant::Identity)
    }

    /// Resolves the metric at a point. For `InverseHessian` this factors the
    /// Hessian once; applications afterwards are triangular solves.
    pub fn at(&self, objective: &ObjectiveSpec<S>, x: &[S]) -> Result<MetricAt<S>> {
        match &self.variant {
            MetricVariant::Identity => Ok(MetricAt::Identity),
            MetricVariant::InverseHessian => {
                let hessian_fn = objective.hessian.as_ref().ok_or(Error::HessianUnavailable)?;
                let h = hessian_fn(x);
                if !h.is_finite() {
                    return Err(Error::NonFiniteEvaluation { field: "hessian" });
                }
                if h.rows() != objective.dim || h.cols() != objective.dim {
                    return Err(Error::DimensionMismatch {
                        what: "hessian",
                        expected: objective.dim,
                        got: h.rows(),
                    });
                }
                let factor = CholeskyFactor::new_with_jitter(&h, "inverse-Hessian metric")?;
                Ok(MetricAt::InverseHessian(factor))
            }
            MetricVariant::Custom(f) => {
                let t = f(x);
                if !t.is_finite() {
                    return Err(Error::NonFiniteEvaluation { field: "metric" });
                }
                Ok(MetricAt::Dense(t))
            }
        }
    }

    /// Verifies the declared spectral bounds by Rayleigh quotients on random
    /// directions at the given points, within a `1e-8` relative slack.
    pub fn spot_check(
        &self,
        objective: &ObjectiveSpec<S>,
        points: &[Vec<S>],
        rng: &mut DeterministicRng,
    ) -> Result<bool> {
        let slack = S::of(1e-8);
        for x in points {
            let at = self.at(objective, x)?;
            for _ in 0..8 {
                let v: Vec<S> = rng.normal_vec(objective.dim);
                let denom = vec_ops::dot(&v, &v);
                if denom == S::zero() {
                    continue;
                }
                let tv = at.apply(&v);
                let quotient = vec_ops::dot(&v, &tv) / denom;
                if quotient < self.lambda_min * (S::one() - slack) - slack
                    || quotient > self.lambda_max * (S::one() + slack) + slack
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Metric resolved at one evaluation point.
pub enum MetricAt<S> {
    Identity,
    InverseHessian(CholeskyFactor<S>),
    Dense(DenseMatrix<S>),
}

impl<S: Scalar> MetricAt<S> {
    /// Applies `T(x)` to a vector.
    pub fn apply(&self, v: &[S]) -> Vec<S> {
        match self {
            MetricAt::Identity => v.to_vec(),
            MetricAt::InverseHessian(factor) => factor.solve(v),
            MetricAt::Dense(t) => t.matvec(v),
        }
    }
}

/// Applies `T(x) v` through a fresh metric resolution. Prefer
/// [`MetricSpec::at`] plus [`MetricAt::apply`] when several vectors share one
/// evaluation point.
pub fn metric_apply<S: Scalar>(
    metric: &MetricSpec<S>,
    objective: &ObjectiveSpec<S>,
    x: &[S],
    v: &[S],
) -> Result<Vec<S>> {
    if v.len() != objective.dim {
        return Err(Error::DimensionMismatch {
            what: "metric_apply vector",
            expected: objective.dim,
            got: v.len(),
        });
    }
    Ok(metric.at(objective, x)?.apply(v))
}

/// A complete problem instance.
#[derive(Clone)]
pub struct ProblemInstance<S> {
    pub name: String,
    pub objective: ObjectiveSpec<S>,
    pub constraints: ConstraintSpec<S>,
    pub metric: MetricSpec<S>,
}

impl<S: Scalar> ProblemInstance<S> {
    pub fn new(
        name: impl Into<String>,
        objective: ObjectiveSpec<S>,
        constraints: ConstraintSpec<S>,
        metric: MetricSpec<S>,
    ) -> Self {
        ProblemInstance {
            name: name.into(),
            objective,
            constraints,
            metric,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.count
    }

    pub fn kind(&self) -> ConstraintKind {
        self.constraints.kind
    }

    pub fn with_metric(mut self, metric: MetricSpec<S>) -> Self {
        self.metric = metric;
        self
    }
}

/// All per-point quantities the dynamics need, computed in one pass.
#[derive(Debug, Clone)]
pub struct EvalRecord<S> {
    pub x: Vec<S>,
    pub f: S,
    pub grad_f: Vec<S>,
    pub h: Vec<S>,
    pub jac_h: DenseMatrix<S>,
}

/// Evaluates objective value, gradient, constraint values, and constraint
/// Jacobian at `x`. Callers make one call per integrator stage and reuse the
/// record for every quantity at that point.
pub fn evaluate<S: Scalar>(problem: &ProblemInstance<S>, x: &[S]) -> Result<EvalRecord<S>> {
    let n = problem.dim();
    let m = problem.constraint_count();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "evaluation point",
            expected: n,
            got: x.len(),
        });
    }
    let f = (problem.objective.value)(x);
    if !f.is_finite() {
        return Err(Error::NonFiniteEvaluation { field: "objective" });
    }
    let grad_f = (problem.objective.gradient)(x);
    if grad_f.len() != n {
        return Err(Error::DimensionMismatch {
            what: "gradient",
            expected: n,
            got: grad_f.len(),
        });
    }
    if !vec_ops::all_finite(&grad_f) {
        return Err(Error::NonFiniteEvaluation { field: "gradient" });
    }
    let h = (problem.constraints.value)(x);
    if h.len() != m {
        return Err(Error::DimensionMismatch {
            what: "constraint value",
            expected: m,
            got: h.len(),
        });
    }
    if !vec_ops::all_finite(&h) {
        return Err(Error::NonFiniteEvaluation { field: "constraint" });
    }
    let jac_h = (problem.constraints.jacobian)(x);
    if jac_h.rows() != m || jac_h.cols() != n {
        return Err(Error::DimensionMismatch {
            what: "constraint jacobian",
            expected: m * n,
            got: jac_h.rows() * jac_h.cols(),
        });
    }
    if !jac_h.is_finite() {
        return Err(Error::NonFiniteEvaluation {
            field: "constraint jacobian",
        });
    }
    Ok(EvalRecord {
        x: x.to_vec(),
        f,
        grad_f,
        h,
        jac_h,
    })
}

/// One field of a derivative validation report.
#[derive(Debug, Clone)]
pub struct FieldCheck {
    pub field: &'static str,
    pub max_rel_error: f64,
    pub pass: bool,
    pub skipped: Option<&'static str>,
}

/// Report from [`validate_derivatives`].
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub samples: usize,
    pub fields: Vec<FieldCheck>,
}

impl DerivativeReport {
    pub fn pass(&self) -> bool {
        self.fields.iter().all(|f| f.pass)
    }
}

const DERIVATIVE_PASS_THRESHOLD: f64 = 1e-4;

/// Checks user-supplied gradient, constraint Jacobian, and Hessian (when
/// present) against central finite differences at `samples` standard normal
/// points. The per-field error is `max |fd - analytic| / (1 + max |analytic|)`.
pub fn validate_derivatives<S: Scalar>(
    problem: &ProblemInstance<S>,
    samples: usize,
    rng: &mut DeterministicRng,
) -> Result<DerivativeReport> {
    assert!(samples >= 1, "need at least one sample point");
    let n = problem.dim();
    let mut grad_err = 0.0f64;
    let mut jac_err = 0.0f64;
    let mut hess_err = 0.0f64;

    for _ in 0..samples {
        let x: Vec<S> = rng.normal_vec(n);
        let h_step = default_step(&x);

        let value = &problem.objective.value;
        let fd_grad = finite_diff_jacobian(|p| Ok(vec![value(p)]), &x, h_step)?;
        let grad = (problem.objective.gradient)(&x);
        grad_err = grad_err.max(matrix_rel_error(
            &fd_grad,
            &DenseMatrix::from_rows(&[grad.clone()])?,
        ));

        if problem.constraint_count() > 0 {
            let hval = &problem.constraints.value;
            let fd_jac = finite_diff_jacobian(|p| Ok(hval(p)), &x, h_step)?;
            let jac = (problem.constraints.jacobian)(&x);
            jac_err = jac_err.max(matrix_rel_error(&fd_jac, &jac));
        }

        if let Some(hessian) = &problem.objective.hessian {
            let gradient = &problem.objective.gradient;
            let fd_hess = finite_diff_jacobian(|p| Ok(gradient(p)), &x, h_step)?;
            hess_err = hess_err.max(matrix_rel_error(&fd_hess, &hessian(&x)));
        }
    }

    let mut fields = vec![FieldCheck {
        field: "gradient",
        max_rel_error: grad_err,
        pass: grad_err <= DERIVATIVE_PASS_THRESHOLD,
        skipped: None,
    }];
    if problem.constraint_count() > 0 {
        fields.push(FieldCheck {
            field: "jacobian",
            max_rel_error: jac_err,
            pass: jac_err <= DERIVATIVE_PASS_THRESHOLD,
            skipped: None,
        });
    } else {
        fields.push(FieldCheck {
            field: "jacobian",
            max_rel_error: 0.0,
            pass: true,
            skipped: Some("no constraints (m = 0)"),
        });
    }
    if problem.objective.hessian.is_some() {
        fields.push(FieldCheck {
            field: "hessian",
            max_rel_error: hess_err,
            pass: hess_err <= DERIVATIVE_PASS_THRESHOLD,
            skipped: None,
        });
    } else {
        fields.push(FieldCheck {
            field: "hessian",
            max_rel_error: 0.0,
            pass: true,
            skipped: Some("not provided"),
        });
    }
    Ok(DerivativeReport { samples, fields })
}

fn matrix_rel_error<S: Scalar>(fd: &DenseMatrix<S>, analytic: &DenseMatrix<S>) -> f64 {
    let mut diff = S::zero();
    for i in 0..fd.rows() {
        for j in 0..fd.cols() {
            diff = diff.max((fd[(i, j)] - analytic[(i, j)]).abs());
        }
    }
    (diff / (S::one() + analytic.max_abs())).as_f64()
}

/// Convenience constructor for `f(x) = 1/2 ||x||^2` style quadratic tests.
#[cfg(test)]
pub(crate) fn half_norm_squared<S: Scalar>(dim: usize) -> ObjectiveSpec<S> {
    ObjectiveSpec::new(
        dim,
        Arc::new(|x: &[S]| vec_ops::dot(x, x) * S::of(0.5)),
        Arc::new(|x: &[S]| x.to_vec()),
    )
    .with_hessian(Arc::new(move |_| DenseMatrix::identity(dim)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_constraint(coeffs: Vec<f64>, offset: f64) -> ConstraintSpec<f64> {
        let c2 = coeffs.clone();
        ConstraintSpec::new(
            1,
            ConstraintKind::Equality,
            Arc::new(move |x: &[f64]| vec![vec_ops::dot(&coeffs, x) + offset]),
            Arc::new(move |_: &[f64]| DenseMatrix::from_rows(&[c2.clone()]).unwrap()),
        )
    }

    fn unit_problem() -> ProblemInstance<f64> {
        ProblemInstance::new(
            "test",
            half_norm_squared(2),
            line_constraint(vec![1.0, 0.0], -1.0),
            MetricSpec::identity(),
        )
    }

    #[test]
    fn evaluate_basic_quadratic() {
        let p = unit_problem();
        let rec = evaluate(&p, &[1.0, 0.0]).unwrap();
        assert_eq!(rec.f, 0.5);
        assert_eq!(rec.grad_f, vec![1.0, 0.0]);
        assert_eq!(rec.h, vec![0.0]);
        assert_eq!(rec.jac_h.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn evaluate_is_deterministic() {
        let p = unit_problem();
        let a = evaluate(&p, &[0.3, -0.7]).unwrap();
        let b = evaluate(&p, &[0.3, -0.7]).unwrap();
        assert_eq!(a.f.to_bits(), b.f.to_bits());
        assert_eq!(a.grad_f, b.grad_f);
        assert_eq!(a.h, b.h);
    }

    #[test]
    fn evaluate_rejects_non_finite() {
        let mut p = unit_problem();
        p.objective.value = Arc::new(|_| f64::NAN);
        assert_eq!(
            evaluate(&p, &[0.0, 0.0]).unwrap_err().kind(),
            "NonFiniteEvaluation"
        );
    }

    #[test]
    fn metric_apply_identity_and_inverse_hessian() {
        let p = unit_problem();
        let v = metric_apply(&p.metric, &p.objective, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(v, vec![1.0, 2.0]);

        // Hessian = I, so the inverse-Hessian metric is also the identity.
        let v = metric_apply(
            &MetricSpec::inverse_hessian(),
            &p.objective,
            &[0.0, 0.0],
            &[3.0, 4.0],
        )
        .unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_hessian_diagonal_solve() {
        // f = x1^2 + 2 x2^2, Hessian diag(2, 4): T(2, 4) = (1, 1).
        let obj = ObjectiveSpec::new(
            2,
            Arc::new(|x: &[f64]| x[0] * x[0] + 2.0 * x[1] * x[1]),
            Arc::new(|x: &[f64]| vec![2.0 * x[0], 4.0 * x[1]]),
        )
        .with_hessian(Arc::new(|_| DenseMatrix::diag(&[2.0, 4.0])));
        let v = metric_apply(&MetricSpec::inverse_hessian(), &obj, &[0.5, 0.5], &[2.0, 4.0])
            .unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_hessian_satisfies_identity() {
        // hess * T v = v to 1e-8 relative.
        let obj = ObjectiveSpec::new(
            2,
            Arc::new(|x: &[f64]| x[0] * x[0] + 2.0 * x[1] * x[1] + 0.5 * x[0] * x[1]),
            Arc::new(|x: &[f64]| vec![2.0 * x[0] + 0.5 * x[1], 4.0 * x[1] + 0.5 * x[0]]),
        )
        .with_hessian(Arc::new(|_| {
            DenseMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 4.0]]).unwrap()
        }));
        let hess = obj.hessian.as_ref().unwrap()(&[0.0, 0.0]);
        let v = vec![0.7, -1.3];
        let tv = metric_apply(&MetricSpec::inverse_hessian(), &obj, &[0.0, 0.0], &v).unwrap();
        let back = hess.matvec(&tv);
        let err = vec_ops::norm2(&vec_ops::sub(&back, &v)) / vec_ops::norm2(&v);
        assert!(err < 1e-8, "round trip error {err}");
    }

    #[test]
    fn hessian_required_for_newton_metric() {
        let obj = ObjectiveSpec::<f64>::new(
            1,
            Arc::new(|x: &[f64]| x[0]),
            Arc::new(|_: &[f64]| vec![1.0]),
        );
        let err = metric_apply(&MetricSpec::inverse_hessian(), &obj, &[0.0], &[1.0]).unwrap_err();
        assert_eq!(err.kind(), "HessianUnavailable");
    }

    #[test]
    fn indefinite_hessian_is_rejected() {
        let obj = ObjectiveSpec::new(
            1,
            Arc::new(|x: &[f64]| -x[0] * x[0]),
            Arc::new(|x: &[f64]| vec![-2.0 * x[0]]),
        )
        .with_hessian(Arc::new(|_| DenseMatrix::diag(&[-2.0])));
        let err = metric_apply(&MetricSpec::inverse_hessian(), &obj, &[0.0], &[1.0]).unwrap_err();
        assert_eq!(err.kind(), "NotPositiveDefinite");
    }

    #[test]
    fn validate_derivatives_accepts_exact_quadratic() {
        let p = unit_problem();
        let mut rng = DeterministicRng::new(11);
        let report = validate_derivatives(&p, 5, &mut rng).unwrap();
        assert!(report.pass());
        assert!(report.fields[0].max_rel_error <= 1e-6);
    }

    #[test]
    fn validate_derivatives_flags_scaled_gradient() {
        let mut p = unit_problem();
        p.objective.gradient = Arc::new(|x: &[f64]| x.iter().map(|v| 2.0 * v).collect());
        let mut rng = DeterministicRng::new(11);
        let report = validate_derivatives(&p, 5, &mut rng).unwrap();
        let grad = report.fields.iter().find(|f| f.field == "gradient").unwrap();
        assert!(!grad.pass);
    }

    #[test]
    fn validate_derivatives_skips_empty_constraints() {
        let p = ProblemInstance::new(
            "unconstrained",
            half_norm_squared::<f64>(3),
            ConstraintSpec::none(3),
            MetricSpec::identity(),
        );
        let mut rng = DeterministicRng::new(2);
        let report = validate_derivatives(&p, 3, &mut rng).unwrap();
        let jac = report.fields.iter().find(|f| f.field == "jacobian").unwrap();
        assert!(jac.pass && jac.skipped.is_some());
    }

    #[test]
    fn spot_check_identity_bounds() {
        let p = unit_problem();
        let mut rng = DeterministicRng::new(5);
        let points = vec![vec![0.1, 0.2], vec![-1.0, 3.0]];
        assert!(p
            .metric
            .spot_check(&p.objective, &points, &mut rng)
            .unwrap());
    }
}
