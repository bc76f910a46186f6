//! Seeded, reproducible built-in test problems.
//!
//! Every generator is a pure function of its parameters and seed, and every
//! generated instance passes derivative validation. Generation always draws
//! in `f64` and converts, so instances agree across scalar types.

mod logistic;
mod qp;

use std::sync::Arc;

use crate::kernel::{vec_ops, DenseMatrix, DeterministicRng};
use crate::problem::{ConstraintKind, ConstraintSpec, MetricSpec, ObjectiveSpec, ProblemInstance};
use crate::scalar::Scalar;

pub use logistic::constrained_logistic;
pub use qp::{affine_equality_quadratic, random_qp, random_qp_form, AffineQp, QpConstraint, QpForm};

/// Linear objective on the unit sphere: `min c^T x  s.t.  ||x||^2 - 1 = 0`.
///
/// A genuinely nonconvex equality-constrained smoke test with known
/// stationary points `x = +-c` (the cost direction is drawn unit-norm).
#[derive(Clone)]
pub struct SphereInstance<S> {
    pub problem: ProblemInstance<S>,
    pub cost: Vec<S>,
}

pub fn sphere_equality<S: Scalar>(n: usize, seed: u64) -> SphereInstance<S> {
    assert!(n >= 2, "need n >= 2");
    let mut rng = DeterministicRng::new(seed);
    let mut cost_f64: Vec<f64> = rng.normal_vec(n);
    let norm = vec_ops::norm2(&cost_f64);
    for v in &mut cost_f64 {
        *v /= norm;
    }
    let cost: Vec<S> = cost_f64.iter().map(|&v| S::of(v)).collect();

    let c_value = cost.clone();
    let value = Arc::new(move |x: &[S]| vec_ops::dot(&c_value, x));
    let c_grad = cost.clone();
    let gradient = Arc::new(move |_: &[S]| c_grad.clone());
    let cons_value = Arc::new(|x: &[S]| vec![vec_ops::dot(x, x) - S::one()]);
    let jacobian = Arc::new(|x: &[S]| {
        DenseMatrix::from_fn(1, x.len(), |_, j| S::of(2.0) * x[j])
    });

    let problem = ProblemInstance::new(
        format!("sphere(n={n},seed={seed})"),
        ObjectiveSpec::new(n, value, gradient).with_lower_bound(-S::one()),
        ConstraintSpec::new(1, ConstraintKind::Equality, cons_value, jacobian),
        MetricSpec::identity(),
    );
    SphereInstance { problem, cost }
}
