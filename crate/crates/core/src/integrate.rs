//! Time integration of the constrained-optimization flows.
//!
//! Explicit Euler is the canonical discretization: with gains `K = I/dt` one
//! Euler step of the equality or inequality flow reproduces the corresponding
//! sequential-quadratic-programming step exactly. Classical fixed-step RK4 is
//! available for checks of continuous-time statements (exponential constraint
//! decay, linear convergence rates) whose tolerances an Euler discretization
//! would swamp. No adaptive stepping: traces must be deterministic.

use std::time::Instant;

use crate::diagnostics::{kkt_gap, merit_equality, merit_inequality};
use crate::dynamics::{
    fl_equality_rhs_at, fl_inequality_rhs_at, fl_momentum_rhs_at, fl_pi_rhs_at, Derivative,
    GainConfig, InverseMode,
};
use crate::error::{Error, Result};
use crate::kernel::vec_ops;
use crate::multiplier::equality_multiplier;
use crate::problem::{evaluate, ConstraintKind, MetricAt, MetricSpec, ProblemInstance};
use crate::scalar::Scalar;

/// Solver method. The proximal/Newton pair are the first-order flows with
/// identity and inverse-Hessian metrics; both dispatch on the problem's
/// constraint kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FlProximal,
    FlNewton,
    /// First-order inequality flow with the problem's own metric.
    FlInequality,
    FlMomentum,
    FlPiExact,
    FlPiDiag,
    /// Discrete extrapolation scheme; Euler only.
    MomentumSqp,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::FlProximal,
        Method::FlNewton,
        Method::FlInequality,
        Method::FlMomentum,
        Method::FlPiExact,
        Method::FlPiDiag,
        Method::MomentumSqp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::FlProximal => "fl-proximal",
            Method::FlNewton => "fl-newton",
            Method::FlInequality => "fl-ineq",
            Method::FlMomentum => "fl-momentum",
            Method::FlPiExact => "fl-pi-exact",
            Method::FlPiDiag => "fl-pi-diag",
            Method::MomentumSqp => "momentum-sqp",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.name() == name)
    }

    pub fn uses_momentum(&self) -> bool {
        matches!(self, Method::FlMomentum | Method::MomentumSqp)
    }

    pub fn uses_integral_state(&self) -> bool {
        matches!(self, Method::FlPiExact | Method::FlPiDiag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        match name {
            "euler" => Some(Scheme::Euler),
            "rk4" => Some(Scheme::Rk4),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub struct SolverConfig<S> {
    pub method: Method,
    pub scheme: Scheme,
    pub dt: S,
    pub max_steps: usize,
    pub gains: GainConfig<S>,
    /// Extrapolation weight in `[0, 1)`, used by `MomentumSqp` only.
    pub beta: S,
    pub stop_kkt_tol: S,
    pub record_every: usize,
    /// Merit penalty coefficient for the trace. Defaults: `1e3` for equality
    /// runs; for inequality runs the running `max ||lambda||_inf + 1`.
    pub merit_coeff: Option<S>,
}

impl<S: Scalar> SolverConfig<S> {
    pub fn new(method: Method, scheme: Scheme, dt: S, max_steps: usize, gains: GainConfig<S>) -> Self {
        SolverConfig {
            method,
            scheme,
            dt,
            max_steps,
            gains,
            beta: S::zero(),
            stop_kkt_tol: S::zero(),
            record_every: 1,
            merit_coeff: None,
        }
    }

    pub fn with_beta(mut self, beta: S) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_stop_tol(mut self, tol: S) -> Self {
        self.stop_kkt_tol = tol;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn with_merit_coeff(mut self, coeff: S) -> Self {
        self.merit_coeff = Some(coeff);
        self
    }

    pub fn validate(&self, problem: &ProblemInstance<S>) -> Result<()> {
        if !(self.dt > S::zero()) || !self.dt.is_finite() {
            return Err(Error::MethodMismatch("dt must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::MethodMismatch("max_steps must be at least 1"));
        }
        if self.beta < S::zero() || self.beta >= S::one() {
            return Err(Error::MethodMismatch("beta must lie in [0, 1)"));
        }
        if self.stop_kkt_tol < S::zero() {
            return Err(Error::MethodMismatch("stop tolerance must be nonnegative"));
        }
        self.gains.validate(problem.constraint_count())?;
        match self.method {
            Method::MomentumSqp => {
                if self.scheme != Scheme::Euler {
                    return Err(Error::MethodMismatch("momentum-sqp is a discrete scheme; use euler"));
                }
                if problem.kind() != ConstraintKind::Equality {
                    return Err(Error::MethodMismatch("momentum-sqp handles equality constraints"));
                }
            }
            Method::FlPiExact | Method::FlPiDiag => {
                if problem.kind() != ConstraintKind::Equality {
                    return Err(Error::MethodMismatch("PI methods handle equality constraints"));
                }
            }
            Method::FlInequality => {
                if problem.kind() != ConstraintKind::Inequality {
                    return Err(Error::MethodMismatch("fl-ineq needs inequality constraints"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Full integrator state. `z`, `xi`, and `x_prev` stay at their initial
/// values unless the method uses them.
#[derive(Debug, Clone)]
pub struct SolverState<S> {
    pub x: Vec<S>,
    pub z: Vec<S>,
    pub xi: Vec<S>,
    pub x_prev: Vec<S>,
    pub t: S,
    pub step: usize,
}

impl<S: Scalar> SolverState<S> {
    pub fn new(problem: &ProblemInstance<S>, x0: &[S]) -> Self {
        SolverState {
            x: x0.to_vec(),
            z: vec![S::zero(); problem.dim()],
            xi: vec![S::zero(); problem.constraint_count()],
            x_prev: x0.to_vec(),
            t: S::zero(),
            step: 0,
        }
    }

    fn is_finite(&self) -> bool {
        vec_ops::all_finite(&self.x) && vec_ops::all_finite(&self.z) && vec_ops::all_finite(&self.xi)
    }
}

/// One recorded diagnostic row.
#[derive(Debug, Clone)]
pub struct TrajectoryRow<S> {
    pub step: usize,
    pub t: S,
    pub f: S,
    pub kkt_gap: S,
    pub merit: S,
    pub max_violation: S,
    pub lambda_inf_norm: S,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxSteps,
    Diverged,
    Error(Error),
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::Converged => write!(f, "Converged"),
            StopReason::MaxSteps => write!(f, "MaxSteps"),
            StopReason::Diverged => write!(f, "Diverged"),
            StopReason::Error(e) => write!(f, "Error({})", e.kind()),
        }
    }
}

impl StopReason {
    /// Whether the run ended in a state the caller can use.
    pub fn is_ok(&self) -> bool {
        matches!(self, StopReason::Converged | StopReason::MaxSteps)
    }
}

#[derive(Debug, Clone)]
pub struct TraceSummary<S> {
    pub stop_reason: StopReason,
    pub steps_taken: usize,
    pub final_kkt_gap: S,
    pub best_kkt_gap: S,
    pub best_step: usize,
    /// Constraint violation at the best-gap iterate.
    pub best_max_violation: S,
    /// Largest multiplier infinity norm seen over the run.
    pub max_lambda_inf: S,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryTrace<S> {
    pub rows: Vec<TrajectoryRow<S>>,
    pub summary: TraceSummary<S>,
}

/// Metric the method works in: proximal and Newton override the problem's
/// declared metric, everything else uses the problem as configured.
fn effective_problem<S: Scalar>(problem: &ProblemInstance<S>, method: Method) -> ProblemInstance<S> {
    match method {
        Method::FlProximal => problem.clone().with_metric(MetricSpec::identity()),
        Method::FlNewton => problem.clone().with_metric(MetricSpec::inverse_hessian()),
        _ => problem.clone(),
    }
}

fn rhs_at_point<S: Scalar>(
    problem: &ProblemInstance<S>,
    config: &SolverConfig<S>,
    x: &[S],
    z: &[S],
    xi: &[S],
) -> Result<Derivative<S>> {
    let eval = evaluate(problem, x)?;
    match config.method {
        Method::FlProximal | Method::FlNewton | Method::FlInequality => match problem.kind() {
            ConstraintKind::Equality => fl_equality_rhs_at(problem, &config.gains, &eval),
            ConstraintKind::Inequality => fl_inequality_rhs_at(problem, &config.gains, &eval),
        },
        Method::FlMomentum => fl_momentum_rhs_at(problem, &config.gains, &eval, z),
        Method::FlPiExact => fl_pi_rhs_at(problem, &config.gains, &eval, xi, InverseMode::Exact),
        Method::FlPiDiag => {
            fl_pi_rhs_at(problem, &config.gains, &eval, xi, InverseMode::DiagonalApprox)
        }
        Method::MomentumSqp => Err(Error::MethodMismatch(
            "momentum-sqp advances through its own step, not a vector field",
        )),
    }
}

fn shifted<S: Scalar>(state: &SolverState<S>, k: &Derivative<S>, h: S) -> SolverState<S> {
    let mut out = state.clone();
    out.x = vec_ops::add_scaled(&state.x, h, &k.x_dot);
    if let Some(z_dot) = &k.z_dot {
        out.z = vec_ops::add_scaled(&state.z, h, z_dot);
    }
    if let Some(xi_dot) = &k.xi_dot {
        out.xi = vec_ops::add_scaled(&state.xi, h, xi_dot);
    }
    out
}

fn combine_rk4<S: Scalar>(
    state: &SolverState<S>,
    dt: S,
    k1: &Derivative<S>,
    k2: &Derivative<S>,
    k3: &Derivative<S>,
    k4: &Derivative<S>,
) -> SolverState<S> {
    let w = dt / S::of(6.0);
    let two = S::of(2.0);
    let mix = |a: &[S], b: &[S], c: &[S], d: &[S], base: &[S]| -> Vec<S> {
        base.iter()
            .enumerate()
            .map(|(i, &v)| v + w * (a[i] + two * b[i] + two * c[i] + d[i]))
            .collect()
    };
    let mut out = state.clone();
    out.x = mix(&k1.x_dot, &k2.x_dot, &k3.x_dot, &k4.x_dot, &state.x);
    if let (Some(a), Some(b), Some(c), Some(d)) = (&k1.z_dot, &k2.z_dot, &k3.z_dot, &k4.z_dot) {
        out.z = mix(a, b, c, d, &state.z);
    }
    if let (Some(a), Some(b), Some(c), Some(d)) = (&k1.xi_dot, &k2.xi_dot, &k3.xi_dot, &k4.xi_dot) {
        out.xi = mix(a, b, c, d, &state.xi);
    }
    out
}

fn advance_from<S: Scalar>(
    problem: &ProblemInstance<S>,
    config: &SolverConfig<S>,
    state: &SolverState<S>,
    k1: &Derivative<S>,
) -> Result<SolverState<S>> {
    let dt = config.dt;
    let mut next = match config.scheme {
        Scheme::Euler => shifted(state, k1, dt),
        Scheme::Rk4 => {
            let half = dt * S::of(0.5);
            let s2 = shifted(state, k1, half);
            let k2 = rhs_at_point(problem, config, &s2.x, &s2.z, &s2.xi)?;
            let s3 = shifted(state, &k2, half);
            let k3 = rhs_at_point(problem, config, &s3.x, &s3.z, &s3.xi)?;
            let s4 = shifted(state, &k3, dt);
            let k4 = rhs_at_point(problem, config, &s4.x, &s4.z, &s4.xi)?;
            combine_rk4(state, dt, k1, &k2, &k3, &k4)
        }
    };
    next.x_prev = state.x.clone();
    next.t = state.t + dt;
    next.step = state.step + 1;
    Ok(next)
}

/// Advances one step of the configured method. For `MomentumSqp` this is the
/// discrete extrapolated step; otherwise the configured scheme applied to the
/// method's vector field.
pub fn step<S: Scalar>(
    problem: &ProblemInstance<S>,
    config: &SolverConfig<S>,
    state: &SolverState<S>,
) -> Result<SolverState<S>> {
    let problem = effective_problem(problem, config.method);
    let next = if config.method == Method::MomentumSqp {
        momentum_sqp_step(&problem, config, state)?
    } else {
        let k1 = rhs_at_point(&problem, config, &state.x, &state.z, &state.xi)?;
        advance_from(&problem, config, state, &k1)?
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(next)
}

/// Discrete extrapolated scheme for equality constraints with step `eta = dt`:
///
/// ```text
/// w      = x + beta (x - x_prev)
/// lambda = -(J(w) J(w)^T)^{-1} (J(w) grad_f(w) - h(w)/eta)
/// x_next = w - eta (grad_f(w) + J(w)^T lambda)
/// ```
///
/// The primal update descends along the extrapolated gradient; for affine
/// constraints the step is exactly momentum-accelerated projected gradient
/// descent, which also fixes the sign convention of the update.
pub fn momentum_sqp_step<S: Scalar>(
    problem: &ProblemInstance<S>,
    config: &SolverConfig<S>,
    state: &SolverState<S>,
) -> Result<SolverState<S>> {
    if problem.kind() != ConstraintKind::Equality {
        return Err(Error::MethodMismatch("momentum-sqp handles equality constraints"));
    }
    let eta = config.dt;
    let w: Vec<S> = state
        .x
        .iter()
        .zip(&state.x_prev)
        .map(|(&xi, &pi)| xi + config.beta * (xi - pi))
        .collect();
    let eval = evaluate(problem, &w)?;
    let m = problem.constraint_count();
    let pulled = if m == 0 {
        eval.grad_f.clone()
    } else {
        let k = vec![S::one() / eta; m];
        let sol = equality_multiplier(&eval, &MetricAt::Identity, &k)?;
        vec_ops::add_scaled(&eval.grad_f, S::one(), &eval.jac_h.matvec_t(&sol.lambda))
    };
    let mut next = state.clone();
    next.x = vec_ops::add_scaled(&w, -eta, &pulled);
    next.x_prev = state.x.clone();
    next.t = state.t + eta;
    next.step = state.step + 1;
    Ok(next)
}

const DIVERGENCE_NORM_CAP: f64 = 1e12;

/// Runs the configured method from `x0`, recording diagnostics every
/// `record_every` steps (step 0 and the final step are always recorded).
///
/// Never returns an error: failures become the trace's stop reason. The KKT
/// gap uses the multiplier of the current right-hand-side evaluation; for
/// `MomentumSqp` the diagnostic multiplier is the closed-form one at `x` with
/// gains `I/dt`.
pub fn run<S: Scalar>(
    problem: &ProblemInstance<S>,
    config: &SolverConfig<S>,
    x0: &[S],
) -> TrajectoryTrace<S> {
    let started = Instant::now();
    let mut rows: Vec<TrajectoryRow<S>> = Vec::new();
    let mut best_gap = S::infinity();
    let mut best_step = 0usize;
    let mut best_violation = S::infinity();
    let mut max_lambda = S::zero();
    let mut final_gap = S::infinity();

    let stop_reason = 'run: {
        if let Err(e) = config.validate(problem) {
            break 'run StopReason::Error(e);
        }
        let problem = effective_problem(problem, config.method);
        if x0.len() != problem.dim() {
            break 'run StopReason::Error(Error::DimensionMismatch {
                what: "initial point",
                expected: problem.dim(),
                got: x0.len(),
            });
        }
        let mut state = SolverState::new(&problem, x0);
        let norm_cap = S::of(DIVERGENCE_NORM_CAP);

        loop {
            let (row, k1) = match diagnose(&problem, config, &state, max_lambda) {
                Ok(v) => v,
                Err(e) => break StopReason::Error(e),
            };
            final_gap = row.kkt_gap;
            max_lambda = max_lambda.max(row.lambda_inf_norm);
            if row.kkt_gap < best_gap {
                best_gap = row.kkt_gap;
                best_step = state.step;
                best_violation = row.max_violation;
            }
            let mut recorded = false;
            if state.step % config.record_every == 0 {
                rows.push(row.clone());
                recorded = true;
            }
            let finish = |reason: StopReason, rows: &mut Vec<TrajectoryRow<S>>| {
                if !recorded {
                    rows.push(row.clone());
                }
                reason
            };
            if best_gap <= config.stop_kkt_tol {
                break finish(StopReason::Converged, &mut rows);
            }
            if state.step >= config.max_steps {
                break finish(StopReason::MaxSteps, &mut rows);
            }
            let next = match config.method {
                Method::MomentumSqp => momentum_sqp_step(&problem, config, &state),
                _ => advance_from(&problem, config, &state, k1.as_ref().expect("field method")),
            };
            match next {
                Err(e) => break finish(StopReason::Error(e), &mut rows),
                Ok(next) => {
                    if !next.is_finite() || vec_ops::norm_inf(&next.x) > norm_cap {
                        break finish(StopReason::Diverged, &mut rows);
                    }
                    state = next;
                }
            }
        }
    };

    let steps_taken = rows.last().map_or(0, |r| r.step);
    TrajectoryTrace {
        rows,
        summary: TraceSummary {
            stop_reason,
            steps_taken,
            final_kkt_gap: final_gap,
            best_kkt_gap: best_gap,
            best_step,
            best_max_violation: best_violation,
            max_lambda_inf: max_lambda,
            wall_time_ms: started.elapsed().as_millis() as u64,
        },
    }
}

fn diagnose<S: Scalar>(
    problem: &ProblemInstance<S>,
    config: &SolverConfig<S>,
    state: &SolverState<S>,
    max_lambda_so_far: S,
) -> Result<(TrajectoryRow<S>, Option<Derivative<S>>)> {
    let eval = evaluate(problem, &state.x)?;
    let (lambda, lambda_inf, k1) = match config.method {
        Method::MomentumSqp => {
            let m = problem.constraint_count();
            if m == 0 {
                (Vec::new(), S::zero(), None)
            } else {
                let k = vec![S::one() / config.dt; m];
                let sol = equality_multiplier(&eval, &MetricAt::Identity, &k)?;
                let inf = sol.lambda_inf_norm();
                (sol.lambda, inf, None)
            }
        }
        _ => {
            let d = rhs_at_point(problem, config, &state.x, &state.z, &state.xi)?;
            let inf = d.multiplier.lambda_inf_norm();
            (d.multiplier.lambda.clone(), inf, Some(d))
        }
    };
    let report = kkt_gap(&eval, &lambda, problem.kind())?;
    let merit = match problem.kind() {
        ConstraintKind::Equality => {
            let rho = config.merit_coeff.unwrap_or_else(|| S::of(1e3));
            merit_equality(&eval, rho)
        }
        ConstraintKind::Inequality => {
            let l = config
                .merit_coeff
                .unwrap_or_else(|| max_lambda_so_far.max(lambda_inf) + S::one());
            merit_inequality(&eval, l)
        }
    };
    Ok((
        TrajectoryRow {
            step: state.step,
            t: state.t,
            f: eval.f,
            kkt_gap: report.gap,
            merit,
            max_violation: report.feasibility,
            lambda_inf_norm: lambda_inf,
        },
        k1,
    ))
}
