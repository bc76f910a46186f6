//! Acceptance suite: every test exercises one contract of the solver family
//! at a pinned tolerance and prints one PASS line (run with `--nocapture` to
//! see them all).

use flopt::diagnostics::momentum_merit;
use flopt::dynamics::GainConfig;
use flopt::integrate::{run, step, Method, Scheme, SolverConfig, SolverState, StopReason};
use flopt::kernel::{
    gram, lu_solve, min_eigenvalue_spd, spd_solve, spectral_norm, vec_ops, DenseMatrix,
    DeterministicRng,
};
use flopt::multiplier::{nnqp_brute_force, nnqp_objective, nnqp_solve};
use flopt::oracles::{
    exponential_decay_reference, momentum_projected_gradient_oracle, sqp_equality_oracle,
    sqp_inequality_oracle, strongly_convex_rate_reference,
};
use flopt::problem::{evaluate, MetricSpec, ProblemInstance};
use flopt::suite::{
    affine_equality_quadratic, constrained_logistic, random_qp, random_qp_form, sphere_equality,
    QpConstraint, QpForm,
};
use std::time::Instant;

fn pass(name: &str) {
    println!("[acceptance] {name}: PASS");
}

/// Deterministic small problem sizes for a trial index.
fn sizes(rng: &mut DeterministicRng, n_max: usize, m_max: usize) -> (usize, usize) {
    let n = 2 + (rng.next_u64() % (n_max as u64 - 1)) as usize;
    let m = 1 + (rng.next_u64() % (m_max.min(n - 1).max(1) as u64)) as usize;
    (n, m)
}

/// One Euler step of the configured first-order method.
fn euler_fl_step(
    problem: &ProblemInstance<f64>,
    method: Method,
    eta: f64,
    x: &[f64],
) -> Vec<f64> {
    let m = problem.constraint_count();
    let cfg = SolverConfig::new(
        method,
        Scheme::Euler,
        eta,
        1,
        GainConfig::uniform(m, 1.0 / eta),
    );
    let state = SolverState::new(problem, x);
    step(problem, &cfg, &state).expect("step succeeds").x
}

// Equality flow, Euler, gains I/eta: the step must coincide with the direct
// solution of the local equality-constrained quadratic model, for both the
// identity and the inverse-Hessian metric.
#[test]
fn equality_step_equivalence() {
    let started = Instant::now();
    let mut meta = DeterministicRng::new(2024);
    let eta = 0.1;
    for trial in 0..100u64 {
        let (n, m) = sizes(&mut meta, 20, 5);
        let p_ident = random_qp::<f64>(n, m, QpConstraint::Eq, trial);
        let x: Vec<f64> = meta.normal_vec(n);
        let tol = 1e-9 * (1.0 + vec_ops::norm2(&x));

        let fl = euler_fl_step(&p_ident, Method::FlProximal, eta, &x);
        let oracle = sqp_equality_oracle(&p_ident, &x, eta).unwrap();
        let diff = vec_ops::norm2(&vec_ops::sub(&fl, &oracle));
        assert!(diff <= tol, "trial {trial} identity metric: {diff:.3e} > {tol:.3e}");

        let p_newton = p_ident.clone().with_metric(MetricSpec::inverse_hessian());
        let fl = euler_fl_step(&p_newton, Method::FlNewton, eta, &x);
        let oracle = sqp_equality_oracle(&p_newton, &x, eta).unwrap();
        let diff = vec_ops::norm2(&vec_ops::sub(&fl, &oracle));
        assert!(diff <= tol, "trial {trial} inverse-Hessian metric: {diff:.3e} > {tol:.3e}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    pass("equality Euler step matches direct subproblem solve (both metrics)");
}

// Inequality flow, Euler, gains I/eta: the step must coincide with the
// enumeration oracle for the linearized inequality subproblem.
#[test]
fn inequality_step_equivalence() {
    let started = Instant::now();
    let mut meta = DeterministicRng::new(4096);
    let eta = 0.1;
    let mut skipped = 0usize;
    let total = 100u64;
    for trial in 0..total {
        let (n, m) = sizes(&mut meta, 20, 6);
        let p = random_qp::<f64>(n, m, QpConstraint::Ineq, 10_000 + trial);
        let x: Vec<f64> = meta.normal_vec(n);
        let oracle = match sqp_inequality_oracle(&p, &x, eta) {
            Ok(v) => v,
            Err(flopt::Error::Infeasible) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("trial {trial}: unexpected oracle failure {e}"),
        };
        let fl = euler_fl_step(&p, Method::FlInequality, eta, &x);
        let diff = vec_ops::norm2(&vec_ops::sub(&fl, &oracle));
        assert!(diff <= 1e-7, "trial {trial}: {diff:.3e}");
    }
    assert!(
        (skipped as f64) < 0.10 * total as f64,
        "too many infeasible subproblems: {skipped}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(&format!(
        "inequality Euler step matches enumeration oracle ({skipped} infeasible skipped)"
    ));
}

/// Drives an RK4 trajectory with unit gains and checks the constraint values
/// against the exact exponential envelope, with signs preserved at every step.
fn check_exponential_decay(problem: &ProblemInstance<f64>, x0: &[f64], label: &str) {
    let m = problem.constraint_count();
    let gains = GainConfig::uniform(m, 1.0);
    let cfg = SolverConfig::new(Method::FlProximal, Scheme::Rk4, 1e-3, 5_000, gains);
    let mut state = SolverState::new(problem, x0);
    let h0 = evaluate(problem, x0).unwrap().h;
    let ones = vec![1.0; m];
    for step_idx in 0..=5_000usize {
        let h = evaluate(problem, &state.x).unwrap().h;
        for i in 0..m {
            assert!(
                h[i] * h0[i] > 0.0 || h0[i] == 0.0,
                "{label}: sign flipped at step {step_idx}, coordinate {i}"
            );
        }
        if step_idx % 10 == 0 {
            let expect = exponential_decay_reference(&h0, &ones, state.t);
            for i in 0..m {
                let err = (h[i] - expect[i]).abs();
                let tol = 1e-5 * (1.0 + h0[i].abs());
                assert!(
                    err <= tol,
                    "{label}: step {step_idx} coordinate {i}: {err:.3e} > {tol:.3e}"
                );
            }
        }
        if step_idx == 5_000 {
            break;
        }
        state = step(problem, &cfg, &state).unwrap();
    }
}

#[test]
fn constraint_exponential_decay() {
    let sphere = sphere_equality::<f64>(6, 0);
    let mut rng = DeterministicRng::new(33);
    let x0: Vec<f64> = rng.normal_vec(6);
    check_exponential_decay(&sphere.problem, &x0, "sphere");

    let qp = random_qp::<f64>(6, 2, QpConstraint::Eq, 0);
    let x0: Vec<f64> = rng.normal_vec(6);
    check_exponential_decay(&qp, &x0, "equality qp");
    pass("constraint values follow the exponential decay law under RK4");
}

fn max_merit_increase(rows: &[flopt::integrate::TrajectoryRow<f64>]) -> f64 {
    rows.windows(2)
        .map(|w| w[1].merit - w[0].merit)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn merit_monotonicity() {
    // Equality trajectories with the absolute-value penalty at rho = 1e3.
    let sphere = sphere_equality::<f64>(6, 0);
    let mut rng = DeterministicRng::new(33);
    let x0s: Vec<f64> = rng.normal_vec(6);
    let qp = random_qp::<f64>(6, 2, QpConstraint::Eq, 0);
    let x0q: Vec<f64> = rng.normal_vec(6);
    for (problem, x0, label) in [(&sphere.problem, &x0s, "sphere"), (&qp, &x0q, "equality qp")] {
        let gains = GainConfig::uniform(problem.constraint_count(), 1.0);
        let cfg = SolverConfig::new(Method::FlProximal, Scheme::Rk4, 1e-3, 5_000, gains)
            .with_record_every(10)
            .with_merit_coeff(1e3);
        let trace = run(problem, &cfg, x0);
        assert!(trace.summary.stop_reason.is_ok(), "{label}: {}", trace.summary.stop_reason);
        let inc = max_merit_increase(&trace.rows);
        assert!(inc <= 1e-7, "{label}: merit increased by {inc:.3e}");
    }

    // Inequality trajectory with the hinge penalty at L = max ||lambda|| + 1,
    // determined by a pilot run of the same deterministic trajectory.
    let p = random_qp::<f64>(8, 4, QpConstraint::Ineq, 0);
    let gains = GainConfig::uniform(4, 1.0);
    let cfg = SolverConfig::new(Method::FlInequality, Scheme::Rk4, 1e-3, 5_000, gains)
        .with_record_every(10);
    let x0 = vec![0.0; 8];
    let pilot = run(&p, &cfg, &x0);
    assert!(pilot.summary.stop_reason.is_ok());
    let l = pilot.summary.max_lambda_inf + 1.0;
    let trace = run(&p, &cfg.with_merit_coeff(l), &x0);
    let inc = max_merit_increase(&trace.rows);
    assert!(inc <= 1e-7, "inequality qp: merit increased by {inc:.3e}");
    pass("merit columns are non-increasing along RK4 trajectories");
}

#[test]
fn strongly_convex_linear_rate() {
    // Seed pinned by a deterministic search for a well-conditioned tangent
    // restriction; the envelope uses the recorded global curvature, so it is
    // valid for every seed, while the end-of-horizon gap needs the restriction
    // to contract fast enough within t = 10.
    let inst = affine_equality_quadratic::<f64>(10, 3, 31);
    let gains = GainConfig::uniform(3, 1.0);
    let cfg = SolverConfig::new(Method::FlProximal, Scheme::Rk4, 1e-3, 10_000, gains)
        .with_record_every(20);
    let trace = run(&inst.problem, &cfg, &inst.feasible_point);
    assert!(trace.summary.stop_reason.is_ok(), "{}", trace.summary.stop_reason);
    let gap0 = trace.rows[0].f - inst.f_star;
    assert!(gap0 > 0.0);
    for row in &trace.rows {
        let bound = 1.001 * strongly_convex_rate_reference(gap0, inst.mu, row.t);
        assert!(
            row.f - inst.f_star <= bound,
            "objective gap above envelope at t = {}: {:.3e} > {:.3e}",
            row.t,
            row.f - inst.f_star,
            bound
        );
    }
    assert!(
        trace.summary.final_kkt_gap <= 1e-6,
        "final gap {:.3e}",
        trace.summary.final_kkt_gap
    );
    pass("strongly convex run stays under the linear-rate envelope, final gap <= 1e-6");
}

#[test]
fn nnqp_oracle_agreement() {
    let started = Instant::now();
    let mut rng = DeterministicRng::new(555);
    for trial in 0..500u64 {
        let m = 1 + (rng.next_u64() % 8) as usize;
        // Rectangular factor: the Gram matrices this solver sees come from
        // wide constraint Jacobians, and a square factor's occasional
        // near-singular draw would put the comparison outside what double
        // precision can certify.
        let cols = 2 * m + 2;
        let r = DenseMatrix::from_fn(m, cols, |_, _| rng.normal_scalar::<f64>());
        let g = gram(&r, |v| v.to_vec());
        let c: Vec<f64> = rng.normal_vec(m);
        let fast = nnqp_solve(&g, &c).unwrap();
        let slow = nnqp_brute_force(&g, &c).unwrap();
        let gap =
            (nnqp_objective(&g, &c, &fast.lambda) - nnqp_objective(&g, &c, &slow.lambda)).abs();
        assert!(gap <= 1e-8, "trial {trial}: objective gap {gap:.3e}");
        assert!(fast.kkt_residual <= 1e-9, "trial {trial}: {:.3e}", fast.kkt_residual);
        assert!(slow.kkt_residual <= 1e-9, "trial {trial}: {:.3e}", slow.kkt_residual);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass("nonnegative QP active-set solver agrees with exhaustive enumeration");
}

/// Affine-constrained quadratic with curvature scaled so the extrapolated
/// iteration at `beta = 0.9, eta = 0.05` contracts; a pointwise trajectory
/// comparison is only meaningful when roundoff differences cannot amplify.
fn contracting_affine_qp(n: usize, m: usize, seed: u64) -> (ProblemInstance<f64>, QpForm) {
    let mut rng = DeterministicRng::new(seed);
    let r = DenseMatrix::<f64>::from_fn(n, n, |_, _| rng.standard_normal());
    let mut q = r.transpose().matmul(&r);
    q.scale_in_place(1.0 / n as f64);
    q.add_scaled_identity(0.1);
    let c: Vec<f64> = rng.normal_vec(n);
    let mut a_rows = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row: Vec<f64> = rng.normal_vec(n);
        let norm = vec_ops::norm2(&row);
        for v in &mut row {
            *v /= norm;
        }
        a_rows.push(row);
    }
    let b: Vec<f64> = rng.normal_vec(m);
    let form = QpForm {
        kind: "qp".into(),
        constraint: QpConstraint::Eq,
        q: (0..n).map(|i| q.row(i).to_vec()).collect(),
        c,
        a: a_rows,
        b,
    };
    let problem = form.to_problem("contracting affine qp").unwrap();
    (problem, form)
}

#[test]
fn momentum_projected_gradient_equivalence() {
    let beta = 0.9;
    let eta = 0.05;
    let mut meta = DeterministicRng::new(777);
    for trial in 0..50u64 {
        let n = 4 + (meta.next_u64() % 9) as usize;
        let m = 1 + (meta.next_u64() % 3.min(n as u64 - 1)) as usize;
        let (problem, form) = contracting_affine_qp(n, m, 40_000 + trial);
        let a = DenseMatrix::from_rows(&form.a).unwrap();
        let b: Vec<f64> = form.b.clone();
        let x0: Vec<f64> = meta.normal_vec(n);

        let gains = GainConfig::uniform(m, 1.0 / eta);
        let cfg = SolverConfig::new(Method::MomentumSqp, Scheme::Euler, eta, 1, gains)
            .with_beta(beta);
        let mut state = SolverState::new(&problem, &x0);
        let mut ox = x0.clone();
        let mut ox_prev = x0.clone();
        for k in 0..100usize {
            state = step(&problem, &cfg, &state).unwrap();
            let next = momentum_projected_gradient_oracle(
                &a,
                &b,
                &problem.objective,
                &ox,
                &ox_prev,
                beta,
                eta,
            )
            .unwrap();
            ox_prev = ox;
            ox = next;
            let diff = vec_ops::norm_inf(&vec_ops::sub(&state.x, &ox));
            assert!(diff <= 1e-10, "trial {trial}, step {k}: {diff:.3e}");
        }
    }
    pass("discrete extrapolated scheme equals momentum projected gradient descent");
}

/// Exact minimizer of `1/2 x^T Q x + c^T x  s.t. A x + b <= 0` by active-set
/// enumeration; returns the active row indices.
fn exact_inequality_qp_active_set(form: &QpForm) -> Vec<usize> {
    let n = form.dim();
    let m = form.constraint_count();
    let q = DenseMatrix::<f64>::from_rows(&form.q).unwrap();
    let a = DenseMatrix::<f64>::from_rows(&form.a).unwrap();
    let mut best: Option<(f64, Vec<usize>)> = None;
    'subsets: for mask in 0u32..(1u32 << m) {
        let act: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let k = act.len();
        let dim = n + k;
        let mut kkt = DenseMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = q[(i, j)];
            }
        }
        for (s, &row) in act.iter().enumerate() {
            for j in 0..n {
                kkt[(n + s, j)] = a[(row, j)];
                kkt[(j, n + s)] = a[(row, j)];
            }
        }
        let rhs: Vec<f64> = form
            .c
            .iter()
            .map(|v| -v)
            .chain(act.iter().map(|&i| -form.b[i]))
            .collect();
        let Ok(sol) = lu_solve(&kkt, &rhs, "exact qp") else {
            continue 'subsets;
        };
        let x = &sol[..n];
        for &l in &sol[n..] {
            if l < -1e-10 {
                continue 'subsets;
            }
        }
        let h = vec_ops::add_scaled(&a.matvec(x), 1.0, &form.b);
        if h.iter().any(|&v| v > 1e-9) {
            continue 'subsets;
        }
        let f = 0.5 * vec_ops::dot(x, &q.matvec(x)) + vec_ops::dot(&form.c, x);
        if best.as_ref().map_or(true, |(bf, _)| f < *bf - 1e-12) {
            best = Some((f, act));
        }
    }
    best.expect("inequality QP is solvable").1
}

// Replacing the exact Gram inverse with its diagonal approximation can stall
// or destabilize the proportional controller while the PI form still finds
// the optimum. Seed 25 was pinned by a deterministic search over seeds
// 0..999: the inequality instance is reduced to an equality one on the active
// rows of its exact solution, and on that instance the diagonal-approximate
// flow never gets below 1e-2 while the PI variant converges.
#[test]
fn pi_controller_absorbs_approximate_inverse() {
    let (form, _) = random_qp_form(20, 10, QpConstraint::Ineq, 25);
    let active = exact_inequality_qp_active_set(&form);
    assert!(!active.is_empty(), "pinned seed has active constraints");
    let relaxed = QpForm {
        kind: "qp".into(),
        constraint: QpConstraint::Eq,
        q: form.q.clone(),
        c: form.c.clone(),
        a: active.iter().map(|&i| form.a[i].clone()).collect(),
        b: active.iter().map(|&i| form.b[i]).collect(),
    };
    let problem = relaxed.to_problem::<f64>("active-set relaxation").unwrap();
    let m = active.len();
    let dt = 5e-3;
    let steps = 10_000; // t = 50
    let x0 = vec![0.0; 20];

    let proportional = GainConfig::uniform(m, 1.0).with_pi(vec![1.0; m], vec![0.0; m]);
    let diag_trace = run(
        &problem,
        &SolverConfig::new(Method::FlPiDiag, Scheme::Euler, dt, steps, proportional)
            .with_record_every(100),
        &x0,
    );
    let pi = GainConfig::uniform(m, 1.0).with_pi(vec![1.0; m], vec![1.0; m]);
    let pi_trace = run(
        &problem,
        &SolverConfig::new(Method::FlPiDiag, Scheme::Euler, dt, steps, pi)
            .with_record_every(100),
        &x0,
    );
    assert!(
        diag_trace.summary.best_kkt_gap > 1e-2,
        "diagonal approximation unexpectedly converged: {:.3e}",
        diag_trace.summary.best_kkt_gap
    );
    assert!(
        pi_trace.summary.best_kkt_gap <= 1e-4,
        "PI variant did not converge: {:.3e}",
        pi_trace.summary.best_kkt_gap
    );
    pass("integral action recovers convergence under the diagonal Gram inverse");
}

#[test]
fn heterogeneous_logistic_benchmark() {
    let p = constrained_logistic::<f64>(5, 200, 10, 0.05, 0);
    let dt = 0.05;
    let k = 1.0 / dt;
    let mut steps_to_tol = Vec::new();
    for (method, alpha) in [
        (Method::FlProximal, 0.0),
        (Method::FlNewton, 0.0),
        (Method::FlMomentum, 1.0),
    ] {
        let gains = GainConfig::uniform(5, k).with_alpha(alpha);
        let cfg = SolverConfig::new(method, Scheme::Euler, dt, 20_000, gains)
            .with_stop_tol(1e-5)
            .with_record_every(100);
        let trace = run(&p, &cfg, &vec![0.0; 10]);
        assert_eq!(
            trace.summary.stop_reason,
            StopReason::Converged,
            "{} did not reach 1e-5: best {:.3e}",
            method.name(),
            trace.summary.best_kkt_gap
        );
        assert!(trace.summary.best_kkt_gap <= 1e-5);
        assert!(
            trace.summary.best_max_violation <= 1e-8,
            "{}: violation at best iterate {:.3e}",
            method.name(),
            trace.summary.best_max_violation
        );
        steps_to_tol.push((method.name(), trace.summary.steps_taken));
    }
    let by_name = |name: &str| steps_to_tol.iter().find(|(n, _)| *n == name).unwrap().1;
    let newton = by_name("fl-newton");
    let proximal = by_name("fl-proximal");
    let momentum = by_name("fl-momentum");
    assert!(
        newton < proximal && newton < momentum,
        "second-order method should be fastest: {steps_to_tol:?}"
    );
    // Momentum vs plain first-order ordering is reported, not asserted.
    println!(
        "[acceptance] note: steps to 1e-5 -> newton {newton}, momentum {momentum}, proximal {proximal}"
    );
    pass("heterogeneous logistic benchmark converges with the expected ordering");
}

#[test]
fn best_gap_rate_trend() {
    let inst = sphere_equality::<f64>(10, 0);
    let gains = GainConfig::uniform(1, 1.0);
    let cfg = SolverConfig::new(Method::FlProximal, Scheme::Rk4, 1e-3, 20_000, gains)
        .with_record_every(10);
    let mut rng = DeterministicRng::new(1000);
    let x0: Vec<f64> = rng.normal_vec(10);
    let trace = run(&inst.problem, &cfg, &x0);
    assert!(trace.summary.stop_reason.is_ok());
    let best_by = |t_target: f64| -> f64 {
        trace
            .rows
            .iter()
            .filter(|r| r.t <= t_target + 1e-12)
            .map(|r| r.kkt_gap)
            .fold(f64::INFINITY, f64::min)
    };
    for t in [2.5, 5.0] {
        let early = best_by(t);
        let late = best_by(4.0 * t);
        assert!(
            late <= 0.75 * early,
            "best gap at 4T not smaller: T = {t}, {late:.3e} vs {early:.3e}"
        );
    }
    pass("best-so-far KKT gap contracts by 4x-time doubling");
}

#[test]
fn momentum_merit_monotonicity() {
    // Affine constraints make every analysis constant computable: with
    // J(x) = A constant, the least-squares multiplier map is linear and its
    // Jacobian is -(A A^T)^{-1} A Q.
    let inst = affine_equality_quadratic::<f64>(6, 2, 3);
    let n = 6;
    let m = 2;
    let q = DenseMatrix::<f64>::from_rows(&inst.form.q).unwrap();
    let a = DenseMatrix::<f64>::from_rows(&inst.form.a).unwrap();
    let aat = gram(&a, |v| v.to_vec());

    let l_f = spectral_norm(&q);
    let d_sq = 1.0 / min_eigenvalue_spd(&aat).unwrap();
    let d = d_sq.sqrt();
    let aat_inv_a = {
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let e: Vec<f64> = (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
            rows.push(a.matvec_t(&spd_solve(&aat, &e).unwrap()));
        }
        DenseMatrix::from_rows(&rows).unwrap()
    };
    let l1 = spectral_norm(&aat_inv_a.matmul(&q));
    let p_a = a.transpose().matmul(&aat_inv_a);
    let pq = p_a.matmul(&q);
    let qp = q.matmul(&p_a);
    let sym_sum = DenseMatrix::from_fn(n, n, |i, j| pq[(i, j)] + qp[(i, j)]);
    let l2 = spectral_norm(&sym_sum);
    let h_bar = 0.0; // affine constraints have zero curvature

    // Pilot run bounds the gradient norm along the trajectory; the damping
    // threshold uses that bound with headroom, and the final run verifies the
    // trajectory indeed stayed inside it.
    let pilot_sup = {
        let gains = GainConfig::uniform(m, 1.0).with_alpha(10.0);
        let cfg = SolverConfig::new(Method::FlMomentum, Scheme::Rk4, 1e-3, 5_000, gains);
        let mut state = SolverState::new(&inst.problem, &inst.feasible_point);
        let mut sup: f64 = 0.0;
        for _ in 0..5_000 {
            let eval = evaluate(&inst.problem, &state.x).unwrap();
            sup = sup.max(vec_ops::norm2(&eval.grad_f));
            state = step(&inst.problem, &cfg, &state).unwrap();
        }
        sup
    };
    let m_const = (1.5 * pilot_sup).max(spectral_norm(&a));

    let a1 = 1.0;
    let a2 = (4.0 * l2 * d + l1 * l1) * a1; // unit gains: K = I
    let alpha =
        a1 * (l_f + l2) + a2 * (m_const * m_const + h_bar) + 1.0 / a1 + 2.0 * d_sq / a2 + 1.0;
    let dt = (2.0 / alpha).min(1e-3);

    let gains = GainConfig::uniform(m, 1.0).with_alpha(alpha);
    let cfg = SolverConfig::new(Method::FlMomentum, Scheme::Rk4, dt, 20_000, gains);
    let mut state = SolverState::new(&inst.problem, &inst.feasible_point);
    let mut prev = momentum_merit(&inst.problem, &state.x, &state.z, a1, a2, alpha).unwrap();
    let mut max_increase = f64::NEG_INFINITY;
    let mut sup_grad: f64 = 0.0;
    for i in 0..20_000usize {
        state = step(&inst.problem, &cfg, &state).unwrap();
        let eval = evaluate(&inst.problem, &state.x).unwrap();
        sup_grad = sup_grad.max(vec_ops::norm2(&eval.grad_f));
        if (i + 1) % 100 == 0 {
            let cur = momentum_merit(&inst.problem, &state.x, &state.z, a1, a2, alpha).unwrap();
            max_increase = max_increase.max(cur - prev);
            prev = cur;
        }
    }
    assert!(
        sup_grad <= m_const,
        "gradient bound violated: {sup_grad:.3} > {m_const:.3}"
    );
    assert!(
        max_increase <= 1e-6,
        "momentum merit increased by {max_increase:.3e}"
    );
    pass("momentum merit is non-increasing at the analysis damping level");
}
