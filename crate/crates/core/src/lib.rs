//! Constrained optimization through feedback-linearized control dynamics.
//!
//! The solver treats the constraint values `y = h(x)` as the output of a
//! control system whose input is the Lagrange multiplier: choosing the
//! multiplier so the output obeys a prescribed stable law (`y_dot = -K y`, or
//! a PI-regulated variant) yields a family of flows whose forward-Euler
//! discretization with gains `K = I/dt` is exactly sequential quadratic
//! programming. The crate provides:
//!
//! * the equality, inequality, momentum-accelerated, and PI-robustified
//!   vector fields ([`dynamics`]), with the inequality multiplier solved as a
//!   nonnegative QP ([`multiplier`]);
//! * fixed-step Euler and RK4 integration with trace recording
//!   ([`integrate`]);
//! * KKT-gap and merit diagnostics ([`diagnostics`]);
//! * independent cross-validation oracles: direct quadratic-subproblem
//!   solvers and analytic decay references ([`oracles`]);
//! * seeded, reproducible benchmark problems ([`suite`]).
//!
//! Core numerics are generic over the scalar type ([`Scalar`]: `f32` or
//! `f64`); the aliases below pin the common double-precision choices.

pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod integrate;
pub mod kernel;
pub mod multiplier;
pub mod oracles;
pub mod problem;
mod scalar;
pub mod suite;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision dense matrix.
pub type Matrix64 = kernel::DenseMatrix<f64>;
/// Double-precision problem instance.
pub type Problem64 = problem::ProblemInstance<f64>;
/// Double-precision evaluation record.
pub type Eval64 = problem::EvalRecord<f64>;
/// Double-precision solver configuration.
pub type SolverConfig64 = integrate::SolverConfig<f64>;
/// Double-precision solver state.
pub type SolverState64 = integrate::SolverState<f64>;
/// Double-precision trajectory trace.
pub type Trace64 = integrate::TrajectoryTrace<f64>;
/// Double-precision gain configuration.
pub type GainConfig64 = dynamics::GainConfig<f64>;
