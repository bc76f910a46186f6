//! Shared numerical primitives: dense matrices, symmetric and LU solves, the
//! deterministic random stream, and finite differences.
//!
//! Everything here is pure; [`DeterministicRng`] is mutated by value and never
//! shared, so concurrent solver runs that own their own state are safe.

mod finite_diff;
mod matrix;
mod rng;
mod solve;
pub mod vec_ops;

pub use finite_diff::{default_step, finite_diff_jacobian};
pub use matrix::DenseMatrix;
pub use rng::DeterministicRng;
pub use solve::{
    gram, least_norm_solution, lu_solve, min_eigenvalue_spd, spd_solve, spectral_norm,
    CholeskyFactor, LuFactor,
};
