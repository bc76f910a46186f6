/// Crate-wide error type.
///
/// Numerical failures carry enough context to tell a genuine model violation
/// (rank-deficient constraints, indefinite Hessian, unbounded multiplier
/// subproblem) apart from plain misuse (dimension mismatches).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A symmetric factorization failed even after the jitter retry. For
    /// constraint Gram matrices this signals loss of full row rank at the
    /// current iterate.
    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },

    /// An LU factorization hit a zero pivot.
    #[error("matrix is singular ({context})")]
    SingularMatrix { context: &'static str },

    /// The assembled KKT system of a quadratic subproblem is singular.
    #[error("KKT system is singular")]
    SingularKktMatrix,

    /// A user-supplied callable produced NaN or infinity.
    #[error("non-finite evaluation in {field}")]
    NonFiniteEvaluation { field: &'static str },

    /// An iterate left the representable range during integration.
    #[error("solver state became non-finite")]
    NonFiniteState,

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The nonnegative QP has no finite minimizer.
    #[error("nonnegative QP is unbounded below")]
    Unbounded,

    /// An iterative solver hit its iteration cap.
    #[error("iteration cap of {cap} reached")]
    MaxIterations { cap: usize },

    /// Exhaustive active-set enumeration produced no numerically consistent
    /// candidate; the quadratic term is severely rank-deficient.
    #[error("no feasible active-set candidate found")]
    NoFeasibleCandidate,

    /// A diagonal inverse approximation hit a (near-)zero diagonal entry.
    #[error("diagonal entry {index} of the constraint Gram matrix is zero")]
    ZeroDiagonal { index: usize },

    /// A momentum method was configured with a non-identity metric.
    #[error("momentum dynamics require the identity metric")]
    MetricNotIdentity,

    /// The method requires a Hessian the problem does not provide.
    #[error("objective Hessian unavailable")]
    HessianUnavailable,

    /// The linearized inequality subproblem is infeasible.
    #[error("linearized subproblem is infeasible")]
    Infeasible,

    /// Exhaustive enumeration was requested above its constraint cap.
    #[error("too many constraints for enumeration: {m} > {cap}")]
    TooManyConstraints { m: usize, cap: usize },

    /// The solver method does not apply to the given problem or configuration.
    #[error("method/problem mismatch: {0}")]
    MethodMismatch(&'static str),
}

impl Error {
    /// Short stable tag used in run summaries, e.g. `HessianUnavailable`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::SingularKktMatrix => "SingularKktMatrix",
            Error::NonFiniteEvaluation { .. } => "NonFiniteEvaluation",
            Error::NonFiniteState => "NonFiniteState",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Unbounded => "Unbounded",
            Error::MaxIterations { .. } => "MaxIterations",
            Error::NoFeasibleCandidate => "NoFeasibleCandidate",
            Error::ZeroDiagonal { .. } => "ZeroDiagonal",
            Error::MetricNotIdentity => "MetricNotIdentity",
            Error::HessianUnavailable => "HessianUnavailable",
            Error::Infeasible => "Infeasible",
            Error::TooManyConstraints { .. } => "TooManyConstraints",
            Error::MethodMismatch(_) => "MethodMismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
