use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("no unique steady state: eigenvalue {re:+.3e}{im:+.3e}i of X has real part below {tol:e}")]
    NoUniqueNess { re: f64, im: f64, tol: f64 },

    #[error("non-unique Floquet fixed point: eigenvalue pair product {re:+.3e}{im:+.3e}i is within {tol:e} of 1")]
    NonUniqueFloquet { re: f64, im: f64, tol: f64 },

    #[error("non-unique steady state: {0}")]
    NonUniqueSteadyState(String),

    #[error("solver residual {residual:e} exceeds tolerance {tol:e} ({context})")]
    ResidualTooLarge { context: &'static str, residual: f64, tol: f64 },

    #[error("iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("system size N={n} exceeds the limit {limit} for {what}")]
    MemoryGuard { n: usize, limit: usize, what: &'static str },

    #[error("singular dispersion: epsilon(kappa) vanishes at kappa={kappa}")]
    SingularDispersion { kappa: f64 },

    #[error("quasi-energy argument {value} lies outside [-1, 1] beyond rounding")]
    NumericalInconsistency { value: f64 },

    #[error("unresolved band structure: counts {coarse} and {fine} differ after refinement")]
    UnresolvedBands { coarse: usize, fine: usize },

    #[error("empty index set for the residual correlator (N={n_sites})")]
    EmptyAdmittedSet { n_sites: usize },

    #[error("Schur decomposition failed to converge")]
    SchurFailed,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short stable code used when a sweep masks a grid cell.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NotSquare { .. } => "not-square",
            Error::NoUniqueNess { .. } => "no-unique-ness",
            Error::NonUniqueFloquet { .. } => "resonance",
            Error::NonUniqueSteadyState(_) => "non-unique-steady-state",
            Error::ResidualTooLarge { .. } => "residual",
            Error::NotConverged { .. } => "not-converged",
            Error::Unphysical(_) => "unphysical",
            Error::MemoryGuard { .. } => "memory-guard",
            Error::SingularDispersion { .. } => "singular-dispersion",
            Error::NumericalInconsistency { .. } => "numerical-inconsistency",
            Error::UnresolvedBands { .. } => "unresolved-bands",
            Error::EmptyAdmittedSet { .. } => "empty-admitted-set",
            Error::SchurFailed => "schur-failed",
        }
    }
}
