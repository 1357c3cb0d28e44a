use thiserror::Error;

/// Errors raised by the operator calculus, the geometry model and the solver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// `index` is the first failing constraint: the σ_i order for Gårding
    /// cones, or the 1-based component of T(μ) for the pulled-back cone.
    #[error("eigenvalue vector leaves the cone (first failing index {index})")]
    ConeViolation { index: usize },

    #[error("pencil error: {0}")]
    Pencil(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("eigenvalues leave the cone at grid point {point} {coords:?}")]
    NotAdmissible { point: usize, coords: Vec<usize> },

    #[error("not a C-subsolution at grid point {point} {coords:?}, direction {direction}")]
    NotSubsolution {
        point: usize,
        coords: Vec<usize>,
        direction: usize,
    },

    #[error("background form is inadmissible at grid point {point} {coords:?}")]
    InadmissibleBackground { point: usize, coords: Vec<usize> },

    #[error("line search reached the step floor at t = {t} (residual {residual:e})")]
    StepFailure { t: f64, residual: f64 },

    #[error("Newton did not converge in {iters} iterations at t = {t} (residual {residual:e})")]
    NonConvergence { t: f64, iters: usize, residual: f64 },

    #[error("continuation step underflow; last accepted t = {last_t}")]
    PathFailure { last_t: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
