use thiserror::Error;

/// Errors raised by parameter validation, matrix construction and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a out of (0,1): got {0}")]
    OutOfRange(f64),

    #[error("contraction a·d² < 1 violated: a·d² = {0}")]
    NotContractive(f64),

    #[error("degenerate weight: {0}")]
    DegenerateWeight(&'static str),

    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),

    #[error("x = {0} lies on a breakpoint of P")]
    AtBreakpoint(f64),

    #[error("x = {x} lies beyond depth {depth}")]
    DepthExceeded { x: f64, depth: usize },

    #[error("x = {0} outside [0,1]")]
    OutsideDomain(f64),

    #[error("range overflow: order {order} exceeds the working-precision limit {limit}")]
    RangeOverflow { order: usize, limit: usize },

    #[error("symmetrization requires d > 0")]
    IndefiniteCase,

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("reciprocal eigenvalue {0} below the underflow guard")]
    ZeroEigenvalue(f64),

    #[error("empty window")]
    EmptyWindow,

    #[error("indefinite report requires d < 0")]
    WrongSign,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short machine-readable name, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OutOfRange(_) => "OutOfRange",
            Error::NotContractive(_) => "NotContractive",
            Error::DegenerateWeight(_) => "DegenerateWeight",
            Error::NonFinite(_) => "NonFinite",
            Error::AtBreakpoint(_) => "AtBreakpoint",
            Error::DepthExceeded { .. } => "DepthExceeded",
            Error::OutsideDomain(_) => "OutsideDomain",
            Error::RangeOverflow { .. } => "RangeOverflow",
            Error::IndefiniteCase => "IndefiniteCase",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NonConvergence(_) => "NonConvergence",
            Error::ZeroEigenvalue(_) => "ZeroEigenvalue",
            Error::EmptyWindow => "EmptyWindow",
            Error::WrongSign => "WrongSign",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }

    /// True for failures of the numerical kernels rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RangeOverflow { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NonConvergence(_)
                | Error::ZeroEigenvalue(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
