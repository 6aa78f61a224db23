use alloc::string::String;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not Hermitian (defect {defect:e}, allowed {allowed:e})")]
    NotHermitian { defect: f64, allowed: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("function is undefined or non-finite at eigenvalue {eigenvalue}")]
    FunctionSingular { eigenvalue: f64 },
    #[error("z is within {gap:e} of the spectrum (threshold {threshold:e})")]
    NearSingular { gap: f64, threshold: f64 },
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("phase jump {jump:.3} rad on [{from}, {to}] needs a finer grid")]
    RefinementNeeded { from: f64, to: f64, jump: f64 },
    #[error("determinant vanishes at sample {at}")]
    SingularSample { at: f64 },
    #[error("coverage: {0}")]
    Coverage(String),
    #[error("no spectral gap at threshold: nearest eigenvalues {below:e} and {above:e}")]
    AmbiguousCluster { below: f64, above: f64 },
    #[error("averages do not settle (spread {spread:e} > {tolerance:e})")]
    NoLebesguePoint { spread: f64, tolerance: f64 },
    #[error("degenerate pole configuration: {0}")]
    DegeneratePole(String),
    #[error("node spacing {spacing:.4} exceeds the required {required:.4}")]
    UnderResolved { spacing: f64, required: f64 },
    #[error("problem dimension {dim} exceeds the dense budget {cap}")]
    Budget { dim: usize, cap: usize },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Budget,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_)
            | Error::NonFinite(_)
            | Error::NotHermitian { .. }
            | Error::DimensionMismatch { .. }
            | Error::Coverage(_)
            | Error::UnderResolved { .. } => ErrorClass::Validation,
            Error::Budget { .. } => ErrorClass::Budget,
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
