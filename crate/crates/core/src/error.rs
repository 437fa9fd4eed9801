use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension {0} is outside the supported range 1..=16")]
    InvalidDimension(usize),

    #[error("matrix or vector contains a non-finite entry")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue iteration did not converge within {iterations} sweeps")]
    NonConvergence { iterations: usize },

    #[error("matrix is defective: no biorthonormal eigenbasis (residual {residual:.3e})")]
    DefectiveMatrix { residual: f64 },

    #[error("no null space: smallest |eigenvalue| is {min_abs:.3e}")]
    NoNullSpace { min_abs: f64 },

    #[error("invalid integration step dt = {0}")]
    InvalidStep(f64),

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("temperature must be strictly positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("occupation factors f0 = {f0}, f1 = {f1} hit a closed-form singularity")]
    SingularOccupation { f0: f64, f1: f64 },

    #[error("closed-form eigensystem is inconsistent: {0}")]
    InconsistentEigensystem(String),

    #[error("initial-state difference has no weight on the competing modes")]
    DegenerateDifference,

    #[error("criterion denominator vanishes while the numerator does not")]
    DivisionBlocked,

    #[error("degenerate spectrum: omega1 == omega2 and delta == 0 leave the mixing angle undefined")]
    DegenerateSpectrum,

    #[error("operation outside its domain: {0}")]
    OutOfDomain(String),

    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),

    #[error("series do not share a common strictly increasing time grid")]
    GridMismatch,

    #[error("no solution bracket found: {0}")]
    NoBracket(String),

    #[error("search failed: {0}")]
    NotFound(String),
}
