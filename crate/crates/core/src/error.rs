use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),
    #[error("hermitian symmetry broken: defect {defect:e} exceeds tolerance {tol:e}")]
    Symmetry { defect: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("director normalization near-singular: min |w0 + eps*phi| = {min_norm:e} < 0.1")]
    Amplitude { min_norm: f64 },
    #[error("blow-up at t = {t}: {dump}")]
    BlowUp { t: f64, dump: String },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("unknown series `{0}` in expectation table")]
    Mapping(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
