use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown landscape `{0}`; valid names: zero, constant(c), quadratic, double_well_1d, double_well_2d, saturated_double_well")]
    UnknownLandscape(String),

    #[error("invalid landscape: {0}")]
    InvalidLandscape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible grids: {0}")]
    GridMismatch(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Divergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("numerical blowup: {0}")]
    Blowup(String),

    #[error("dimension {0} unsupported: uniqueness of the bang-bang SDE is open for d >= 3")]
    UnsupportedDimension(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("value {0} outside control interval")]
    ControlDomain(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
