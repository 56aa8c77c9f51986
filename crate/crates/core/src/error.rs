use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("order must be >= 1")]
    EmptyOrder,

    #[error("no roots defined for a zero or constant polynomial")]
    NoRoots,

    #[error("gcd undefined: both polynomials are zero")]
    ZeroGcd,

    #[error("not divisible: remainder norm {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotDivisible { residual: f64, tol: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("gain undefined outside stability region")]
    GainUndefined,

    #[error("not invertible: AR coefficients lie outside the stability region")]
    NotInvertible,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient input: need {needed} values, got {got}")]
    InsufficientInput { needed: usize, got: usize },

    #[error("no curve exists: the AR and input polynomials are coprime")]
    NoCurve,

    #[error("d = {d} outside the valid range [{lo}, {hi}]")]
    OutOfRange { d: f64, lo: f64, hi: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
