use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid r0 = {0}: must lie in (0, pi^2)")]
    InvalidR0(f64),

    #[error("zero argument passed to {0}")]
    ZeroArgument(&'static str),

    #[error("{what} = {re:+.6e}{im:+.6e}i is outside the sector of half-angle {angle:.6}")]
    NotInSector {
        what: &'static str,
        re: f64,
        im: f64,
        angle: f64,
    },

    #[error("mode determinant underflow at k = {k}: |D| = {modulus:e}")]
    DeterminantUnderflow { k: usize, modulus: f64 },

    #[error("forcing too coarse: {0}")]
    QuadratureResolution(String),

    #[error("{modes} modes requested but the y-grid supports at most {max}")]
    NyquistExceeded { modes: usize, max: usize },

    #[error("singular discrete system (zero pivot at row {0})")]
    SingularSystem(usize),

    #[error(
        "host hypothesis violated: operands ({minus:.6e}, {plus:.6e}) exceed r0 = {r0:.6e}"
    )]
    HypothesisViolation { minus: f64, plus: f64, r0: f64 },

    #[error("step instability at step {step}, t = {t:.6e}: norm grew by {factor:.3e}")]
    StepInstability { step: usize, t: f64, factor: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Process exit code associated with this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidParams(_) | Error::InvalidR0(_) | Error::Config(_) => 2,
            Error::Io(_) => 2,
            Error::HypothesisViolation { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
