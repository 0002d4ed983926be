use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("field has nonzero mean ({0:e})")]
    NonZeroMean(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("insufficient dynamic range: {0}")]
    InsufficientDynamicRange(String),
    #[error("insufficient oversampling: interpolation residual {residual:e} exceeds {tolerance:e}")]
    InsufficientOversampling { residual: f64, tolerance: f64 },
    #[error("not dominated by reference: {0}")]
    NotDominated(String),
    #[error("not a diffeomorphism: {0}")]
    NotDiffeomorphism(String),
    #[error("CFL violation: dt = {dt:e} exceeds the stable step, try dt <= {suggested:e}")]
    Cfl { dt: f64, suggested: f64 },
    #[error("outside resolved band: {0}")]
    Unresolved(String),
    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Wraps `self` with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
