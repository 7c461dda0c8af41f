use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("fields are expressed in different gauges")]
    GaugeMixing,
    #[error("fields are defined at different times ({0:e} s vs {1:e} s)")]
    TimeMismatch(f64, f64),
    #[error("field has zero norm")]
    ZeroState,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("packet clipped by the box: boundary amplitude {0:e} of peak")]
    BoxTooSmall(f64),
    #[error("unknown state id `{0}`")]
    UnknownState(String),
    #[error("unstable step: {0}")]
    UnstableStep(String),
    #[error("non-finite amplitude at step {0}")]
    NumericalBlowup(usize),
    #[error("boundary amplitude {amplitude:e} of peak at step {step}")]
    BoundaryLeak { step: usize, amplitude: f64 },
    #[error("duration {0:e} s is not a non-negative multiple of dt")]
    BadDuration(f64),
    #[error("operator needs an electromagnetic context")]
    ContextRequired,
    #[error("operator {0} is not available on this grid")]
    AxisUnavailable(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("trajectory left the resolved region at t = {0:e} s")]
    TrajectoryLost(f64),
    #[error("velocity {0:e} m/s too close to zero for a field estimate")]
    NearZeroVelocity(f64),
    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    #[error("config `{key}`: {msg}")]
    ConfigValue { key: String, msg: String },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
