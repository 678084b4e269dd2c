use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported representation: {0}")]
    Unsupported(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("no gap: radial projections cover (0, {rmax}]")]
    NoGap { rmax: f64 },

    #[error("no feasible radius found at ({re}, {im})")]
    NoFeasibleRadius { re: f64, im: f64 },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown series `{name}`; available: {available:?}")]
    UnknownSeries { name: String, available: Vec<String> },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
