use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("solver did not converge: {message} (residual {residual:.3e})")]
    Solver { message: String, residual: f64 },

    #[error("wrong cut count: {0}")]
    WrongCutCount(String),

    #[error("contour/geometry error: {0}")]
    Geometry(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI for structured reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Capability(_) => "capability",
            Error::Argument(_) => "argument",
            Error::Solver { .. } => "solver",
            Error::WrongCutCount(_) => "wrong_cut_count",
            Error::Geometry(_) => "geometry",
            Error::Resolution(_) => "resolution",
            Error::Data(_) => "data",
            Error::Precondition(_) => "precondition",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
