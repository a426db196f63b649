use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("momentum-squared {t} is not below the sonic value {t_crit}")]
    SonicBranch { t: f64, t_crit: f64 },

    #[error("flux {q} outside the admissible window ({lower}, {upper})")]
    FluxWindow { q: f64, lower: f64, upper: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("free boundary is not a graph: {0}")]
    Consistency(String),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("{0}")]
    Refused(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable name of the variant for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::SonicBranch { .. } => "sonic_branch",
            Error::FluxWindow { .. } => "flux_window",
            Error::Geometry(_) => "geometry",
            Error::Parameter(_) => "parameter",
            Error::Parse { .. } => "parse",
            Error::Consistency(_) => "consistency",
            Error::Shooting(_) => "shooting",
            Error::Refused(_) => "refused",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
