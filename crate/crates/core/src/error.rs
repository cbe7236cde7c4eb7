use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),

    #[error("scenario generation failed after {attempts} attempts: {diagnostics}")]
    Generation { attempts: usize, diagnostics: String },

    #[error("instance too large for exhaustive search: {evaluations:.3e} assignments exceed cap {cap:.3e}; use the mcmf labeler instead")]
    SizeCap { evaluations: f64, cap: f64 },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl Into<f64>) -> Self {
        Error::Domain {
            what,
            value: value.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by invalid settings or requests.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::SizeCap { .. } | Error::Domain { .. })
    }

    /// True for errors caused by bad input data rather than bad configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Version { .. } | Error::Invariant(_) | Error::Structural(_) | Error::Io { .. }
        )
    }
}
