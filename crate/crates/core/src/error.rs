use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (index out of range, bad config value).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A point was evaluated where the field is not defined (inside an object, at a source).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("free-space Green's function is singular at the source point {0:?}")]
    Singularity((f64, f64)),

    #[error("boundary system is numerically singular (pivot-ratio condition estimate {condition:.3e})")]
    SolverFailure { condition: f64 },

    #[error("partial-wave series did not converge after {terms} terms")]
    OracleNonConvergence { terms: usize },

    #[error("shape generation failed: {0}")]
    ShapeGeneration(String),

    #[error("channel image assembly is missing channel (source {source_index}, band {band})")]
    MissingChannel { source_index: usize, band: usize },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    /// A stage's input is absent because an earlier stage has not run.
    #[error("missing {path}: run the `{stage}` stage first")]
    MissingInput { stage: &'static str, path: PathBuf },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("task failed for object {object}, source {source_index}, band {band}, omega {omega:.3}: {cause}")]
    Task {
        object: String,
        source_index: usize,
        band: usize,
        omega: f64,
        cause: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
