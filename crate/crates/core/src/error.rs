use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty vocabulary: no word occurs at least {min_count} times")]
    EmptyVocabulary { min_count: u64 },

    /// A precondition on an argument or input value does not hold.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("training diverged in epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("power-law fit failed: {0}")]
    FitFailure(String),

    #[error("quadrature did not converge: total mass {mass:.6} outside [0.999, 1.001]; increase the number of quadrature nodes")]
    Quadrature { mass: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True for errors caused by reading or decoding files rather than by
    /// the numerical content of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse { .. })
    }
}
