use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sspmi::Error),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    /// A core error raised while reading a particular file.
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: sspmi::Error },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 1 for domain errors, 2 for I/O, parse and usage errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::InFile { source: e, .. } => match e {
                sspmi::Error::Io(_) | sspmi::Error::Parse { .. } => 2,
                _ => 1,
            },
            CliError::File { .. } | CliError::Usage(_) => 2,
        }
    }
}
