use std::path::PathBuf;

use minosc_core::Error as CoreError;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("configuration error: {0}")]
    Usage(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} acceptance criteria failed")]
    Verify(usize),
}

pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_NO_OSCILLATION: i32 = 4;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Core(e) => match e {
                CoreError::Config(_)
                | CoreError::Parse { .. }
                | CoreError::Io(_)
                | CoreError::Json(_)
                | CoreError::Precondition(_) => EXIT_CONFIG,
                CoreError::NoOscillation(_) => EXIT_NO_OSCILLATION,
                _ => EXIT_NUMERIC,
            },
        }
    }
}
