use std::path::Path;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Validation ran but at least one test rejected.
    pub const SOME_FAIL: i32 = 1;
    pub const ARGUMENT: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERIC: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pixaug_core::Error),
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: u64,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Argument(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use pixaug_core::Error as C;
        match self {
            Error::Core(C::Argument(_) | C::Config(_)) | Error::Argument(_) => exit::ARGUMENT,
            Error::Core(C::Numeric(_)) => exit::NUMERIC,
            Error::Core(_) | Error::Parse { .. } | Error::Format { .. } => exit::DATA,
            Error::Io { .. } => exit::IO,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
