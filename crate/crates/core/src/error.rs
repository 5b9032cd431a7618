use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error{}: {message}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("length assignment does not cover {} word(s): {}", missing.len(), missing.join(", "))]
    Coverage { missing: Vec<String> },

    #[error("word not in codebook: {0:?}")]
    Lookup(String),

    #[error("corrupt code stream at symbol offset {offset}: {message}")]
    CorruptStream { offset: usize, message: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("numeric failure for word {word:?}: {message}")]
    Numeric { word: String, message: String },

    #[error("refusing exhaustive search: {0}")]
    TooLarge(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation { line: None, message: message.into() }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Process exit code: 1 usage, 2 data/validation, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) | Error::Contract(_) | Error::TooLarge(_) => 1,
            Error::Numeric { .. } => 3,
            _ => 2,
        }
    }
}

/// Attaches a pipeline stage name to errors.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
