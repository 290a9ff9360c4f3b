use std::path::PathBuf;

use relex_core::balance::BalanceError;
use relex_core::sentencize::UncontainedMention;
use relex_core::{CorpusError, EnsembleError, EvalError, MergeError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {source}", path.display())]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{}:{line}: {message}", path.display())]
    Record { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Sentences(#[from] UncontainedMention),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Process exit code: 1 for usage and configuration mistakes, 2 for
    /// everything caused by the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub trait StageContext<T> {
    /// Prefixes an error with the pipeline stage that raised it.
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> StageContext<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e.into()) })
    }
}
