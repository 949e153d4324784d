use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid inventory: {0}")]
    Inventory(String),
    #[error("invalid syllable {0:?}")]
    InvalidSyllable(String),
    #[error("{file}:{row}: {msg}")]
    Load {
        file: String,
        row: usize,
        msg: String,
    },
    #[error("radical {0} never serves as a phonetic radical")]
    UndefinedSaliency(String),
    #[error("invalid variant spec {spec:?}: {msg}")]
    Variant { spec: String, msg: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("non-finite loss at epoch {epoch}, step {step} (lr {lr:e})")]
    NonFiniteLoss { epoch: usize, step: usize, lr: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("vocabulary fingerprint mismatch ({which}): expected {expected}, found {found}")]
    Fingerprint {
        which: &'static str,
        expected: String,
        found: String,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
