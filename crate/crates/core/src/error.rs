use std::path::PathBuf;

/// Errors produced by the bidding engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    IoAt {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no training data")]
    NoTrainingData,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature index {index} out of range for dimension {dim}")]
    FeatureOutOfRange { index: u32, dim: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss} (learning rate too high?)")]
    Diverged { epoch: usize, loss: f64 },

    #[error("AUC undefined: records need at least one positive and one negative label")]
    AucUndefined,

    #[error(
        "value table of {rows}x{cols} cells needs {bytes} bytes, above the {cap} byte cap; \
         solve a smaller sub-grid and use the neural approximation (`train-nn`) instead"
    )]
    MemoryCap {
        rows: usize,
        cols: usize,
        bytes: usize,
        cap: usize,
    },

    #[error("terminal state: no auctions remain (t = 0)")]
    TerminalState,

    #[error("state (t={t}, b={b}) outside the solved grid (T={t_max}, B={b_max})")]
    OutsideGrid {
        t: usize,
        b: u64,
        t_max: usize,
        b_max: u64,
    },

    #[error("enumeration too large for the exact oracle: {0} states")]
    ScaleGuard(usize),

    #[error("fewer than {episode_len} records: no full episode")]
    NoFullEpisode { episode_len: usize },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn format_err(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Format {
        what,
        detail: detail.into(),
    }
}
