use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vocabulary has {n} symbols but matrix declares {v}")]
    VocabSizeMismatch { n: usize, v: usize },

    #[error("symbol {0:?} is not in the vocabulary")]
    UnknownSymbol(char),

    #[error("blank symbol must appear exactly once (found {0})")]
    BlankCount(usize),

    #[error("duplicate symbol {0:?} in vocabulary")]
    DuplicateSymbol(char),

    #[error("negative probability {value} at frame {frame}, symbol {symbol}")]
    NegativeEntry {
        frame: usize,
        symbol: usize,
        value: f64,
    },

    #[error("frame {frame} sums to {sum}, outside [1-{tol}, 1+{tol}]")]
    RowSumOutOfTolerance { frame: usize, sum: f64, tol: f64 },

    #[error("matrix has {got} entries, expected {expected} (T={t} x V={v})")]
    MatrixShape {
        got: usize,
        expected: usize,
        t: usize,
        v: usize,
    },

    #[error("smoothing constant must be positive, got {0}")]
    NonPositiveEps(f64),

    #[error("cannot align {len} labels (needs {needed} frames) onto {frames} frames")]
    InfeasibleAlignment {
        len: usize,
        needed: usize,
        frames: usize,
    },

    #[error("transcript is empty after normalization")]
    EmptyTranscript,

    #[error("alignment covers {alignment} frames but matrix has {frames}")]
    AlignmentLengthMismatch { alignment: usize, frames: usize },

    #[error("{words} words but {confidences} confidence values")]
    ConfidenceCountMismatch { words: usize, confidences: usize },

    #[error("parameter {name} = {value} outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("N-best list is empty")]
    EmptyNBest,

    #[error("reference and hypothesis lists differ in length ({refs} vs {hyps})")]
    CorpusLengthMismatch { refs: usize, hyps: usize },

    #[error("reference corpus has no tokens")]
    EmptyReferenceCorpus,

    #[error("grid for {0} is empty")]
    EmptyGrid(&'static str),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),

    #[error("bad magic bytes (expected {expected:?})")]
    BadMagic { expected: &'static str },

    #[error("unsupported {kind} format version {got} (supported: {supported})")]
    UnsupportedVersion {
        kind: &'static str,
        got: u16,
        supported: u16,
    },

    #[error("file truncated or dimension mismatch while reading {0}")]
    Truncated(&'static str),

    #[error("utterance {0:?} missing from {1}")]
    MissingUtterance(String, String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
