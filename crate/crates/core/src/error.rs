use thiserror::Error;

/// Errors produced by the alignment engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("FASTA parse error at line {line}: {msg}")]
    Fasta { line: usize, msg: String },
    #[error("empty record '{0}'")]
    EmptyRecord(String),
    #[error("duplicate sequence id '{0}'")]
    DuplicateId(String),
    #[error("invalid sequence '{id}': {msg}")]
    InvalidSequence { id: String, msg: String },
    #[error("ragged alignment: row '{id}' has {len} columns, expected {expected}")]
    RaggedAlignment {
        id: String,
        len: usize,
        expected: usize,
    },
    #[error("missing sequence id '{0}'")]
    MissingId(String),
    #[error("unexpected sequence id '{0}'")]
    UnexpectedId(String),
    #[error("residues of '{0}' do not survive the gap round-trip")]
    ResidueMismatch(String),
    #[error("k-mer length mismatch: {left} vs {right}")]
    KmerLenMismatch { left: usize, right: usize },
    #[error("empty pool")]
    EmptyPool,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("substitution matrix error: {0}")]
    Matrix(String),
    #[error("inconsistent edit script: {0}")]
    InconsistentScript(String),
    #[error("invalid sample count {count} for {len} items")]
    SampleCount { count: usize, len: usize },
    #[error("expected {expected} sample ranks, got {got}")]
    PivotCount { expected: usize, got: usize },
    #[error("guide tree leaves do not match input ids: {0}")]
    TreeMismatch(String),
    #[error("consensus is empty: every column is majority-gap")]
    EmptyConsensus,
    #[error("external aligner failed: {0}")]
    ExternalAligner(String),
    #[error("need at least {p} sequences for {p} workers, got {n}")]
    InsufficientSequences { n: usize, p: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
