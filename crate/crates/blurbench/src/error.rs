use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("bad magic number, expected {expected}")]
    BadMagic { expected: &'static str },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    Maxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0}")]
    Image(#[from] blurbench_core::Error),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Record { line: u64, message: String },
    #[error("unexpected CSV header `{found}`, expected `{expected}`")]
    CsvHeader { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] blurbench_core::Error),
}
