use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("lookup error: token id {id} out of range for vocabulary of {vocab}")]
    Lookup { id: usize, vocab: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("label error: label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("value error at line {line}: {msg}")]
    Value { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("point rejected: {0}")]
    PointRejected(String),
    #[error("unknown operation: {0}")]
    UnknownOp(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
