pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("incompatible radicands: sqrt({0}) vs sqrt({1})")]
    FieldMismatch(u64, u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
