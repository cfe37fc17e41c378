use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed tree: {0}")]
    Structural(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("statistical failure: {0}")]
    Statistical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
