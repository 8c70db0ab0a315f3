use thiserror::Error;

use crate::container::ContainerError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("kernel evaluation failed: {0}")]
    Kernel(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

pub type Result<T> = std::result::Result<T, Error>;
