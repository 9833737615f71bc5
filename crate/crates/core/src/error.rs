use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole hit: {0}")]
    Pole(String),
    #[error("insufficient sampling resolution: {0}")]
    Resolution(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("coefficient scale out of range: {0}")]
    Scale(String),
    #[error("prefix not bracketed: {0}")]
    NotBracketed(String),
    #[error("invalid input: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
