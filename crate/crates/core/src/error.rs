use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input domain: {0}")]
    Domain(String),
    #[error("non-positive weight: {0}")]
    Positivity(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("symmetry: {0}")]
    Symmetry(String),
    #[error("structure: {0}")]
    Structure(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("degenerate trial function: {0}")]
    Degenerate(String),
    #[error("stale data: {0}")]
    Stale(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
