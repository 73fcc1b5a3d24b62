use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not a projector: {0}")]
    NotProjector(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),
    #[error("register `{0}` is not in |0>")]
    NotFresh(String),
    #[error("qubit budget exceeded: {requested} qubits requested, cap is {cap}")]
    QubitBudget { requested: usize, cap: usize },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("empty spectrum: decomposition has no block carrying a range vector of the first projector")]
    EmptySpectrum,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid database: {0}")]
    InvalidDatabase(String),
    #[error("wrong oracle mode: {0}")]
    WrongMode(String),
    #[error("incompatible oracle mode: {0}")]
    IncompatibleMode(String),
    #[error("banknote shape mismatch: expected {expected} qubits, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
