use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QzkError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("duplicate wire {0}")]
    DuplicateWire(usize),
    #[error("wire {wire} outside a layout of {total} qubits")]
    WireOutOfRange { wire: usize, total: usize },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),
    #[error("gate {index} is not unitary (deviation {deviation:.3e})")]
    NotUnitary { index: usize, deviation: f64 },
    #[error("invalid quantum state: {0}")]
    InvalidState(String),
    #[error("{what} needs {qubits} qubits, cap is {cap}")]
    CapExceeded { what: String, qubits: usize, cap: usize },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Context { context: String, source: Box<QzkError> },
}

impl QzkError {
    /// Prefixes the error with where it occurred.
    pub fn context(self, context: impl Into<String>) -> Self {
        QzkError::Context { context: context.into(), source: Box::new(self) }
    }

    /// The error without its context layers.
    pub fn root(&self) -> &QzkError {
        match self {
            QzkError::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, QzkError>;
