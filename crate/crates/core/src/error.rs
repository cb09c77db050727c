use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::sim::MAX_QUBITS)]
    QubitCount(usize),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("template {template_id} with {layers} layer(s) takes {expected} parameters, got {got}")]
    Arity {
        template_id: u32,
        layers: u32,
        expected: usize,
        got: usize,
    },

    #[error("unknown circuit template {0} (valid ids are 1..=19)")]
    UnknownTemplate(u32),

    #[error("unknown dataset id {0:?}")]
    UnknownDataset(String),

    #[error("oracle supports at most {max} qubits, got {got}")]
    OracleSize { max: usize, got: usize },

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("missing descriptor for template {template_id} with {layers} layer(s)")]
    Join { template_id: u32, layers: u32 },

    #[error("incomplete design: {0}")]
    IncompleteDesign(String),

    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
