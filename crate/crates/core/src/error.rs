use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse instance document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bitstring has {got} bits but the model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("gate {0} acts twice on the same qubit")]
    DuplicateQubit(String),

    #[error("brute force over {0} variables exceeds the enumeration limit of {limit}", limit = crate::problem::BRUTE_FORCE_LIMIT)]
    TooManyVariables(usize),

    #[error("oracle optimum must be positive, got {0}")]
    NonPositiveOptimum(f64),

    #[error("instance admits no feasible selection")]
    Infeasible,

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error("malformed genome line `{0}`")]
    GenomeFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
