//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not a power of two between 2 and 16")]
    BadDimension(usize),
    #[error("matrix dimensions {0} and {1} do not match")]
    DimensionMismatch(usize, usize),
    #[error("{0} entries do not fill a {1}x{1} matrix")]
    BadEntryCount(usize, usize),
    #[error("tensor product dimension {0} exceeds the supported maximum of 16")]
    TensorTooLarge(usize),
    #[error("matrix is not hermitian (largest asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("operator has a negative eigenvalue ({0:.3e})")]
    NotPositive(f64),
    #[error("trace {0} differs from 1 beyond tolerance")]
    BadTrace(f64),
    #[error("state vector norm {0} differs from 1 beyond tolerance")]
    BadNorm(f64),
    #[error("probability {0} lies outside [0, 1]")]
    BadProbability(f64),
    #[error("damping rate {0} lies outside [0, 1]")]
    BadRate(f64),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("control and target both address qubit {0}")]
    ControlEqualsTarget(usize),
    #[error("gate {0} needs a control qubit")]
    MissingControl(&'static str),
    #[error("gate {0} does not take a control qubit")]
    UnexpectedControl(&'static str),
    #[error("gate {0} needs a rotation parameter")]
    MissingParameter(&'static str),
    #[error("gate {0} does not take a parameter")]
    UnexpectedParameter(&'static str),
    #[error("basis state index {index} out of range for dimension {dim}")]
    BasisOutOfRange { index: usize, dim: usize },
    #[error("bit value {0} is not 0 or 1")]
    BadBit(u8),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("parameter vector has length {actual}, expected {expected}")]
    ParamCount { expected: usize, actual: usize },
    #[error("trainable parameter indices skip index {0}")]
    MissingParamIndex(usize),
    #[error("parameter {index} is bound to {count} gates; the shift rule handles exactly one")]
    SharedParameter { index: usize, count: usize },
    #[error("no correction weights for measurement condition {0}")]
    MissingWeights(String),
    #[error("keep list selects no qubits or repeats a qubit")]
    BadKeepList,
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("kraus operators do not sum to the identity (deviation {0:.3e})")]
    IncompleteKraus(f64),
    #[error("target fidelity {target} is out of reach; attainable bound is {bound}")]
    TargetOutOfReach { target: f64, bound: f64 },
    #[error("bisection bracket [{0}, {1}] does not enclose the target")]
    NoBracket(f64, f64),
    #[error("{0} must be positive")]
    NotPositiveCount(&'static str),
    #[error("config: {0}")]
    Config(String),
    #[error("internal consistency check failed: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
