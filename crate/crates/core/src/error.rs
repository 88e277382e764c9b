use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{kind} needs at least {min} sites, got {got}")]
    TooFewSites {
        kind: &'static str,
        min: usize,
        got: usize,
    },

    #[error("graph with {0} sites is too large for exhaustive path enumeration (max 12)")]
    GraphTooLarge(usize),

    #[error("invalid register: {0}")]
    InvalidRegister(String),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("single-qubit operator must be 2x2, got {0}x{1}")]
    NotSingleQubit(usize, usize),

    #[error("Heisenberg term needs two distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("register mismatch between operands")]
    RegisterMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("incoherent coupling requires an ancilla wired to the system")]
    MissingAncilla,

    #[error("basis subspace is not invariant under the generator")]
    NotInvariant,

    #[error("superoperator of dimension {dim}^2 exceeds the guard (dim <= {max})")]
    SuperoperatorTooLarge { dim: usize, max: usize },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("density matrix invariant violated at t = {t}: {what} = {value:e}")]
    InvariantViolation { t: f64, what: &'static str, value: f64 },

    #[error("steady state is not unique (null space dimension {0})")]
    SteadyStateNotUnique(usize),

    #[error("no steady state found in the null space")]
    NoSteadyState,

    #[error("long-time integration did not converge by t = {horizon} (residual {residual:e})")]
    HorizonExceeded { horizon: f64, residual: f64 },

    #[error("linear system of size {size} exceeds the dense solver limit {max}")]
    SolverTooLarge { size: usize, max: usize },

    #[error("register has no sink qubit")]
    NoSink,

    #[error("register has no ancilla qubits")]
    NoAncilla,

    #[error("witness pair is degenerate: initial probe distance is zero")]
    DegeneratePair,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),
}
