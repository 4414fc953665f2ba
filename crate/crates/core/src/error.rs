use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QumvnError {
    #[error("a network needs at least one qubit")]
    ZeroQubits,
    #[error("expected a bit string of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("qubit {qubit} is outside 1..={qubits}")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("register {start}..={end} is invalid for {qubits} qubits")]
    InvalidRegister { start: usize, end: usize, qubits: usize },
    #[error("register of {0} qubits is wider than 63")]
    RegisterTooWide(usize),
    #[error("control and target are both qubit {0}")]
    ControlIsTarget(usize),
    #[error("control qubit {control} lies inside register {start}..={end}")]
    ControlInRegister { control: usize, start: usize, end: usize },
    #[error("layer {layer}: incoming edges of control qubit {qubit} differ between parent values")]
    UnequalControlEdges { layer: usize, qubit: usize },
    #[error("layer {layer}: nodes of qubit {qubit} have different child edges; H cannot stay in one layer")]
    UnequalChildEdges { layer: usize, qubit: usize },
    #[error("layer {layer}: register {start}..={end} is not in a definite basis state")]
    NonDefiniteRegister { layer: usize, start: usize, end: usize },
    #[error("{a} is not invertible modulo {modulus}")]
    NotCoprime { a: u64, modulus: u64 },
    #[error("modulus {modulus} does not fit a {width}-qubit register")]
    InvalidModulus { modulus: u64, width: usize },
    #[error("layer {layer}: register value {value} is not below the modulus {modulus}")]
    ValueOutOfRange { layer: usize, value: u64, modulus: u64 },
    #[error("the state was annihilated (remaining norm {0:e})")]
    Annihilated(f64),
    #[error("layer-select sampling requires pairwise disjoint layers")]
    OverlappingLayers,
    #[error("terminal spectrum unavailable: {0}")]
    SpectrumUnavailable(&'static str),
    #[error("{qubits} qubits exceeds the limit of {max}")]
    TooManyQubits { qubits: usize, max: usize },
    #[error("interference sampling of {layers} overlapping layers over {qubits} qubits exceeds the sampling budget")]
    SamplingBudget { layers: usize, qubits: usize },
    #[error("invalid bit string `{0}`")]
    BadBitString(String),
}

pub type Result<T> = std::result::Result<T, QumvnError>;
