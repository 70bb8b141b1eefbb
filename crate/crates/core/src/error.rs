use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("nonlocality k = {k} must lie in [1, log2 N = {max}]")]
    BadNonlocality { k: usize, max: usize },
    #[error("layer count must be positive")]
    NoLayers,
    #[error("measurement rate {0} outside [0, 1]")]
    BadRate(f64),
    #[error("layer {layer} outside 1..={n_layers}")]
    LayerOutOfRange { layer: usize, n_layers: usize },
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("two-qubit gate needs distinct qubits, got ({0}, {0})")]
    SameQubit(usize),
    #[error("subregions overlap")]
    Overlap,
    #[error("duplicate qubit {0} in region")]
    DuplicateQubit(usize),
    #[error("reference size {n_reference} exceeds system size {n_system}")]
    ReferenceTooLarge { n_system: usize, n_reference: usize },
    #[error("schedule has {schedule} qubits but the tableau only {tableau}")]
    SizeMismatch { schedule: usize, tableau: usize },
    #[error("layer {0} is not a perfect matching of the qubits")]
    NotAMatching(usize),
    #[error("gate matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("gate matrix has dimension {got}, expected {expected}")]
    BadGateShape { got: usize, expected: usize },
    #[error("forced outcome has zero probability")]
    ImpossibleOutcome,
    #[error("dense states are limited to {max} qubits, got {got}")]
    TooManyQubits { got: usize, max: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("p = {0} is not on the grid tracked by the sweep")]
    UntrackedGridPoint(f64),
    #[error("second moment is zero; Binder cumulant undefined")]
    ZeroSecondMoment,
    #[error("curve has no unique peak")]
    NoPeak,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("argument outside the bound's domain: {0}")]
    Domain(String),
    #[error("need at least {need} distinct sizes, got {got}")]
    TooFewSizes { need: usize, got: usize },
    #[error("curves do not overlap in p")]
    NoOverlap,
    #[error("curves for N = {0} and N = {1} never change order")]
    NoCrossing(usize, usize),
    #[error("invalid curve: {0}")]
    BadCurve(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("value must be positive for a power-law fit")]
    NonPositive,
    #[error("bisection bracket has no sign change")]
    NoSignChange,
}

pub type Result<T> = std::result::Result<T, Error>;
