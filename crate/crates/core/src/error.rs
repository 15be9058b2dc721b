use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LuError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported qubit count {0} (supported: 1..=12)")]
    UnsupportedQubitCount(usize),
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid qubit subset {subset:?} for {n} qubits")]
    InvalidSubset { subset: Vec<usize>, n: usize },
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix has negative eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("wrong dimension: expected {expected}, found {found}")]
    WrongDimension {
        expected: &'static str,
        found: usize,
    },
    #[error("rotation is not proper orthogonal (det {det})")]
    NotRotation { det: f64 },
    #[error("single-qubit marginals are not maximally mixed")]
    NotMaximallyMixed,
    #[error("reduced state of qubit {0} is maximally mixed; Schmidt split is degenerate")]
    DegenerateSplit(usize),
    #[error("state is not generic: qubit {0} has a maximally mixed marginal")]
    NonGenericState(usize),
    #[error("input bases are not maximally entangled orthonormal bases")]
    NotMaximallyEntangledBasis,
    #[error("unknown catalog family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, LuError>;
