use thiserror::Error;

/// Errors shared by all bellkit modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not Hermitian (defect {defect:.3e} > tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("trace is {trace:.17} instead of 1")]
    TraceNotOne { trace: f64 },

    #[error("operator is not a projector (defect {defect:.3e})")]
    NotAProjector { defect: f64 },

    #[error("effects do not sum to the identity (defect {defect:.3e})")]
    NotComplete { defect: f64 },

    #[error("map is not trace non-increasing (max eigenvalue of sum K'K is {max_eig:.17})")]
    NotTraceNonIncreasing { max_eig: f64 },

    #[error("POVM effect eigenvalue {value:.17} lies outside [0, 1]")]
    EffectOutOfRange { value: f64 },

    #[error("total dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("filter success probability {prob:.3e} is below tolerance")]
    DegenerateProbability { prob: f64 },

    #[error("eigenvector classification is ambiguous: <v|A1|v> = {value:.3e} sits inside the threshold band")]
    ToleranceClassification { value: f64 },

    #[error("distribution is invalid: {0}")]
    InvalidDistribution(String),

    #[error("functional has negative slack {slack:.3e} on deterministic strategy {strategy}")]
    NegativeSlack { slack: f64, strategy: usize },

    #[error("no deterministic strategy saturates the functional")]
    NoSaturatingPoint,

    #[error("success branch does not violate: signed score {score:.17} <= 1")]
    BranchNotViolating { score: f64 },

    #[error("score {score:.17} admits no group-size certificate (needs score > 1)")]
    NoGroupCertificate { score: f64 },

    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
