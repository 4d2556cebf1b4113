use thiserror::Error;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator must have dimension >= 1")]
    EmptyOperator,

    #[error("matrix is not Hermitian: max |A_ij - conj(A_ji)| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    Domain { eigenvalue: f64 },

    #[error("trace has imaginary residue {residue:e}")]
    ImaginaryTrace { residue: f64 },

    #[error("not a density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("relative entropy diverges: weight {weight:e} of the first argument lies on null eigendirection {direction} of the second")]
    SupportViolation { direction: usize, weight: f64 },

    #[error("parameter {name} = {value} outside its domain {domain}")]
    OutOfRange { name: &'static str, value: f64, domain: &'static str },

    #[error("invalid Pauli label {label:?}")]
    InvalidPauli { label: String },

    #[error("invalid measurement record: {reason}")]
    InvalidRecord { reason: String },

    #[error("expectation {index} = {value} exceeds the observable's spectral norm {norm}")]
    InfeasibleExpectation { index: usize, value: f64, norm: f64 },

    #[error("invalid solver configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("exponent eigenvalue {max_eigenvalue:e} exceeds the overflow cap {cap:e}")]
    ExponentOverflow { max_eigenvalue: f64, cap: f64 },

    #[error("oracle failed to reach feasibility: residual {residual:e} > {tolerance:e}")]
    OracleFailure { residual: f64, tolerance: f64 },

    #[error("degenerate attenuator configuration: normalization is zero")]
    DegenerateAttenuators,

    #[error("count record for setting {setting} has zero total")]
    EmptyCounts { setting: String },
}
