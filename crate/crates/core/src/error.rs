use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: String },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{0} does not fit in 64 bits")]
    Overflow(String),

    #[error("hypothesis of {prop} violated: {reason}")]
    HypothesisViolation { prop: String, reason: String },

    #[error("parameter shape does not match {prop}: {reason}")]
    InvalidParams { prop: String, reason: String },

    #[error("empty range for {0}")]
    EmptyRange(&'static str),

    #[error("series have different variable counts ({left} vs {right})")]
    MismatchedVars { left: usize, right: usize },

    #[error("constant term must be zero")]
    NonzeroConstantTerm,

    #[error("constant term must be one")]
    ConstantTermNotOne,

    #[error("variable index {index} out of range for {nvars} variables")]
    VariableOutOfRange { index: usize, nvars: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("charge vector {row} sums to {sum}, violating the Calabi-Yau condition")]
    CyViolation { row: usize, sum: i64 },

    #[error("charge vector {0} is identically zero")]
    ZeroRow(usize),

    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("condition (A) fails up to degree {degree}: counterexample {counterexample:?}")]
    ConditionAUnverified { degree: u32, counterexample: Vec<u32> },

    #[error("phase subset must be a nonempty subset of 1..={n}")]
    InvalidSubset { n: usize },

    #[error("requested degree {degree} exceeds series bound {bound}")]
    DegreeExceedsBound { degree: u32, bound: u32 },

    #[error("parse error: {0}")]
    Parse(String),
}
