use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid field degree {0}")]
    InvalidDegree(u32),
    #[error("field order {p}^{s} is too large")]
    FieldTooLarge { p: u32, s: u32 },
    #[error("modulus must have {expected} coefficients, got {got}")]
    ModulusLength { expected: usize, got: usize },
    #[error("modulus must be monic")]
    NotMonic,
    #[error("modulus is reducible over GF({0})")]
    Reducible(u32),
    #[error("polynomial has degree < 1")]
    DegeneratePolynomial,
    #[error("digit {digit} out of range for GF({p})")]
    DigitOutOfRange { digit: u64, p: u32 },
    #[error("expected {expected} digits, got {got}")]
    DigitCount { expected: usize, got: usize },
    #[error("element index {0} does not belong to this field")]
    ForeignElement(u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("operands come from different fields")]
    FieldMismatch,
    #[error("cyclotomic values of different orders ({0} vs {1})")]
    OrderMismatch(u32, u32),
    #[error("denominator {0} is not a power of p")]
    DenominatorNotPowerOfP(u64),
    #[error("basic element for index {index} has leading index {found:?}")]
    BasicLeadingIndex { index: i64, found: Option<i64> },
    #[error("element has a nonzero digit at index {0}, outside the expansion window")]
    OutsideWindow(i64),
    #[error("shift has a nonzero digit at index {0} >= 0")]
    NotAShift(i64),
    #[error("character has a nonzero exponent at index {index} >= {bound}")]
    OutsideAnnihilator { index: i64, bound: i64 },
    #[error("malformed coset: {0}")]
    MalformedCoset(String),
    #[error("parent map: {0}")]
    InvalidTree(String),
    #[error("tree contains a cycle through vertex {0}")]
    Cycle(String),
    #[error("prufer sequence must have length {expected}, got {got}")]
    PruferLength { expected: usize, got: usize },
    #[error("enumeration of {count} trees exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("({i}) -> ({j}) is not an edge of the tree")]
    NotAnEdge { i: String, j: String },
    #[error("mask does not match tree: {0}")]
    TreeMaskMismatch(String),
    #[error("mask product is nonzero on the annulus at coset [{0}]")]
    AnnulusNonzero(String),
    #[error("mask value at the trivial coset is {0}, expected 1")]
    MaskNormalization(String),
    #[error("quotient grid with {0} cells is too large")]
    GridTooLarge(u128),
    #[error("step functions live on different grids")]
    GridMismatch,
    #[error("grid view requires s = 2, field has s = {0}")]
    GridViewUnsupported(u32),
    #[error("invalid json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
