use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("denominator vanishes at s = 0")]
    ZeroConstantDenominator,
    #[error("polynomial of degree 0 has no roots")]
    ConstantPolynomial,
    #[error("argument {value} leaves the validity radius {radius}")]
    DomainViolation { value: f64, radius: f64 },
    #[error("quadratic has complex roots (discriminant {discriminant})")]
    ComplexRoots { discriminant: f64 },
    #[error("found {found} real roots of a degree-{degree} polynomial")]
    NotAllRealRoots { found: usize, degree: usize },
    #[error("denominator has repeated roots")]
    RepeatedRoots,
    #[error("root {root} lies inside the closed unit disk")]
    RootInsideDisk { root: f64 },
    #[error("negative probability {value} at m = {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("decomposition has no geometric terms")]
    NoGeometricTerms,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("validity violated: {constraint} (margin {margin:e})")]
    ValidityViolation { constraint: String, margin: f64 },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
