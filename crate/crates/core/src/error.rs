use thiserror::Error;

pub type Result<T> = std::result::Result<T, HodgeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodgeError {
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("tuple has length {got}, expected {expected}")]
    TupleLength { expected: usize, got: usize },
    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },
    #[error("skeleton has no level {0}")]
    MissingLevel(usize),
    #[error("level {0} of the skeleton is empty")]
    EmptyLevel(usize),
    #[error("down Laplacian is undefined at level 0")]
    DownAtLevelZero,
    #[error("wedge of levels {left} and {right} needs {arity} points, brute force is capped at 8")]
    WedgeTooLarge { left: usize, right: usize, arity: usize },
    #[error("skeleton is not downward closed: {tuple:?} is missing its face {face:?}")]
    NotDownwardClosed { tuple: Vec<usize>, face: Vec<usize> },
    #[error("weight {weight} of tuple {tuple:?} is not strictly positive")]
    NonPositiveWeight { tuple: Vec<usize>, weight: f64 },
    #[error("tuple {0:?} is not strictly increasing")]
    NotCanonical(Vec<usize>),
    #[error("vertex {0} is isolated, degree weights are singular")]
    IsolatedVertex(usize),
    #[error("diffusion time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("at least one function is required")]
    NoFunctions,
    #[error("function value {value} at point {index} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("function has {got} values, expected {expected}")]
    FunctionLength { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("quadrature grid too coarse: refinement changed value by {rel_change:e} (relative)")]
    GridTooCoarse { rel_change: f64 },
    #[error("eigensolver did not converge; residual norms {residuals:?}")]
    NotConverged { residuals: Vec<f64> },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for HodgeError {
    fn from(e: std::io::Error) -> Self {
        HodgeError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HodgeError {
    fn from(e: serde_json::Error) -> Self {
        HodgeError::Parse(e.to_string())
    }
}
