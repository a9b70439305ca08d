use thiserror::Error;

/// Errors raised while building or combining operators, devices and multimeters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dimension {requested} exceeds the cap of {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("normalization violated: {0}")]
    Normalization(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("outcome labels do not align: {0}")]
    Alignment(String),

    #[error("observable is not sharp: {0}")]
    Sharpness(String),

    #[error("operator is not unitary: {0}")]
    Unitarity(String),

    #[error("operator is not an isometry: {0}")]
    Isometry(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("invalid measurement model: {0}")]
    Model(String),

    #[error("unknown builtin `{0}`")]
    Lookup(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
