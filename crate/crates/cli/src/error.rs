use thiserror::Error;

/// Ways a scenario can be rejected before any run executes.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("reference error: {0}")]
    Reference(String),

    #[error("dimension error: {0}")]
    Dimension(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ScenarioError::Io { .. } | ScenarioError::Parse { .. } | ScenarioError::Validation(_) => 2,
            ScenarioError::Reference(_) => 3,
            ScenarioError::Dimension(_) => 4,
        }
    }

    /// Classifies a library error raised while building `what`.
    pub fn from_core(what: &str, err: progmeter::Error) -> Self {
        use progmeter::Error as E;
        let message = format!("{what}: {err}");
        match err {
            E::Shape(_) | E::DimensionCap { .. } => ScenarioError::Dimension(message),
            E::Lookup(_) => ScenarioError::Reference(message),
            _ => ScenarioError::Validation(message),
        }
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(err: serde_json::Error) -> Self {
        let (line, column) = (err.line(), err.column());
        let full = err.to_string();
        let message = full
            .strip_suffix(&format!(" at line {line} column {column}"))
            .unwrap_or(&full)
            .to_string();
        ScenarioError::Parse { line, column, message }
    }
}
