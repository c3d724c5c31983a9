use serde_json::json;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("numerical precondition failed: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, messages) = match self {
            CliError::Config(m) => ("config", m.clone()),
            CliError::Numerical(m) => ("numerical", vec![m.clone()]),
            CliError::Io(m) => ("io", vec![m.clone()]),
        };
        json!({ "error": { "kind": kind, "exit_code": self.exit_code(), "messages": messages } })
    }
}

impl From<nonparaxial::Error> for CliError {
    fn from(e: nonparaxial::Error) -> Self {
        match e {
            nonparaxial::Error::Config(m) => CliError::Config(vec![m]),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
