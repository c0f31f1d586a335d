use thiserror::Error;

#[derive(Debug, Error)]
pub enum KitError {
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("unknown suite `{0}` (expected one of: {list})", list = crate::suites::SUITES.join(", "))]
    UnknownSuite(String),
    #[error("bad parameter `{key}`: {reason}")]
    BadParam { key: String, reason: String },
    #[error("invalid group definition: {0}")]
    Group(String),
    #[error("invalid input file {path}: {reason}")]
    Input { path: String, reason: String },
    #[error("{0}")]
    Suite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl KitError {
    pub fn bad_param(key: &str, reason: impl Into<String>) -> Self {
        KitError::BadParam { key: key.to_string(), reason: reason.into() }
    }

    /// Process exit status: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            KitError::UnknownGroup(_)
            | KitError::UnknownSuite(_)
            | KitError::BadParam { .. }
            | KitError::Group(_)
            | KitError::Input { .. } => 2,
            _ => 1,
        }
    }
}
