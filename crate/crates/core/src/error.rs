use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("stale state: {0}")]
    StaleState(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    ///
    /// Input, schema and usage problems map to 2; numeric failures
    /// (non-convergence, singular information) map to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::Singular(_) => 3,
            _ => 2,
        }
    }

    /// Prefix a schema path with an enclosing field name.
    pub(crate) fn under(self, field: &str) -> Self {
        match self {
            Error::Schema { path, message } => Error::Schema {
                path: if path.is_empty() {
                    field.to_string()
                } else {
                    format!("{field}.{path}")
                },
                message,
            },
            Error::InvalidInput(message) => Error::Schema {
                path: field.to_string(),
                message,
            },
            other => other,
        }
    }
}

/// Deserialize JSON, reporting the path of the first offending field.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let outer = e.path().to_string();
        let outer = if outer == "." { String::new() } else { outer };
        let message = e.into_inner().to_string();
        // Validation inside a nested type reports its own field path.
        let nested = message
            .strip_prefix("schema violation at `")
            .and_then(|rest| rest.split_once("`: "));
        match nested {
            Some((inner, msg)) => {
                let path = match (outer.is_empty(), inner.is_empty()) {
                    (true, _) => inner.to_string(),
                    (false, true) => outer,
                    (false, false) => format!("{outer}.{inner}"),
                };
                Error::schema(path, msg)
            }
            None => Error::schema(outer, message),
        }
    })
}
