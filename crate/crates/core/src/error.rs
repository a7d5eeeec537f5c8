use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown built-in type `{0}`")]
    UnknownType(String),

    #[error("type `{0}` contains itself")]
    TypeCycle(String),

    #[error("coverage table line {line}: {message}")]
    CoverageTable { line: usize, message: String },

    #[error("malformed XML in {document}: {message}")]
    MalformedXml { document: String, message: String },

    #[error("unresolved message `{message}` referenced by operation `{operation}`")]
    UnresolvedMessage { operation: String, message: String },

    #[error("unresolved type `{name}` referenced by {context}")]
    UnresolvedType { name: String, context: String },

    #[error("unresolved element `{name}` referenced by {context}")]
    UnresolvedElement { name: String, context: String },

    #[error("invalid WSDL {document}: {message}")]
    InvalidWsdl { document: String, message: String },

    #[error("invalid BPEL {document}: {message}")]
    InvalidBpel { document: String, message: String },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("oracle range exceeded: {construct} supports n in 1..={max}, got {n}")]
    OracleRange {
        construct: &'static str,
        n: usize,
        max: usize,
    },

    #[error("statistics: {0}")]
    Stats(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
