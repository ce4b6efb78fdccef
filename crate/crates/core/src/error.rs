use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("duplicate score for query `{query}` and document `{doc}`")]
    DuplicatePair { query: String, doc: String },

    #[error("vector for `{id}` has dimension {found}, expected {expected}")]
    Dimension {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("index file version {found} is not supported (expected {expected})")]
    IndexVersion { expected: u32, found: u32 },

    #[error("index file is corrupt: {0}")]
    IndexIntegrity(String),

    #[error("no feedback documents")]
    NoFeedbackDocuments,

    #[error("missing vector for `{0}`")]
    MissingVector(String),

    #[error("vector for `{0}` has zero norm")]
    ZeroNorm(String),

    #[error("missing reranker score for query `{query}` and document `{doc}`")]
    MissingScore { query: String, doc: String },

    #[error("empty run")]
    EmptyRun,

    #[error("query `{0}` has no relevance judgments")]
    MissingJudgments(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query `{query}`")]
    Query {
        query: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_query(self, query: &str) -> Self {
        Error::Query {
            query: query.to_owned(),
            source: Box::new(self),
        }
    }
}
