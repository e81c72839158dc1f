use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate example id {0:?}")]
    DuplicateId(String),

    #[error("example {id:?} fills case {case:?} more than once")]
    DuplicateCase { id: String, case: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown verb {0:?}")]
    UnknownVerb(String),

    #[error("verb {0:?} has no senses")]
    NoSenses(String),

    #[error("sense {sense:?} of {verb:?} does not take case {case:?}")]
    CaseNotInFrame {
        verb: String,
        sense: String,
        case: String,
    },

    #[error("{sense:?} is not a sense of {verb:?}")]
    InvalidSense { verb: String, sense: String },

    #[error("example {0:?} is not in the pool")]
    NotInPool(String),

    #[error("the pool is empty")]
    EmptyPool,

    #[error("example {0:?} has no gold sense")]
    MissingGold(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
