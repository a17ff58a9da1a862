use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The input document could not be parsed at all.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    /// A stopping time or randomized strategy violates its invariants.
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    /// An object was built for a different tree than the one it is used with.
    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration budget exceeded: tree has {nodes} decision nodes, budget is {budget}")]
    BudgetExceeded { nodes: usize, budget: usize },
}

impl Error {
    /// True for errors raised while reading a document, as opposed to
    /// errors raised by validating its content.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse(_))
    }
}
