use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("corpus contains no documents")]
    EmptyCorpus,

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error(
        "document '{doc}' has no usable tags; TWTM needs at least one tag per document \
         (train with the TWDA model to handle untagged documents)"
    )]
    UntaggedDocument { doc: String },

    #[error("{function} is undefined at x = {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite objective or gradient at coordinate {coordinate} (value {value})")]
    NonFinite { coordinate: usize, value: f64 },

    #[error("Newton-Raphson did not converge after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NewtonDiverged { iterations: usize, grad_norm: f64 },

    #[error("non-finite ELBO for document '{doc}'")]
    NonFiniteElbo { doc: String },

    #[error("word {word} of document '{doc}' has no probability mass under any topic")]
    DegenerateGamma { doc: String, word: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("worker for shard {shard} failed: {source}")]
    Worker {
        shard: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
