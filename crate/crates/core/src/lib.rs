//! Tag-weighted topic models (TWTM and its latent-tag extension TWDA) fitted
//! by variational EM, with parallel training, tag clustering and evaluation.

pub mod cluster;
pub mod config;
pub mod corpus;
mod em;
pub mod error;
pub mod eval;
mod inference;
pub mod matrix;
pub mod model;
pub mod numerics;
pub mod parallel;
pub mod persist;
pub mod stats;
pub mod twda;
pub mod twtm;

pub use config::{OptimizerConfig, TrainConfig};
pub use corpus::{Corpus, Document, TagMatrix, TagMode};
pub use em::{fit, fit_from, Trained};
pub use error::{Error, Result};
pub use inference::{DocFit, DocState};
pub use matrix::Matrix;
pub use model::{init_model, Model};
pub use stats::{PiRecord, SufficientStats};
