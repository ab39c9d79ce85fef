//! Special functions and the small optimizers shared by the inference code.

mod dirichlet;
mod optimize;
mod special;

pub use dirichlet::{dirichlet_mle_gradient, dirichlet_mle_objective, newton_dirichlet};
pub use optimize::{maximize_positive, Maximum};
pub use special::{digamma, log_gamma, tetragamma, trigamma};

pub(crate) use optimize::newton_refine;
pub(crate) use special::{lgamma, psi, psi1, psi2};
