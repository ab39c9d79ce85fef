use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for the log-space gradient ascent used for ξ and π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_inner_iters: usize,
    /// Stop once the max-norm of the gradient (in the original coordinates) falls below this.
    pub abs_grad_tol: f64,
    pub backtrack_factor: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_inner_iters: 200,
            abs_grad_tol: 1e-6,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            max_halvings: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_inner_iters must be positive".into(),
            ));
        }
        if !(self.abs_grad_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "abs_grad_tol must be positive".into(),
            ));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument(
                "backtrack_factor must lie in (0, 1)".into(),
            ));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidArgument(
                "initial_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn enabled() -> bool {
    true
}

/// Everything that controls a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_topics: usize,
    pub seed: u64,
    /// Relative ELBO change that ends the EM loop.
    pub tol: f64,
    pub max_iters: usize,
    pub pi_init: f64,
    pub mu_init: f64,
    /// Relative doc-ELBO change that ends the per-document coordinate ascent.
    /// Zero runs every round up to `e_step_max_rounds`.
    pub e_step_tol: f64,
    pub e_step_max_rounds: usize,
    /// Start each document's E-step from its state in the previous EM
    /// iteration. Off, every E-step starts from the prior (ξ = T·π, ρ near μ)
    /// and the coordinate ascent may settle in a different local optimum.
    #[serde(default = "enabled")]
    pub warm_start: bool,
    pub newton_max_iters: usize,
    pub newton_tol: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_topics: 10,
            seed: 0,
            tol: 1e-4,
            max_iters: 100,
            pi_init: 1.0,
            mu_init: 1.0,
            e_step_tol: 1e-6,
            e_step_max_rounds: 50,
            warm_start: true,
            newton_max_iters: 100,
            newton_tol: 1e-8,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_topics(num_topics: usize) -> Self {
        Self {
            num_topics,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::InvalidArgument(
                "number of topics must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if !(self.pi_init > 0.0) || !(self.mu_init > 0.0) {
            return Err(Error::InvalidArgument(
                "pi_init and mu_init must be positive".into(),
            ));
        }
        if !(self.e_step_tol >= 0.0) {
            return Err(Error::InvalidArgument(
                "e_step_tol must be nonnegative".into(),
            ));
        }
        if self.e_step_max_rounds == 0 {
            return Err(Error::InvalidArgument(
                "e_step_max_rounds must be positive".into(),
            ));
        }
        self.optimizer.validate()
    }
}
