use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TagMode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Floor applied to logs of probabilities that may be exactly zero.
/// Floor for logarithms of zero probabilities: ln(1e-300).
pub const LOG_FLOOR: f64 = -690.7755278982137;

/// Parameters of a trained (or initialized) tag-weighted topic model.
///
/// Both variants share θ (L × K), ψ (K × V), η (length L) and the tag-weight
/// prior π. In the latent-tag variant π has one extra trailing coordinate for
/// the latent tag and μ holds the Dirichlet prior of its topic distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParts", into = "ModelParts")]
pub struct Model {
    kind: TagMode,
    theta: Matrix,
    psi: Matrix,
    pi: Vec<f64>,
    eta: Vec<f64>,
    mu: Option<Vec<f64>>,
    log_theta: Matrix,
    log_psi: Matrix,
}

#[derive(Serialize, Deserialize)]
struct ModelParts {
    kind: TagMode,
    theta: Matrix,
    psi: Matrix,
    pi: Vec<f64>,
    eta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
}

impl From<Model> for ModelParts {
    fn from(m: Model) -> Self {
        Self {
            kind: m.kind,
            theta: m.theta,
            psi: m.psi,
            pi: m.pi,
            eta: m.eta,
            mu: m.mu,
        }
    }
}

impl TryFrom<ModelParts> for Model {
    type Error = Error;

    fn try_from(p: ModelParts) -> Result<Self> {
        Model::from_parts(p.kind, p.theta, p.psi, p.pi, p.eta, p.mu)
    }
}

/// Draws θ and ψ rows from a symmetric Dirichlet(1) and fills π with
/// `pi_init`. η starts at 0.5 and μ (latent-tag variant) at `mu_init`.
pub fn init_model(
    kind: TagMode,
    num_topics: usize,
    num_tags: usize,
    vocab_size: usize,
    seed: u64,
    pi_init: f64,
    mu_init: f64,
) -> Result<Model> {
    if num_topics == 0 || vocab_size == 0 {
        return Err(Error::InvalidArgument("K and V must be at least 1".into()));
    }
    if kind == TagMode::Twtm && num_tags == 0 {
        return Err(Error::InvalidArgument(
            "a TWTM model needs at least one tag".into(),
        ));
    }
    if !(pi_init > 0.0 && mu_init > 0.0) {
        return Err(Error::InvalidArgument(
            "pi_init and mu_init must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| {
        let data: Vec<f64> = (0..rows * cols).map(|_| Exp1.sample(&mut rng)).collect();
        let mut m = Matrix::from_vec(rows, cols, data).expect("sized");
        m.normalize_rows(0.0);
        m
    };
    let theta = draw(num_tags, num_topics);
    let psi = draw(num_topics, vocab_size);
    let pi_len = match kind {
        TagMode::Twtm => num_tags,
        TagMode::Twda => num_tags + 1,
    };
    let mu = (kind == TagMode::Twda).then(|| vec![mu_init; num_topics]);
    Model::from_parts(
        kind,
        theta,
        psi,
        vec![pi_init; pi_len],
        vec![0.5; num_tags],
        mu,
    )
}

impl Model {
    pub fn from_parts(
        kind: TagMode,
        theta: Matrix,
        psi: Matrix,
        pi: Vec<f64>,
        eta: Vec<f64>,
        mu: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (l, k) = (theta.rows(), theta.cols());
        if psi.rows() != k || k == 0 || psi.cols() == 0 {
            return Err(Error::Dimension(format!(
                "theta is {l}x{k} but psi is {}x{}",
                psi.rows(),
                psi.cols()
            )));
        }
        let pi_len = if kind == TagMode::Twda { l + 1 } else { l };
        if pi.len() != pi_len || eta.len() != l {
            return Err(Error::Dimension(format!(
                "expected pi of length {pi_len} and eta of length {l}, got {} and {}",
                pi.len(),
                eta.len()
            )));
        }
        if let Some((i, &v)) = pi
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NonFinite {
                coordinate: i,
                value: v,
            });
        }
        if eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidArgument(
                "eta entries must lie in [0, 1]".into(),
            ));
        }
        match (&kind, &mu) {
            (TagMode::Twda, Some(mu))
                if mu.len() == k && mu.iter().all(|m| *m > 0.0 && m.is_finite()) => {}
            (TagMode::Twtm, None) => {}
            _ => {
                return Err(Error::Dimension(
                    "mu must be a positive length-K vector exactly for TWDA".into(),
                ))
            }
        }
        let log_theta = theta.map(safe_ln);
        let log_psi = psi.map(safe_ln);
        Ok(Self {
            kind,
            theta,
            psi,
            pi,
            eta,
            mu,
            log_theta,
            log_psi,
        })
    }

    pub fn kind(&self) -> TagMode {
        self.kind
    }

    pub fn num_topics(&self) -> usize {
        self.theta.cols()
    }

    pub fn num_tags(&self) -> usize {
        self.theta.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.psi.cols()
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn mu(&self) -> Option<&[f64]> {
        self.mu.as_deref()
    }

    pub(crate) fn log_theta(&self) -> &Matrix {
        &self.log_theta
    }

    pub(crate) fn log_psi(&self) -> &Matrix {
        &self.log_psi
    }

    /// Index of the latent coordinate of π, if any.
    pub fn latent_coordinate(&self) -> Option<usize> {
        (self.kind == TagMode::Twda).then_some(self.num_tags())
    }

    /// Checks that the document's indices fit this model.
    pub fn check_document(&self, doc: &Document) -> Result<()> {
        if let Some(&(w, _)) = doc.words.iter().find(|(w, _)| *w >= self.vocab_size()) {
            return Err(Error::Dimension(format!(
                "document '{}' uses word {w} but V = {}",
                doc.id,
                self.vocab_size()
            )));
        }
        if let Some(&t) = doc.tags.iter().find(|&&t| t >= self.num_tags()) {
            return Err(Error::Dimension(format!(
                "document '{}' uses tag {t} but L = {}",
                doc.id,
                self.num_tags()
            )));
        }
        Ok(())
    }

    /// Worst deviation of a θ or ψ row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.theta
            .max_row_sum_error()
            .max(self.psi.max_row_sum_error())
    }
}

pub(crate) fn safe_ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}
