//! Tag-weighted topic model: every document carries at least one tag and its
//! topic mixture is a ξ-weighted average of its tags' topic distributions.

use crate::config::TrainConfig;
use crate::corpus::{build_tag_matrix, Corpus, Document, TagMatrix, TagMode};
use crate::em::{fit, Trained};
use crate::error::{Error, Result};
use crate::inference::{
    self, c_rows, gamma_update, mixture_coefficients, normalized, DocFit, DocState,
};
use crate::matrix::Matrix;
use crate::model::{self, Model};

pub use crate::inference::xi_objective;
pub use crate::stats::m_step;

pub(crate) fn require_kind(model: &Model, kind: TagMode) -> Result<()> {
    if model.kind() == kind {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected a {kind:?} model, got {:?}",
            model.kind()
        )))
    }
}

pub fn init_model(
    num_topics: usize,
    num_tags: usize,
    vocab_size: usize,
    seed: u64,
    pi_init: f64,
) -> Result<Model> {
    model::init_model(
        TagMode::Twtm,
        num_topics,
        num_tags,
        vocab_size,
        seed,
        pi_init,
        1.0,
    )
}

/// Σ_j (ξ_j/Σξ) θ_{tag_j}.
pub fn doc_topic_mixture(xi: &[f64], tags: &TagMatrix, theta: &Matrix) -> Result<Vec<f64>> {
    if xi.len() != tags.rows() || tags.observed().len() != tags.rows() {
        return Err(Error::Dimension(format!(
            "xi has {} entries for {} tag rows",
            xi.len(),
            tags.rows()
        )));
    }
    if tags.width() != theta.rows() {
        return Err(Error::Dimension(format!(
            "tag matrix width {} but theta has {} rows",
            tags.width(),
            theta.rows()
        )));
    }
    let mut out = vec![0.0; theta.cols()];
    for (&col, e) in tags.columns().iter().zip(normalized(xi)) {
        for (o, &th) in out.iter_mut().zip(theta.row(col)) {
            *o += e * th;
        }
    }
    Ok(out)
}

fn tags_of(doc: &Document, model: &Model) -> Result<TagMatrix> {
    require_kind(model, TagMode::Twtm)?;
    model.check_document(doc)?;
    build_tag_matrix(doc, model.num_tags(), TagMode::Twtm)
}

/// Closed-form γ given ξ: γ_nk ∝ ψ_{k,w_n} exp(Σ_j ε̂_j log θ_{tag_j,k}).
pub fn update_gamma(doc: &Document, xi: &[f64], model: &Model) -> Result<Matrix> {
    let tags = tags_of(doc, model)?;
    check_xi(xi, &tags)?;
    gamma_update(doc, model, &c_rows(model, &tags, None), &normalized(xi))
}

/// α = T·π and the mixture coefficients a_j that define the ξ objective.
pub fn xi_inputs(doc: &Document, gamma: &Matrix, model: &Model) -> Result<(Vec<f64>, Vec<f64>)> {
    let tags = tags_of(doc, model)?;
    check_gamma(doc, gamma, model)?;
    let a = mixture_coefficients(doc, gamma, &c_rows(model, &tags, None));
    Ok((tags.dirichlet_prior(model.pi()), a))
}

/// Maximizes the ξ objective from `xi0` with γ held fixed.
pub fn update_xi(
    doc: &Document,
    gamma: &Matrix,
    xi0: &[f64],
    model: &Model,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let (alpha, a) = xi_inputs(doc, gamma, model)?;
    if xi0.len() != alpha.len() {
        return Err(Error::Dimension(format!(
            "xi has {} entries for {} tag rows",
            xi0.len(),
            alpha.len()
        )));
    }
    inference::optimize_xi(xi0, &alpha, &a, cfg)
}

/// Runs the document E-step from the prior initialization ξ = T·π.
pub fn e_step_doc(doc: &Document, model: &Model, cfg: &TrainConfig) -> Result<DocFit> {
    tags_of(doc, model)?;
    inference::e_step(doc, model, cfg, None)
}

/// Evidence lower bound of a document under an arbitrary variational state.
pub fn doc_elbo(doc: &Document, model: &Model, state: &DocState) -> Result<f64> {
    model.check_document(doc)?;
    let tags = build_tag_matrix(doc, model.num_tags(), model.kind())?;
    check_xi(&state.xi, &tags)?;
    check_gamma(doc, &state.gamma, model)?;
    Ok(inference::doc_elbo(
        doc,
        model,
        &tags,
        &tags.dirichlet_prior(model.pi()),
        state,
    ))
}

/// The document's topic mixture under a variational state.
pub fn state_mixture(doc: &Document, model: &Model, state: &DocState) -> Result<Vec<f64>> {
    let tags = build_tag_matrix(doc, model.num_tags(), model.kind())?;
    check_xi(&state.xi, &tags)?;
    Ok(inference::mixture(model, &tags, state))
}

pub(crate) fn check_xi(xi: &[f64], tags: &TagMatrix) -> Result<()> {
    if xi.len() != tags.rows() {
        return Err(Error::Dimension(format!(
            "xi has {} entries for {} tag rows",
            xi.len(),
            tags.rows()
        )));
    }
    if let Some((i, &v)) = xi
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonFinite {
            coordinate: i,
            value: v,
        });
    }
    Ok(())
}

pub(crate) fn check_gamma(doc: &Document, gamma: &Matrix, model: &Model) -> Result<()> {
    if gamma.rows() != doc.words.len() || gamma.cols() != model.num_topics() {
        return Err(Error::Dimension(format!(
            "gamma is {}x{} for {} distinct words and {} topics",
            gamma.rows(),
            gamma.cols(),
            doc.words.len(),
            model.num_topics()
        )));
    }
    Ok(())
}

/// Variational EM over a corpus in which every document is tagged.
pub fn train(corpus: &Corpus, cfg: &TrainConfig) -> Result<Trained> {
    fit(corpus, TagMode::Twtm, cfg)
}
