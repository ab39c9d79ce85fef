//! Held-out evaluation: fold-in inference, perplexity, tag weights, tag
//! prediction, noise-tag injection and topic-feature export.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{build_tag_matrix, Corpus, Document, TagMode};
use crate::error::{Error, Result};
use crate::inference::{self, DocState};
use crate::model::{Model, LOG_FLOOR};

/// Fold-in result for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub state: DocState,
    /// Point-estimate topic mixture ϑ̂.
    pub mixture: Vec<f64>,
    /// Tags the state refers to (the document's tags minus unusable ones).
    pub tags: Vec<usize>,
    pub elbo: f64,
}

/// Tags the model can use: known indices with nonzero training frequency.
fn usable_tags(doc: &Document, model: &Model) -> Vec<usize> {
    doc.tags
        .iter()
        .copied()
        .filter(|&t| t < model.num_tags() && model.eta()[t] > 0.0)
        .collect()
}

/// Runs the E-step for a held-out document with the model frozen. Tags the
/// model never saw in training are dropped with a warning.
pub fn infer_document(doc: &Document, model: &Model, cfg: &TrainConfig) -> Result<Inference> {
    let tags = usable_tags(doc, model);
    let doc = if tags.len() != doc.tags.len() {
        log::warn!(
            "document '{}': dropped {} tags unseen in training",
            doc.id,
            doc.tags.len() - tags.len()
        );
        std::borrow::Cow::Owned(Document {
            tags: tags.clone(),
            ..doc.clone()
        })
    } else {
        std::borrow::Cow::Borrowed(doc)
    };
    if model.kind() == TagMode::Twtm && tags.is_empty() {
        return Err(Error::UntaggedDocument {
            doc: doc.id.clone(),
        });
    }
    let fit = inference::e_step(&doc, model, cfg, None)?;
    let matrix = build_tag_matrix(&doc, model.num_tags(), model.kind())?;
    let mixture = inference::mixture(model, &matrix, &fit.state);
    Ok(Inference {
        state: fit.state,
        mixture,
        tags,
        elbo: fit.elbo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub perplexity: f64,
    pub doc_log_likelihoods: Vec<f64>,
    pub token_count: u64,
}

impl EvalReport {
    pub fn new(doc_log_likelihoods: Vec<f64>, token_count: u64) -> Result<Self> {
        if token_count == 0 {
            return Err(Error::InvalidArgument("no test tokens to evaluate".into()));
        }
        let total: f64 = doc_log_likelihoods.iter().sum();
        Ok(Self {
            perplexity: (-total / token_count as f64).exp(),
            doc_log_likelihoods,
            token_count,
        })
    }

    /// exp(−Σ log p / N) recomputed from the stored fields.
    pub fn recomputed_perplexity(&self) -> f64 {
        let total: f64 = self.doc_log_likelihoods.iter().sum();
        (-total / self.token_count as f64).exp()
    }
}

/// Σ_n c_n log Σ_k ϑ_k ψ_{k,w_n}.
pub fn doc_log_likelihood(doc: &Document, mixture: &[f64], model: &Model) -> f64 {
    let psi = model.psi();
    doc.words
        .iter()
        .map(|&(w, c)| {
            let p: f64 = mixture
                .iter()
                .enumerate()
                .map(|(k, m)| m * psi.get(k, w))
                .sum();
            f64::from(c)
                * if p > 0.0 {
                    p.ln().max(LOG_FLOOR)
                } else {
                    LOG_FLOOR
                }
        })
        .sum()
}

/// Perplexity of a test corpus whose indices already follow the model's
/// dictionaries (see [`Corpus::remap`]).
pub fn perplexity(corpus: &Corpus, model: &Model, cfg: &TrainConfig) -> Result<EvalReport> {
    let mut lls = Vec::with_capacity(corpus.num_docs());
    let mut tokens = 0;
    for doc in &corpus.documents {
        let inf = infer_document(doc, model, cfg)?;
        lls.push(doc_log_likelihood(doc, &inf.mixture, model));
        tokens += doc.num_tokens();
    }
    EvalReport::new(lls, tokens)
}

/// Normalized weights of the observed tags, heaviest first (ties by tag index).
/// `tags` are the tag indices the state's ξ rows refer to, in row order; a
/// trailing latent row in ξ is ignored.
pub fn tag_weights(tags: &[usize], state: &DocState) -> Vec<(usize, f64)> {
    let observed = &state.xi[..tags.len().min(state.xi.len())];
    let total: f64 = observed.iter().sum();
    let mut out: Vec<(usize, f64)> = tags
        .iter()
        .zip(observed)
        .map(|(&t, &x)| (t, x / total))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// Ranks candidate tags a by log p(d | a) = Σ_n c_n log Σ_k θ_{a,k} ψ_{k,w_n}
/// and returns the best `top_n` as (tag, log-likelihood).
pub fn predict_tags(
    doc: &Document,
    model: &Model,
    candidates: &[usize],
    top_n: usize,
) -> Result<Vec<(usize, f64)>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate tags to rank".into()));
    }
    if top_n == 0 {
        return Err(Error::InvalidArgument("top_n must be at least 1".into()));
    }
    model.check_document(&Document {
        tags: Vec::new(),
        ..doc.clone()
    })?;
    if let Some(&t) = candidates.iter().find(|&&t| t >= model.num_tags()) {
        return Err(Error::Dimension(format!(
            "candidate tag {t} but L = {}",
            model.num_tags()
        )));
    }
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&a| (a, doc_log_likelihood(doc, model.theta().row(a), model)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.dedup_by_key(|s| s.0);
    scored.truncate(top_n);
    Ok(scored)
}

/// Mean over documents with a nonempty truth set of the fraction of true tags
/// found in the first `n` ranked entries.
pub fn recall_at(ranked: &[Vec<usize>], truth: &[Vec<usize>], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "recall cutoff must be at least 1".into(),
        ));
    }
    if ranked.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} rankings for {} truth sets",
            ranked.len(),
            truth.len()
        )));
    }
    let mut sum = 0.0;
    let mut docs = 0;
    for (r, t) in ranked.iter().zip(truth) {
        if t.is_empty() {
            continue;
        }
        let top = &r[..n.min(r.len())];
        let hits = t.iter().filter(|x| top.contains(x)).count();
        sum += hits as f64 / t.len() as f64;
        docs += 1;
    }
    if docs == 0 {
        return Err(Error::InvalidArgument("no document has a truth set".into()));
    }
    Ok(sum / docs as f64)
}

/// Noise tags added to each document, by document id.
pub type NoiseSidecar = BTreeMap<String, Vec<usize>>;

/// Adds ⌈percent/100 × (tag count)⌉ tags to every document, drawn uniformly
/// from the tags it does not have. Documents with too few such tags are left
/// unchanged.
pub fn inject_noise_tags(
    corpus: &Corpus,
    percent: u32,
    seed: u64,
) -> Result<(Corpus, NoiseSidecar)> {
    if percent == 0 {
        return Err(Error::InvalidArgument(
            "noise percent must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = corpus.clone();
    let mut sidecar = NoiseSidecar::new();
    let l = corpus.num_tags();
    for doc in &mut out.documents {
        let count = (u64::from(percent) * doc.tags.len() as u64).div_ceil(100) as usize;
        if count == 0 {
            continue;
        }
        let complement: Vec<usize> = (0..l)
            .filter(|t| doc.tags.binary_search(t).is_err())
            .collect();
        if complement.len() < count {
            log::warn!(
                "document '{}': only {} tags available for {count} noise tags, skipped",
                doc.id,
                complement.len()
            );
            continue;
        }
        let mut noise: Vec<usize> = sample(&mut rng, complement.len(), count)
            .into_iter()
            .map(|i| complement[i])
            .collect();
        noise.sort_unstable();
        doc.tags.extend(&noise);
        doc.tags.sort_unstable();
        sidecar.insert(doc.id.clone(), noise);
    }
    Ok((out, sidecar))
}

/// Topic mixtures of every document, in corpus order.
pub fn topic_features(corpus: &Corpus, model: &Model, cfg: &TrainConfig) -> Result<Vec<Vec<f64>>> {
    corpus
        .documents
        .iter()
        .map(|d| infer_document(d, model, cfg).map(|i| i.mixture))
        .collect()
}

/// Writes `doc_id,topic_0,…` CSV rows of the documents' topic mixtures and
/// returns the number of rows.
pub fn export_features(
    corpus: &Corpus,
    model: &Model,
    cfg: &TrainConfig,
    writer: impl Write,
) -> Result<usize> {
    let features = topic_features(corpus, model, cfg)?;
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["doc_id".to_string()];
    header.extend((0..model.num_topics()).map(|k| format!("topic_{k}")));
    csv.write_record(&header)?;
    for (doc, row) in corpus.documents.iter().zip(&features) {
        let mut record = vec![doc.id.clone()];
        record.extend(row.iter().map(f64::to_string));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(features.len())
}
