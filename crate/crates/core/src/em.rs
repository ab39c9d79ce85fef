use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{build_tag_matrix, Corpus, TagMode};
use crate::error::Result;
use crate::inference::{e_step, DocState};
use crate::model::{init_model, Model};
use crate::stats::{m_step, SufficientStats};

/// Output of a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trained {
    pub model: Model,
    /// Variational state of every training document after the last E-step.
    pub states: Vec<DocState>,
    /// Corpus ELBO after each E-step sweep.
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn relative_change_below(prev: f64, cur: f64, tol: f64) -> bool {
    (cur - prev).abs() <= tol * prev.abs()
}

/// E-step over `indices`, updating `states` (aligned with `indices`) and
/// warm-starting from them when the config asks for it.
pub(crate) fn e_step_sweep(
    corpus: &Corpus,
    indices: &[usize],
    model: &Model,
    cfg: &TrainConfig,
    states: &mut [Option<DocState>],
) -> Result<SufficientStats> {
    let mut stats = SufficientStats::new(model);
    for (&d, slot) in indices.iter().zip(states.iter_mut()) {
        let doc = &corpus.documents[d];
        let warm = if cfg.warm_start { slot.as_ref() } else { None };
        let fit = e_step(doc, model, cfg, warm)?;
        let tags = build_tag_matrix(doc, model.num_tags(), model.kind())?;
        stats.accumulate(d, doc, &tags, &fit.state, fit.elbo);
        *slot = Some(fit.state);
    }
    Ok(stats)
}

pub(crate) fn initial_model(corpus: &Corpus, kind: TagMode, cfg: &TrainConfig) -> Result<Model> {
    init_model(
        kind,
        cfg.num_topics,
        corpus.num_tags(),
        corpus.vocab_size(),
        cfg.seed,
        cfg.pi_init,
        cfg.mu_init,
    )
}

/// Variational EM from a given starting model.
pub fn fit_from(corpus: &Corpus, mut model: Model, cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    let all: Vec<usize> = (0..corpus.num_docs()).collect();
    let mut states: Vec<Option<DocState>> = vec![None; corpus.num_docs()];
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let stats = e_step_sweep(corpus, &all, &model, cfg, &mut states)?;
        model = m_step(&model, &stats, cfg)?;
        iterations += 1;
        log::info!("iteration {iterations}: elbo {:.6}", stats.elbo_sum);
        let prev = trace.last().copied();
        trace.push(stats.elbo_sum);
        if prev.is_some_and(|p| relative_change_below(p, stats.elbo_sum, cfg.tol)) {
            converged = true;
            break;
        }
    }
    Ok(Trained {
        model,
        states: states.into_iter().flatten().collect(),
        elbo_trace: trace,
        iterations,
        converged,
    })
}

pub(crate) fn check_corpus(corpus: &Corpus, kind: TagMode) -> Result<()> {
    corpus.validate()?;
    if corpus.documents.is_empty() {
        return Err(crate::error::Error::EmptyCorpus);
    }
    if kind == TagMode::Twtm {
        if let Some(doc) = corpus.documents.iter().find(|d| d.tags.is_empty()) {
            return Err(crate::error::Error::UntaggedDocument {
                doc: doc.id.clone(),
            });
        }
    }
    Ok(())
}

/// Trains a model of the given kind from the seeded initialization.
pub fn fit(corpus: &Corpus, kind: TagMode, cfg: &TrainConfig) -> Result<Trained> {
    check_corpus(corpus, kind)?;
    cfg.validate()?;
    let model = initial_model(corpus, kind, cfg)?;
    fit_from(corpus, model, cfg)
}
