//! Tag-weighted Dirichlet allocation: every document gets one extra latent tag
//! whose topic distribution λ has Dirichlet prior μ. Untagged documents are
//! allowed and reduce to LDA.

use crate::config::TrainConfig;
use crate::corpus::{build_tag_matrix, Corpus, Document, TagMatrix, TagMode};
use crate::em::{fit, Trained};
use crate::error::{Error, Result};
use crate::inference::{self, c_rows, gamma_update, mixture_coefficients, normalized, DocFit};
use crate::matrix::Matrix;
use crate::model::{self, Model};
use crate::numerics::psi;
use crate::twtm::{check_gamma, check_xi, require_kind};

pub use crate::stats::m_step as m_step_twda;

pub fn init_model_twda(
    num_topics: usize,
    num_tags: usize,
    vocab_size: usize,
    seed: u64,
    pi_init: f64,
    mu_init: f64,
) -> Result<Model> {
    model::init_model(
        TagMode::Twda,
        num_topics,
        num_tags,
        vocab_size,
        seed,
        pi_init,
        mu_init,
    )
}

fn tags_of(doc: &Document, model: &Model) -> Result<TagMatrix> {
    require_kind(model, TagMode::Twda)?;
    model.check_document(doc)?;
    build_tag_matrix(doc, model.num_tags(), TagMode::Twda)
}

fn check_rho(rho: &[f64], model: &Model) -> Result<()> {
    if rho.len() != model.num_topics() {
        return Err(Error::Dimension(format!(
            "rho has {} entries for {} topics",
            rho.len(),
            model.num_topics()
        )));
    }
    if let Some((i, &v)) = rho
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

/// C_k for tag row `j` (zero-based): log θ of the row's tag, or
/// Ψ(ρ_k) − Ψ(Σρ) for the trailing latent row.
pub fn c_term(j: usize, k: usize, tags: &TagMatrix, rho: &[f64], model: &Model) -> Result<f64> {
    let col = *tags
        .columns()
        .get(j)
        .ok_or_else(|| Error::Dimension(format!("tag row {j} out of range")))?;
    if k >= model.num_topics() {
        return Err(Error::Dimension(format!("topic {k} out of range")));
    }
    if col < model.num_tags() {
        Ok(model.theta().get(col, k).ln())
    } else {
        Ok(psi(rho[k]) - psi(rho.iter().sum()))
    }
}

/// ρ = μ + Σ_n c_n γ_n · ξ_latent/Σξ.
pub fn update_rho(doc: &Document, gamma: &Matrix, xi: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    if gamma.rows() != doc.words.len() || gamma.cols() != mu.len() || xi.is_empty() {
        return Err(Error::Dimension(
            "gamma, xi and mu do not fit the document".into(),
        ));
    }
    let w = xi[xi.len() - 1] / xi.iter().sum::<f64>();
    Ok(inference::rho_update(doc, gamma, w, mu))
}

/// γ_nk ∝ ψ_{k,w_n} exp(Σ_j ε̂_j C_jk).
pub fn update_gamma_twda(doc: &Document, xi: &[f64], rho: &[f64], model: &Model) -> Result<Matrix> {
    let tags = tags_of(doc, model)?;
    check_xi(xi, &tags)?;
    check_rho(rho, model)?;
    gamma_update(
        doc,
        model,
        &c_rows(model, &tags, Some(rho)),
        &normalized(xi),
    )
}

/// α = T·π (latent coordinate last) and the mixture coefficients a_j.
pub fn xi_inputs_twda(
    doc: &Document,
    gamma: &Matrix,
    rho: &[f64],
    model: &Model,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let tags = tags_of(doc, model)?;
    check_gamma(doc, gamma, model)?;
    check_rho(rho, model)?;
    let a = mixture_coefficients(doc, gamma, &c_rows(model, &tags, Some(rho)));
    Ok((tags.dirichlet_prior(model.pi()), a))
}

pub fn update_xi_twda(
    doc: &Document,
    gamma: &Matrix,
    rho: &[f64],
    xi0: &[f64],
    model: &Model,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let (alpha, a) = xi_inputs_twda(doc, gamma, rho, model)?;
    if xi0.len() != alpha.len() {
        return Err(Error::Dimension(format!(
            "xi has {} entries for {} tag rows",
            xi0.len(),
            alpha.len()
        )));
    }
    inference::optimize_xi(xi0, &alpha, &a, cfg)
}

/// Document E-step (γ → ρ → ξ rounds) from the prior initialization.
pub fn e_step_doc_twda(doc: &Document, model: &Model, cfg: &TrainConfig) -> Result<DocFit> {
    tags_of(doc, model)?;
    inference::e_step(doc, model, cfg, None)
}

/// Variational EM over a corpus that may mix tagged and untagged documents.
pub fn train_twda(corpus: &Corpus, cfg: &TrainConfig) -> Result<Trained> {
    fit(corpus, TagMode::Twda, cfg)
}

/// Plain mean-field LDA with fixed ψ and Dirichlet prior α, kept as an
/// independent check on the latent-tag machinery.
pub mod reference_lda {
    use crate::config::TrainConfig;
    use crate::corpus::Corpus;
    use crate::error::{Error, Result};
    use crate::matrix::Matrix;
    use crate::numerics::{newton_dirichlet, psi};

    #[derive(Debug, Clone)]
    pub struct LdaDoc {
        pub gamma: Matrix,
        pub rho: Vec<f64>,
    }

    /// γ_nk ∝ ψ_{k,w} exp(Ψ(ρ_k) − Ψ(Σρ)).
    pub fn word_update(psi_m: &Matrix, words: &[(usize, u32)], rho: &[f64]) -> Matrix {
        let k = rho.len();
        let total = psi(rho.iter().sum());
        let mut gamma = Matrix::zeros(words.len(), k);
        for (n, &(w, _)) in words.iter().enumerate() {
            let mut z = 0.0;
            for t in 0..k {
                let v = psi_m.get(t, w) * (psi(rho[t]) - total).exp();
                gamma.set(n, t, v);
                z += v;
            }
            for t in 0..k {
                gamma.set(n, t, gamma.get(n, t) / z);
            }
        }
        gamma
    }

    pub fn rho_update(alpha: &[f64], words: &[(usize, u32)], gamma: &Matrix) -> Vec<f64> {
        let mut rho = alpha.to_vec();
        for (n, &(_, c)) in words.iter().enumerate() {
            for (t, r) in rho.iter_mut().enumerate() {
                *r += f64::from(c) * gamma.get(n, t);
            }
        }
        rho
    }

    /// Alternates the two updates from ρ = α + N/K until ρ moves by less than `tol`.
    pub fn e_step(
        psi_m: &Matrix,
        alpha: &[f64],
        words: &[(usize, u32)],
        tol: f64,
        max_rounds: usize,
    ) -> LdaDoc {
        let n: f64 = words.iter().map(|&(_, c)| f64::from(c)).sum();
        let k = alpha.len() as f64;
        let mut rho: Vec<f64> = alpha.iter().map(|a| a + n / k).collect();
        let mut gamma = word_update(psi_m, words, &rho);
        for _ in 0..max_rounds {
            gamma = word_update(psi_m, words, &rho);
            let next = rho_update(alpha, words, &gamma);
            let delta = next
                .iter()
                .zip(&rho)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            rho = next;
            if delta < tol {
                break;
            }
        }
        LdaDoc { gamma, rho }
    }

    /// Variational EM for LDA from given ψ and α, returning (ψ, α, docs).
    pub fn fit(
        corpus: &Corpus,
        psi0: &Matrix,
        alpha0: &[f64],
        iterations: usize,
        cfg: &TrainConfig,
    ) -> Result<(Matrix, Vec<f64>, Vec<LdaDoc>)> {
        let mut psi_m = psi0.clone();
        let mut alpha = alpha0.to_vec();
        let mut docs = Vec::new();
        for _ in 0..iterations {
            let mut acc = Matrix::zeros(psi_m.rows(), psi_m.cols());
            let mut ss = vec![0.0; alpha.len()];
            let mut used = 0;
            docs = corpus
                .documents
                .iter()
                .map(|d| e_step(&psi_m, &alpha, &d.words, 1e-12, 1000))
                .collect();
            for (d, fit) in corpus.documents.iter().zip(&docs) {
                if d.words.is_empty() {
                    continue;
                }
                used += 1;
                let total = psi(fit.rho.iter().sum());
                for (s, r) in ss.iter_mut().zip(&fit.rho) {
                    *s += psi(*r) - total;
                }
                for (n, &(w, c)) in d.words.iter().enumerate() {
                    for t in 0..alpha.len() {
                        acc.set(t, w, acc.get(t, w) + f64::from(c) * fit.gamma.get(n, t));
                    }
                }
            }
            if used == 0 {
                return Err(Error::EmptyCorpus);
            }
            acc.normalize_rows(1e-10);
            psi_m = acc;
            alpha = newton_dirichlet(&ss, used, &alpha, cfg.newton_max_iters, cfg.newton_tol)?;
        }
        Ok((psi_m, alpha, docs))
    }

    /// exp(−Σ log p(w) / N) with p(w) = Σ_k (ρ_k/Σρ) ψ_{k,w}.
    pub fn perplexity(corpus: &Corpus, psi_m: &Matrix, docs: &[LdaDoc]) -> f64 {
        let mut ll = 0.0;
        let mut n = 0.0;
        for (d, fit) in corpus.documents.iter().zip(docs) {
            let total: f64 = fit.rho.iter().sum();
            for &(w, c) in &d.words {
                let p: f64 = (0..fit.rho.len())
                    .map(|t| fit.rho[t] / total * psi_m.get(t, w))
                    .sum();
                ll += f64::from(c) * p.ln();
                n += f64::from(c);
            }
        }
        (-ll / n).exp()
    }
}
