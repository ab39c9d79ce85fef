//! Per-document mean-field updates shared by both model variants.
//!
//! A document with tag rows j = 1..l has a row C_j of per-topic log weights:
//! log θ of the row's tag for an observed tag, and E[log λ] = Ψ(ρ) − Ψ(Σρ)
//! for the latent row. Everything below is written in terms of C.

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{build_tag_matrix, Document, TagMatrix};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{safe_ln, Model};
use crate::numerics::{lgamma, maximize_positive, newton_refine, psi, psi1, psi2};

/// Variational parameters of one document: ξ over its tag rows, γ over its
/// distinct words (counts are applied as weights), and ρ for the latent tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocState {
    pub xi: Vec<f64>,
    pub gamma: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
}

impl DocState {
    /// ε̂ = ξ / Σξ.
    pub fn tag_proportions(&self) -> Vec<f64> {
        normalized(&self.xi)
    }
}

/// Result of a per-document E-step.
#[derive(Debug, Clone)]
pub struct DocFit {
    pub state: DocState,
    pub elbo: f64,
    /// Document ELBO after every coordinate-ascent round.
    pub trace: Vec<f64>,
}

pub(crate) fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// E[log p] under Dir(x): Ψ(x_i) − Ψ(Σx).
pub(crate) fn dirichlet_expected_log(x: &[f64]) -> Vec<f64> {
    let total = psi(x.iter().sum());
    x.iter().map(|&v| psi(v) - total).collect()
}

/// lnΓ(Σa) − ΣlnΓ(a) + Σ(a − 1)·elog.
pub(crate) fn dirichlet_log_prior(a: &[f64], elog: &[f64]) -> f64 {
    let mut f = lgamma(a.iter().sum());
    for (&ai, &e) in a.iter().zip(elog) {
        f += -lgamma(ai) + (ai - 1.0) * e;
    }
    f
}

/// Entropy of Dir(x) given elog = Ψ(x) − Ψ(Σx).
pub(crate) fn dirichlet_entropy(x: &[f64], elog: &[f64]) -> f64 {
    -dirichlet_log_prior(x, elog)
}

/// The C matrix (l × K) of a document.
pub(crate) fn c_rows(model: &Model, tags: &TagMatrix, rho: Option<&[f64]>) -> Matrix {
    let k = model.num_topics();
    let mut c = Matrix::zeros(tags.rows(), k);
    for (j, &col) in tags.columns().iter().enumerate() {
        if col < model.num_tags() {
            c.row_mut(j).copy_from_slice(model.log_theta().row(col));
        } else {
            let rho = rho.expect("latent row needs rho");
            c.row_mut(j).copy_from_slice(&dirichlet_expected_log(rho));
        }
    }
    c
}

/// γ_nk ∝ ψ_{k,w_n} exp(Σ_j ε̂_j C_jk), normalized in log space.
pub(crate) fn gamma_update(
    doc: &Document,
    model: &Model,
    c: &Matrix,
    eps: &[f64],
) -> Result<Matrix> {
    let k = model.num_topics();
    let mut expo = vec![0.0; k];
    for (j, &e) in eps.iter().enumerate() {
        for (x, &cv) in expo.iter_mut().zip(c.row(j)) {
            *x += e * cv;
        }
    }
    let log_psi = model.log_psi();
    let mut gamma = Matrix::zeros(doc.words.len(), k);
    for (n, &(w, _)) in doc.words.iter().enumerate() {
        let row = gamma.row_mut(n);
        let mut max = f64::NEG_INFINITY;
        for t in 0..k {
            row[t] = log_psi.get(t, w) + expo[t];
            max = max.max(row[t]);
        }
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::DegenerateGamma {
                doc: doc.id.clone(),
                word: w,
            });
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    Ok(gamma)
}

/// a_j = Σ_n c_n Σ_k γ_nk C_jk.
pub(crate) fn mixture_coefficients(doc: &Document, gamma: &Matrix, c: &Matrix) -> Vec<f64> {
    let expected = expected_topic_counts(doc, gamma);
    (0..c.rows())
        .map(|j| c.row(j).iter().zip(&expected).map(|(cv, n)| cv * n).sum())
        .collect()
}

/// Σ_n c_n γ_n.
pub(crate) fn expected_topic_counts(doc: &Document, gamma: &Matrix) -> Vec<f64> {
    let mut counts = vec![0.0; gamma.cols()];
    for (n, &(_, cnt)) in doc.words.iter().enumerate() {
        let c = f64::from(cnt);
        for (acc, g) in counts.iter_mut().zip(gamma.row(n)) {
            *acc += c * g;
        }
    }
    counts
}

/// The part of the document ELBO that depends on ξ, given α = T·π and the
/// mixture coefficients a. Writes ∂/∂ξ into `grad`.
pub fn xi_objective(xi: &[f64], alpha: &[f64], a: &[f64], grad: &mut [f64]) -> f64 {
    let s: f64 = xi.iter().sum();
    let psi_s = psi(s);
    let psi1_s = psi1(s);
    let mut slack = 0.0;
    let mut weighted = 0.0;
    let mut f = -lgamma(s);
    for i in 0..xi.len() {
        slack += alpha[i] - xi[i];
        weighted += a[i] * xi[i];
        f += (alpha[i] - xi[i]) * (psi(xi[i]) - psi_s) + lgamma(xi[i]);
    }
    f += weighted / s;
    for i in 0..xi.len() {
        grad[i] =
            psi1(xi[i]) * (alpha[i] - xi[i]) - psi1_s * slack + (a[i] * s - weighted) / (s * s);
    }
    f
}

/// Negated Hessian of [`xi_objective`], row-major.
fn xi_neg_hessian(xi: &[f64], alpha: &[f64], a: &[f64]) -> Vec<f64> {
    let l = xi.len();
    let s: f64 = xi.iter().sum();
    let weighted: f64 = a.iter().zip(xi).map(|(a, x)| a * x).sum();
    let slack: f64 = alpha.iter().zip(xi).map(|(al, x)| al - x).sum();
    let shared = -psi2(s) * slack + psi1(s) + 2.0 * weighted / (s * s * s);
    let mut h = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            let mut v = shared - (a[i] + a[j]) / (s * s);
            if i == j {
                v += psi2(xi[i]) * (alpha[i] - xi[i]) - psi1(xi[i]);
            }
            h[i * l + j] = -v;
        }
    }
    h
}

pub(crate) fn optimize_xi(
    xi0: &[f64],
    alpha: &[f64],
    a: &[f64],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let m = maximize_positive(|x, g| xi_objective(x, alpha, a, g), xi0, &cfg.optimizer)?;
    let mut xi = m.x;
    if xi.len() > 1 {
        newton_refine(
            |x, g| xi_objective(x, alpha, a, g),
            |x| xi_neg_hessian(x, alpha, a),
            &mut xi,
        );
    }
    Ok(xi)
}

/// ρ = μ + w_latent Σ_n c_n γ_n.
pub(crate) fn rho_update(
    doc: &Document,
    gamma: &Matrix,
    latent_weight: f64,
    mu: &[f64],
) -> Vec<f64> {
    expected_topic_counts(doc, gamma)
        .iter()
        .zip(mu)
        .map(|(n, m)| m + latent_weight * n)
        .collect()
}

/// Σ_l t_l log η_l + (1 − t_l) log(1 − η_l) over the observed tags.
pub(crate) fn eta_term(doc: &Document, eta: &[f64]) -> f64 {
    let mut f = 0.0;
    let mut tags = doc.tags.iter().peekable();
    for (l, &e) in eta.iter().enumerate() {
        if tags.peek() == Some(&&l) {
            tags.next();
            f += safe_ln(e);
        } else {
            f += safe_ln(1.0 - e);
        }
    }
    f
}

/// Full evidence lower bound of one document under `state`.
pub(crate) fn doc_elbo(
    doc: &Document,
    model: &Model,
    tags: &TagMatrix,
    alpha: &[f64],
    state: &DocState,
) -> f64 {
    let eps = state.tag_proportions();
    let elog_eps = dirichlet_expected_log(&state.xi);
    let mut f = eta_term(doc, model.eta());
    f += dirichlet_log_prior(alpha, &elog_eps) + dirichlet_entropy(&state.xi, &elog_eps);
    if let (Some(rho), Some(mu)) = (&state.rho, model.mu()) {
        let elog_lambda = dirichlet_expected_log(rho);
        f += dirichlet_log_prior(mu, &elog_lambda) + dirichlet_entropy(rho, &elog_lambda);
    }
    if doc.words.is_empty() {
        return f;
    }
    let c = c_rows(model, tags, state.rho.as_deref());
    let a = mixture_coefficients(doc, &state.gamma, &c);
    f += a.iter().zip(&eps).map(|(a, e)| a * e).sum::<f64>();
    let log_psi = model.log_psi();
    for (n, &(w, cnt)) in doc.words.iter().enumerate() {
        let mut word = 0.0;
        for (t, &g) in state.gamma.row(n).iter().enumerate() {
            if g > 0.0 {
                word += g * (log_psi.get(t, w) - g.ln());
            }
        }
        f += f64::from(cnt) * word;
    }
    f
}

/// Initial state: ξ = T·π, and for the latent variant ρ = μ + w·N/K with
/// w the latent row's share of ξ.
pub(crate) fn initial_state(doc: &Document, model: &Model, alpha: &[f64]) -> DocState {
    let rho = model.mu().map(|mu| {
        let w = alpha[alpha.len() - 1] / alpha.iter().sum::<f64>();
        let per_topic = doc.num_tokens() as f64 / model.num_topics() as f64;
        mu.iter().map(|m| m + w * per_topic).collect()
    });
    DocState {
        xi: alpha.to_vec(),
        gamma: Matrix::zeros(doc.words.len(), model.num_topics()),
        rho,
    }
}

/// Coordinate ascent on one document's variational parameters with the model
/// held fixed: γ, then ρ (latent variant), then ξ, repeated until the relative
/// ELBO change drops below `cfg.e_step_tol` or `cfg.e_step_max_rounds` rounds.
/// `warm` supplies ξ and ρ to start from; otherwise ξ = T·π.
pub(crate) fn e_step(
    doc: &Document,
    model: &Model,
    cfg: &TrainConfig,
    warm: Option<&DocState>,
) -> Result<DocFit> {
    model.check_document(doc)?;
    let tags = build_tag_matrix(doc, model.num_tags(), model.kind())?;
    let alpha = tags.dirichlet_prior(model.pi());
    let mut state = initial_state(doc, model, &alpha);
    if let Some(w) = warm {
        if w.xi.len() == state.xi.len()
            && w.rho.as_ref().map(Vec::len) == state.rho.as_ref().map(Vec::len)
        {
            state.xi.clone_from(&w.xi);
            state.rho.clone_from(&w.rho);
        }
    }
    if doc.words.is_empty() {
        // nothing to explain: q(ε) and q(λ) sit on their priors
        state.xi = alpha.clone();
        state.rho = model.mu().map(<[f64]>::to_vec);
        let elbo = checked_elbo(doc, doc_elbo(doc, model, &tags, &alpha, &state))?;
        return Ok(DocFit {
            state,
            elbo,
            trace: vec![elbo],
        });
    }

    let mut trace = Vec::new();
    for _ in 0..cfg.e_step_max_rounds {
        let eps = state.tag_proportions();
        let c = c_rows(model, &tags, state.rho.as_deref());
        state.gamma = gamma_update(doc, model, &c, &eps)?;
        let c = match (model.mu(), state.rho.as_mut()) {
            (Some(mu), Some(rho)) => {
                *rho = rho_update(doc, &state.gamma, eps[eps.len() - 1], mu);
                c_rows(model, &tags, Some(rho))
            }
            _ => c,
        };
        let a = mixture_coefficients(doc, &state.gamma, &c);
        state.xi = optimize_xi(&state.xi, &alpha, &a, cfg)?;
        let elbo = checked_elbo(doc, doc_elbo(doc, model, &tags, &alpha, &state))?;
        let done = cfg.e_step_tol > 0.0
            && trace
                .last()
                .is_some_and(|&prev: &f64| (elbo - prev).abs() <= cfg.e_step_tol * prev.abs());
        trace.push(elbo);
        if done {
            break;
        }
    }
    let elbo = *trace.last().expect("at least one round");
    Ok(DocFit { state, elbo, trace })
}

fn checked_elbo(doc: &Document, elbo: f64) -> Result<f64> {
    if elbo.is_finite() {
        Ok(elbo)
    } else {
        Err(Error::NonFiniteElbo {
            doc: doc.id.clone(),
        })
    }
}

/// ϑ = Σ_j ε̂_j θ_{tag_j} (plus ε̂_latent · ρ/Σρ for the latent row).
pub(crate) fn mixture(model: &Model, tags: &TagMatrix, state: &DocState) -> Vec<f64> {
    let eps = state.tag_proportions();
    let mut out = vec![0.0; model.num_topics()];
    for (&col, &e) in tags.columns().iter().zip(&eps) {
        if col < model.num_tags() {
            for (o, &th) in out.iter_mut().zip(model.theta().row(col)) {
                *o += e * th;
            }
        } else if let Some(rho) = &state.rho {
            for (o, l) in out.iter_mut().zip(normalized(rho)) {
                *o += e * l;
            }
        }
    }
    out
}
