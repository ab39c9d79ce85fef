use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{Document, TagMatrix};
use crate::error::{Error, Result};
use crate::inference::{dirichlet_expected_log, expected_topic_counts, DocState};
use crate::matrix::Matrix;
use crate::model::Model;
use crate::numerics::{lgamma, maximize_positive, newton_dirichlet, newton_refine, psi, psi1};

const SMOOTHING: f64 = 1e-10;

/// One document's contribution to the π objective: the π coordinates its tag
/// rows point at and E[log ε] = Ψ(ξ) − Ψ(Σξ) for those rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiRecord {
    pub doc: usize,
    pub coords: Vec<usize>,
    pub log_weights: Vec<f64>,
}

impl PiRecord {
    fn byte_size(&self) -> usize {
        std::mem::size_of::<usize>() * (1 + self.coords.len())
            + std::mem::size_of::<f64>() * self.log_weights.len()
    }
}

/// Expected counts gathered by an E-step sweep. Merging is elementwise
/// addition plus concatenation of the π records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub theta_acc: Matrix,
    pub psi_acc: Matrix,
    pub eta_acc: Vec<f64>,
    /// Σ_d (Ψ(ρ) − Ψ(Σρ)) over non-empty documents (latent variant only).
    pub mu_acc: Vec<f64>,
    pub mu_docs: usize,
    pub pi_records: Vec<PiRecord>,
    pub doc_count: usize,
    pub elbo_sum: f64,
}

impl SufficientStats {
    pub fn new(model: &Model) -> Self {
        let (l, k, v) = (model.num_tags(), model.num_topics(), model.vocab_size());
        Self {
            theta_acc: Matrix::zeros(l, k),
            psi_acc: Matrix::zeros(k, v),
            eta_acc: vec![0.0; l],
            mu_acc: vec![0.0; if model.mu().is_some() { k } else { 0 }],
            mu_docs: 0,
            pi_records: Vec::new(),
            doc_count: 0,
            elbo_sum: 0.0,
        }
    }

    /// Adds one document's converged state. Empty documents only count toward
    /// η and the document total.
    pub fn accumulate(
        &mut self,
        doc_index: usize,
        doc: &Document,
        tags: &TagMatrix,
        state: &DocState,
        elbo: f64,
    ) {
        self.doc_count += 1;
        self.elbo_sum += elbo;
        for &t in tags.observed() {
            self.eta_acc[t] += 1.0;
        }
        if doc.words.is_empty() {
            return;
        }
        let eps = state.tag_proportions();
        let topic_counts = expected_topic_counts(doc, &state.gamma);
        let num_tags = self.theta_acc.rows();
        for (&col, &e) in tags.columns().iter().zip(&eps) {
            if col < num_tags {
                for (acc, n) in self.theta_acc.row_mut(col).iter_mut().zip(&topic_counts) {
                    *acc += e * n;
                }
            }
        }
        for (n, &(w, cnt)) in doc.words.iter().enumerate() {
            let c = f64::from(cnt);
            for (t, &g) in state.gamma.row(n).iter().enumerate() {
                let cell = self.psi_acc.get(t, w);
                self.psi_acc.set(t, w, cell + c * g);
            }
        }
        if let Some(rho) = &state.rho {
            for (acc, e) in self.mu_acc.iter_mut().zip(dirichlet_expected_log(rho)) {
                *acc += e;
            }
            self.mu_docs += 1;
        }
        self.pi_records.push(PiRecord {
            doc: doc_index,
            coords: tags.columns().to_vec(),
            log_weights: dirichlet_expected_log(&state.xi),
        });
    }

    pub fn merge(&mut self, other: SufficientStats) -> Result<()> {
        if self.eta_acc.len() != other.eta_acc.len() || self.mu_acc.len() != other.mu_acc.len() {
            return Err(Error::Dimension(
                "merging statistics of different shapes".into(),
            ));
        }
        self.theta_acc.add_assign(&other.theta_acc)?;
        self.psi_acc.add_assign(&other.psi_acc)?;
        for (a, b) in self.eta_acc.iter_mut().zip(&other.eta_acc) {
            *a += b;
        }
        for (a, b) in self.mu_acc.iter_mut().zip(&other.mu_acc) {
            *a += b;
        }
        self.mu_docs += other.mu_docs;
        self.pi_records.extend(other.pi_records);
        self.doc_count += other.doc_count;
        self.elbo_sum += other.elbo_sum;
        Ok(())
    }

    /// Bytes of π records a driver has to gather.
    pub fn pi_record_bytes(&self) -> usize {
        self.pi_records.iter().map(PiRecord::byte_size).sum()
    }
}

/// Σ_records [lnΓ(Σπ_c) − ΣlnΓ(π_c) + Σ(π_c − 1)s] and its gradient, over the
/// full π vector.
pub fn pi_objective(records: &[PiRecord], pi: &[f64], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut f = 0.0;
    for r in records {
        let total: f64 = r.coords.iter().map(|&c| pi[c]).sum();
        let psi_total = psi(total);
        f += lgamma(total);
        for (&c, &s) in r.coords.iter().zip(&r.log_weights) {
            f += -lgamma(pi[c]) + (pi[c] - 1.0) * s;
            grad[c] += psi_total - psi(pi[c]) + s;
        }
    }
    f
}

/// Largest block refined with a dense Newton solve.
const MAX_DENSE_REFINE: usize = 512;

/// Negated Hessian of [`pi_objective`], row-major.
fn pi_neg_hessian(records: &[PiRecord], pi: &[f64]) -> Vec<f64> {
    let n = pi.len();
    let mut h = vec![0.0; n * n];
    for r in records {
        let total: f64 = r.coords.iter().map(|&c| pi[c]).sum();
        let shared = psi1(total);
        for &i in &r.coords {
            h[i * n + i] += psi1(pi[i]);
            for &j in &r.coords {
                h[i * n + j] -= shared;
            }
        }
    }
    h
}

/// π values for the coordinates a set of records touches.
#[derive(Debug, Clone, PartialEq)]
pub struct PiBlock {
    pub coords: Vec<usize>,
    pub values: Vec<f64>,
}

impl PiBlock {
    pub fn write_into(&self, pi: &mut [f64]) {
        for (&c, &v) in self.coords.iter().zip(&self.values) {
            pi[c] = v;
        }
    }
}

/// Maximizes the π objective of `records` over the coordinates they touch,
/// starting from `pi0`. Untouched coordinates do not enter the objective.
pub fn estimate_pi_block(records: &[PiRecord], pi0: &[f64], cfg: &TrainConfig) -> Result<PiBlock> {
    let mut coords: Vec<usize> = records
        .iter()
        .flat_map(|r| r.coords.iter().copied())
        .collect();
    coords.sort_unstable();
    coords.dedup();
    if coords.is_empty() {
        return Ok(PiBlock {
            coords,
            values: Vec::new(),
        });
    }
    let mut local_of = vec![usize::MAX; pi0.len()];
    for (i, &c) in coords.iter().enumerate() {
        local_of[c] = i;
    }
    let local: Vec<PiRecord> = records
        .iter()
        .map(|r| PiRecord {
            doc: r.doc,
            coords: r.coords.iter().map(|&c| local_of[c]).collect(),
            log_weights: r.log_weights.clone(),
        })
        .collect();
    let x0: Vec<f64> = coords.iter().map(|&c| pi0[c]).collect();
    let mut values = maximize_positive(|x, g| pi_objective(&local, x, g), &x0, &cfg.optimizer)?.x;
    if coords.len() <= MAX_DENSE_REFINE {
        newton_refine(
            |x, g| pi_objective(&local, x, g),
            |x| pi_neg_hessian(&local, x),
            &mut values,
        );
    }
    Ok(PiBlock { coords, values })
}

/// Full π estimate: `pi0` with the touched coordinates re-estimated.
pub fn estimate_pi(records: &[PiRecord], pi0: &[f64], cfg: &TrainConfig) -> Result<Vec<f64>> {
    let mut pi = pi0.to_vec();
    estimate_pi_block(records, pi0, cfg)?.write_into(&mut pi);
    Ok(pi)
}

/// Builds the next model from merged statistics and an already chosen π:
/// θ and ψ are the smoothed normalized accumulators, η the tag frequencies,
/// and μ (latent variant) the Newton–Raphson Dirichlet estimate.
pub fn apply_stats(
    model: &Model,
    stats: &SufficientStats,
    pi: Vec<f64>,
    cfg: &TrainConfig,
) -> Result<Model> {
    if stats.doc_count == 0 {
        return Err(Error::InvalidArgument(
            "M-step needs statistics from at least one document".into(),
        ));
    }
    let mut theta = stats.theta_acc.clone();
    let empty = theta.normalize_rows(SMOOTHING);
    if !empty.is_empty() {
        log::warn!(
            "{} tag rows of theta received no mass and were reset to uniform",
            empty.len()
        );
    }
    let mut psi_m = stats.psi_acc.clone();
    let empty = psi_m.normalize_rows(SMOOTHING);
    if !empty.is_empty() {
        log::warn!(
            "{} topics received no mass and were reset to uniform",
            empty.len()
        );
    }
    let d = stats.doc_count as f64;
    let eta: Vec<f64> = stats
        .eta_acc
        .iter()
        .map(|c| (c / d).clamp(0.0, 1.0))
        .collect();
    let mu = match model.mu() {
        Some(mu) if stats.mu_docs > 0 => Some(newton_dirichlet(
            &stats.mu_acc,
            stats.mu_docs,
            mu,
            cfg.newton_max_iters,
            cfg.newton_tol,
        )?),
        other => other.map(<[f64]>::to_vec),
    };
    Model::from_parts(model.kind(), theta, psi_m, pi, eta, mu)
}

/// Sequential M-step: π from all records, then [`apply_stats`].
pub fn m_step(model: &Model, stats: &SufficientStats, cfg: &TrainConfig) -> Result<Model> {
    let pi = estimate_pi(&stats.pi_records, model.pi(), cfg)?;
    apply_stats(model, stats, pi, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_hessian_matches_gradient_differences() {
        let records = vec![
            PiRecord {
                doc: 0,
                coords: vec![0, 2],
                log_weights: vec![-0.3, -1.5],
            },
            PiRecord {
                doc: 1,
                coords: vec![0, 1, 2],
                log_weights: vec![-2.0, -0.4, -1.9],
            },
            PiRecord {
                doc: 2,
                coords: vec![1],
                log_weights: vec![0.0],
            },
        ];
        let pi = [0.8, 3.5, 0.05];
        let n = pi.len();
        let h = pi_neg_hessian(&records, &pi);
        let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let step = 1e-6 * pi[j];
            let mut plus = pi.to_vec();
            let mut minus = pi.to_vec();
            plus[j] += step;
            minus[j] -= step;
            pi_objective(&records, &plus, &mut gp);
            pi_objective(&records, &minus, &mut gm);
            for i in 0..n {
                let fd = -(gp[i] - gm[i]) / (2.0 * step);
                let got = h[i * n + j];
                assert!(
                    (fd - got).abs() <= 1e-6 * got.abs().max(1e-3),
                    "({i},{j}): {got} vs {fd}"
                );
            }
        }
    }
}
