use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{Corpus, Document};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Parameters of the tag-weighted generative process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub num_docs: usize,
    pub vocab_size: usize,
    pub num_tags: usize,
    pub num_topics: usize,
    pub tags_per_doc: usize,
    pub words_per_doc: usize,
    pub seed: u64,
    /// Symmetric Dirichlet parameter for the rows of θ.
    pub alpha: f64,
    /// Symmetric Dirichlet parameter for the rows of ψ.
    pub beta: f64,
    /// Symmetric tag-weight prior π.
    pub pi: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_docs: 100,
            vocab_size: 200,
            num_tags: 10,
            num_topics: 5,
            tags_per_doc: 2,
            words_per_doc: 50,
            seed: 0,
            alpha: 0.1,
            beta: 0.1,
            pi: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_docs", self.num_docs),
            ("vocab_size", self.vocab_size),
            ("num_tags", self.num_tags),
            ("num_topics", self.num_topics),
            ("tags_per_doc", self.tags_per_doc),
            ("words_per_doc", self.words_per_doc),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
        }
        if self.tags_per_doc > self.num_tags {
            return Err(Error::InvalidArgument(format!(
                "tags_per_doc ({}) exceeds num_tags ({})",
                self.tags_per_doc, self.num_tags
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("pi", self.pi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The parameters a synthetic corpus was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    /// L × K tag-topic matrix.
    pub theta: Matrix,
    /// K × V topic-word matrix.
    pub psi: Matrix,
    pub pi: Vec<f64>,
    /// Tag weights ε drawn for each document, aligned with its sorted tags.
    pub doc_weights: Vec<Vec<f64>>,
}

impl TrueModel {
    /// ϑ = Σ_j ε_j θ_{tag_j}.
    pub fn doc_topic_mixture(&self, tags: &[usize], weights: &[f64]) -> Vec<f64> {
        let mut mix = vec![0.0; self.theta.cols()];
        for (&t, &e) in tags.iter().zip(weights) {
            for (m, &th) in mix.iter_mut().zip(self.theta.row(t)) {
                *m += e * th;
            }
        }
        mix
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Corpus, TrueModel)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (l, k, v) = (spec.num_tags, spec.num_topics, spec.vocab_size);
    let theta_rows: Vec<Vec<f64>> = (0..l)
        .map(|_| symmetric_dirichlet(&mut rng, spec.alpha, k))
        .collect();
    let psi_rows: Vec<Vec<f64>> = (0..k)
        .map(|_| symmetric_dirichlet(&mut rng, spec.beta, v))
        .collect();
    let mut truth = TrueModel {
        theta: Matrix::from_rows(&theta_rows)?,
        psi: Matrix::from_rows(&psi_rows)?,
        pi: vec![spec.pi; l],
        doc_weights: Vec::new(),
    };
    let (documents, weights) = draw_documents(
        &truth,
        &mut rng,
        spec.num_docs,
        spec.tags_per_doc,
        spec.words_per_doc,
        "d",
    )?;
    truth.doc_weights = weights;
    let corpus = Corpus::new(
        documents,
        (0..v).map(|i| format!("w{i}")).collect(),
        (0..l).map(|i| format!("t{i}")).collect(),
    )?;
    Ok((corpus, truth))
}

/// Draws further documents from an existing truth, e.g. a held-out set with a
/// different number of tags per document. Ids are `{prefix}{i}`.
pub fn sample_documents(
    truth: &TrueModel,
    num_docs: usize,
    tags_per_doc: usize,
    words_per_doc: usize,
    seed: u64,
    prefix: &str,
) -> Result<(Vec<Document>, Vec<Vec<f64>>)> {
    if tags_per_doc == 0 || tags_per_doc > truth.theta.rows() {
        return Err(Error::InvalidArgument(format!(
            "tags_per_doc must lie in 1..={}, got {tags_per_doc}",
            truth.theta.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_documents(
        truth,
        &mut rng,
        num_docs,
        tags_per_doc,
        words_per_doc,
        prefix,
    )
}

fn draw_documents(
    truth: &TrueModel,
    rng: &mut impl Rng,
    num_docs: usize,
    tags_per_doc: usize,
    words_per_doc: usize,
    prefix: &str,
) -> Result<(Vec<Document>, Vec<Vec<f64>>)> {
    let l = truth.theta.rows();
    let topic_words = truth
        .psi
        .iter_rows()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut documents = Vec::with_capacity(num_docs);
    let mut all_weights = Vec::with_capacity(num_docs);
    for d in 0..num_docs {
        let mut tags = sample(rng, l, tags_per_doc).into_vec();
        tags.sort_unstable();
        let alpha: Vec<f64> = tags.iter().map(|&t| truth.pi[t]).collect();
        let eps = dirichlet(rng, &alpha);
        let mix = truth.doc_topic_mixture(&tags, &eps);
        let topics = WeightedIndex::new(&mix).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let tokens: Vec<usize> = (0..words_per_doc)
            .map(|_| topic_words[topics.sample(rng)].sample(rng))
            .collect();
        documents.push(Document::from_tokens(format!("{prefix}{d}"), tokens, tags));
        all_weights.push(eps);
    }
    Ok((documents, all_weights))
}

fn symmetric_dirichlet(rng: &mut impl Rng, a: f64, n: usize) -> Vec<f64> {
    dirichlet(rng, &vec![a; n])
}

/// Normalized Gamma draws. Small shapes can underflow every draw to zero; one
/// coordinate then takes all the mass.
fn dirichlet(rng: &mut impl Rng, alpha: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let sum: f64 = x.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        x.iter_mut().for_each(|v| *v /= sum);
    } else {
        let hot = rng.random_range(0..x.len());
        x.iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = if i == hot { 1.0 } else { 0.0 });
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_more_tags_per_doc_than_tags() {
        let spec = SyntheticSpec {
            num_tags: 3,
            tags_per_doc: 4,
            ..Default::default()
        };
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn documents_have_requested_shape() {
        let spec = SyntheticSpec {
            num_docs: 20,
            tags_per_doc: 3,
            words_per_doc: 17,
            ..Default::default()
        };
        let (c, truth) = generate_synthetic(&spec).unwrap();
        assert_eq!(c.num_docs(), 20);
        for (doc, eps) in c.documents.iter().zip(&truth.doc_weights) {
            assert_eq!(doc.tags.len(), 3);
            assert_eq!(doc.num_tokens(), 17);
            assert!((eps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
