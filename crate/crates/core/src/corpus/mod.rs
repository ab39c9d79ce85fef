//! Semi-structured corpora: bag-of-words documents carrying sets of tags.

mod io;
mod synthetic;
mod tag_matrix;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_corpus, read_corpus, write_corpus};
pub use synthetic::{generate_synthetic, sample_documents, SyntheticSpec, TrueModel};
pub use tag_matrix::{build_tag_matrix, TagMatrix, TagMode};

/// One document: word counts keyed by vocabulary index plus a sorted tag set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// `(vocab index, count)` pairs, ascending by index, counts positive.
    pub words: Vec<(usize, u32)>,
    /// Ascending, duplicate-free tag indices.
    pub tags: Vec<usize>,
}

impl Document {
    /// Builds a document, merging repeated words and deduplicating tags.
    pub fn new(
        id: impl Into<String>,
        words: impl IntoIterator<Item = (usize, u32)>,
        tags: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for (w, c) in words {
            if c > 0 {
                *counts.entry(w).or_insert(0) += c;
            }
        }
        let mut tags: Vec<usize> = tags.into_iter().collect();
        tags.sort_unstable();
        tags.dedup();
        Self {
            id: id.into(),
            words: counts.into_iter().collect(),
            tags,
        }
    }

    /// Convenience constructor from a token-index sequence.
    pub fn from_tokens(
        id: impl Into<String>,
        tokens: impl IntoIterator<Item = usize>,
        tags: impl IntoIterator<Item = usize>,
    ) -> Self {
        Self::new(id, tokens.into_iter().map(|w| (w, 1)), tags)
    }

    pub fn num_tokens(&self) -> u64 {
        self.words.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn num_unique_words(&self) -> usize {
        self.words.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocab: Vec<String>,
    pub tags: Vec<String>,
}

impl Corpus {
    /// Checks index ranges, dictionary uniqueness and document normal form.
    pub fn new(documents: Vec<Document>, vocab: Vec<String>, tags: Vec<String>) -> Result<Self> {
        let corpus = Self {
            documents,
            vocab,
            tags,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab.is_empty() {
            return Err(Error::InvalidCorpus("vocabulary is empty".into()));
        }
        check_unique("vocabulary", &self.vocab)?;
        check_unique("tag dictionary", &self.tags)?;
        let (v, l) = (self.vocab.len(), self.tags.len());
        for doc in &self.documents {
            if !doc.words.windows(2).all(|p| p[0].0 < p[1].0) {
                return Err(Error::InvalidCorpus(format!(
                    "document '{}': words not merged",
                    doc.id
                )));
            }
            if let Some(&(w, _)) = doc.words.iter().find(|(w, c)| *w >= v || *c == 0) {
                return Err(Error::InvalidCorpus(format!(
                    "document '{}': word index {w} out of range or zero count",
                    doc.id
                )));
            }
            if !doc.tags.windows(2).all(|p| p[0] < p[1]) {
                return Err(Error::InvalidCorpus(format!(
                    "document '{}': tags not a sorted set",
                    doc.id
                )));
            }
            if let Some(t) = doc.tags.iter().find(|&&t| t >= l) {
                return Err(Error::InvalidCorpus(format!(
                    "document '{}': tag index {t} out of range (L = {l})",
                    doc.id
                )));
            }
        }
        Ok(())
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn num_tokens(&self) -> u64 {
        self.documents.iter().map(Document::num_tokens).sum()
    }

    pub fn has_untagged(&self) -> bool {
        self.documents.iter().any(|d| d.tags.is_empty())
    }

    /// Same dictionaries, a subset of the documents (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            documents: indices.iter().map(|&i| self.documents[i].clone()).collect(),
            vocab: self.vocab.clone(),
            tags: self.tags.clone(),
        }
    }

    /// Copy of the corpus with every tag removed from every document.
    pub fn strip_tags(&self) -> Corpus {
        let mut stripped = self.clone();
        for doc in &mut stripped.documents {
            doc.tags.clear();
        }
        stripped
    }

    /// Re-expresses the corpus in another pair of dictionaries (typically a
    /// trained model's). Words and tags missing from the target dictionaries
    /// are dropped; the number dropped is logged.
    pub fn remap(&self, vocab: &[String], tags: &[String]) -> Result<Corpus> {
        let word_index: HashMap<&str, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect();
        let tag_index: HashMap<&str, usize> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut dropped_tokens = 0u64;
        let mut dropped_tags = 0usize;
        let documents = self
            .documents
            .iter()
            .map(|doc| {
                let words = doc.words.iter().filter_map(|&(w, c)| {
                    let mapped = word_index.get(self.vocab[w].as_str()).map(|&i| (i, c));
                    if mapped.is_none() {
                        dropped_tokens += u64::from(c);
                    }
                    mapped
                });
                let words: Vec<_> = words.collect();
                let doc_tags: Vec<usize> = doc
                    .tags
                    .iter()
                    .filter_map(|&t| {
                        let mapped = tag_index.get(self.tags[t].as_str()).copied();
                        if mapped.is_none() {
                            dropped_tags += 1;
                        }
                        mapped
                    })
                    .collect();
                Document::new(doc.id.clone(), words, doc_tags)
            })
            .collect();
        if dropped_tokens > 0 {
            log::warn!("dropped {dropped_tokens} tokens of words outside the model vocabulary");
        }
        if dropped_tags > 0 {
            log::warn!("dropped {dropped_tags} tag occurrences outside the model tag dictionary");
        }
        Corpus::new(documents, vocab.to_vec(), tags.to_vec())
    }
}

fn check_unique(what: &str, names: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::InvalidCorpus(format!(
                "duplicate entry '{name}' in {what}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_merges_words_and_dedups_tags() {
        let d = Document::new("x", [(3, 1), (1, 2), (3, 4)], [5, 2, 5]);
        assert_eq!(d.words, vec![(1, 2), (3, 5)]);
        assert_eq!(d.tags, vec![2, 5]);
        assert_eq!(d.num_tokens(), 7);
    }

    #[test]
    fn validation_catches_out_of_range_indices() {
        let docs = vec![Document::new("a", [(2, 1)], [0])];
        assert!(Corpus::new(docs, vec!["x".into(), "y".into()], vec!["t".into()]).is_err());
        let docs = vec![Document::new("a", [(0, 1)], [1])];
        assert!(Corpus::new(docs, vec!["x".into()], vec!["t".into()]).is_err());
    }

    #[test]
    fn remap_drops_unknown_words_and_tags() {
        let c = Corpus::new(
            vec![Document::new("a", [(0, 2), (1, 1)], [0, 1])],
            vec!["cat".into(), "dog".into()],
            vec!["t1".into(), "t2".into()],
        )
        .unwrap();
        let r = c
            .remap(&["dog".into(), "emu".into()], &["t2".into()])
            .unwrap();
        assert_eq!(r.documents[0].words, vec![(0, 1)]);
        assert_eq!(r.documents[0].tags, vec![0]);
    }
}
