//! Partitioning documents into groups that share no tags, so that each group
//! owns a disjoint block of π.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    /// Document indices per cluster, ascending; clusters ordered by their
    /// smallest document.
    pub clusters: Vec<Vec<usize>>,
    /// Cluster owning each tag that occurs in some document.
    pub tag_owner: BTreeMap<usize, usize>,
    /// Documents without tags, which belong to no cluster.
    pub untagged: Vec<usize>,
}

impl ClusterSet {
    /// Wraps an arbitrary grouping of documents, sorting it canonically and
    /// assigning each tag to the first cluster that uses it.
    pub fn from_clusters(mut clusters: Vec<Vec<usize>>, corpus: &Corpus) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.retain(|c| !c.is_empty());
        clusters.sort_by_key(|c| c[0]);
        let mut tag_owner = BTreeMap::new();
        for (i, c) in clusters.iter().enumerate() {
            for &d in c {
                for &t in &corpus.documents[d].tags {
                    tag_owner.entry(t).or_insert(i);
                }
            }
        }
        let untagged = untagged_docs(corpus);
        Self {
            clusters,
            tag_owner,
            untagged,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Tags used by the documents of cluster `c`, ascending.
    pub fn tags_of(&self, c: usize) -> Vec<usize> {
        self.tag_owner
            .iter()
            .filter(|(_, &owner)| owner == c)
            .map(|(&t, _)| t)
            .collect()
    }
}

fn untagged_docs(corpus: &Corpus) -> Vec<usize> {
    (0..corpus.num_docs())
        .filter(|&d| corpus.documents[d].tags.is_empty())
        .collect()
}

/// Groups documents into the connected components of the document–tag graph
/// with the worklist procedure: each unscanned tag opens a cluster, and
/// documents reachable through shared tags are pulled into it.
pub fn cluster_documents(corpus: &Corpus) -> ClusterSet {
    let mut docs_with_tag: Vec<Vec<usize>> = vec![Vec::new(); corpus.num_tags()];
    for (d, doc) in corpus.documents.iter().enumerate() {
        for &t in &doc.tags {
            docs_with_tag[t].push(d);
        }
    }

    let mut clusters: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    let mut pre_added_docs: BTreeSet<usize> = BTreeSet::new();
    let mut scanned_tags: BTreeSet<usize> = BTreeSet::new();
    for t in 0..corpus.num_tags() {
        if !scanned_tags.insert(t) {
            continue;
        }
        clusters.push(BTreeSet::new());
        let c = clusters.last_mut().expect("just pushed");
        pre_added_docs.extend(docs_with_tag[t].iter().copied());
        while let Some(d) = pre_added_docs.pop_first() {
            c.insert(d);
            for &td in &corpus.documents[d].tags {
                scanned_tags.insert(td);
                pre_added_docs.extend(docs_with_tag[td].iter().filter(|e| !c.contains(e)));
            }
        }
    }
    let clusters = clusters
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.into_iter().collect())
        .collect();
    ClusterSet::from_clusters(clusters, corpus)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// A tagged document is in no cluster.
    Missing { doc: usize },
    /// A document is listed more than once (or is untagged and clustered).
    Duplicate { doc: usize },
    /// Documents carrying `tag` sit in different clusters.
    SharedTag { tag: usize, clusters: Vec<usize> },
    /// `tag_owner` disagrees with where the tag actually occurs.
    OwnerMismatch {
        tag: usize,
        recorded: Option<usize>,
        actual: usize,
    },
    /// An index outside the corpus.
    UnknownDocument { doc: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing { doc } => write!(f, "document {doc} is in no cluster"),
            Violation::Duplicate { doc } => write!(f, "document {doc} is listed more than once"),
            Violation::SharedTag { tag, clusters } => {
                write!(f, "tag {tag} occurs in clusters {clusters:?}")
            }
            Violation::OwnerMismatch {
                tag,
                recorded,
                actual,
            } => {
                write!(
                    f,
                    "tag {tag} is owned by {recorded:?} but occurs in cluster {actual}"
                )
            }
            Violation::UnknownDocument { doc } => write!(f, "document {doc} does not exist"),
        }
    }
}

/// Checks that the clusters partition the tagged documents and that no tag
/// spans two clusters. An empty result means the set is valid.
pub fn validate_clusters(cs: &ClusterSet, corpus: &Corpus) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut cluster_of: Vec<Option<usize>> = vec![None; corpus.num_docs()];
    for (i, c) in cs.clusters.iter().enumerate() {
        for &d in c {
            match cluster_of.get_mut(d) {
                None => violations.push(Violation::UnknownDocument { doc: d }),
                Some(slot) if slot.is_some() || corpus.documents[d].tags.is_empty() => {
                    violations.push(Violation::Duplicate { doc: d })
                }
                Some(slot) => *slot = Some(i),
            }
        }
    }
    for (d, doc) in corpus.documents.iter().enumerate() {
        if !doc.tags.is_empty() && cluster_of[d].is_none() {
            violations.push(Violation::Missing { doc: d });
        }
    }
    let mut clusters_of_tag: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (d, doc) in corpus.documents.iter().enumerate() {
        if let Some(c) = cluster_of[d] {
            for &t in &doc.tags {
                clusters_of_tag.entry(t).or_default().insert(c);
            }
        }
    }
    for (&tag, owners) in &clusters_of_tag {
        if owners.len() > 1 {
            violations.push(Violation::SharedTag {
                tag,
                clusters: owners.iter().copied().collect(),
            });
        }
        let recorded = cs.tag_owner.get(&tag).copied();
        for &actual in owners {
            if recorded != Some(actual) {
                violations.push(Violation::OwnerMismatch {
                    tag,
                    recorded,
                    actual,
                });
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus(tag_sets: &[&[usize]], num_tags: usize) -> Corpus {
        let docs = tag_sets
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), [(0, 1)], t.iter().copied()))
            .collect();
        Corpus::new(
            docs,
            vec!["w".into()],
            (0..num_tags).map(|t| format!("t{t}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn star_graph_is_one_cluster() {
        let c = corpus(&[&[0, 1], &[0, 2], &[0], &[0, 3]], 4);
        let cs = cluster_documents(&c);
        assert_eq!(cs.clusters, vec![vec![0, 1, 2, 3]]);
        assert!(validate_clusters(&cs, &c).is_empty());
    }

    #[test]
    fn disjoint_tags_give_singletons() {
        let c = corpus(&[&[2], &[0], &[1]], 3);
        let cs = cluster_documents(&c);
        assert_eq!(cs.clusters, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn untagged_documents_are_kept_apart() {
        let c = corpus(&[&[0], &[], &[0]], 2);
        let cs = cluster_documents(&c);
        assert_eq!(cs.clusters, vec![vec![0, 2]]);
        assert_eq!(cs.untagged, vec![1]);
        assert!(validate_clusters(&cs, &c).is_empty());
    }
}
