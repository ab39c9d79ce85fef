mod common;

use std::collections::BTreeSet;

use common::{rng, tag_corpus as corpus, union_find_components};
use rand::Rng;
use twtm::cluster::{cluster_documents, validate_clusters, ClusterSet, Violation};

fn as_sets(cs: &ClusterSet) -> BTreeSet<BTreeSet<usize>> {
    cs.clusters
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

#[test]
fn figure_example_partition() {
    // d1:{t1,t2,t3}, d2:{t3,t4}, d3:{t5,t6}, d4:{t6,t7}, d5:{t4}
    let c = corpus(
        &[vec![0, 1, 2], vec![2, 3], vec![4, 5], vec![5, 6], vec![3]],
        7,
    );
    let cs = cluster_documents(&c);
    assert_eq!(cs.clusters, vec![vec![0, 1, 4], vec![2, 3]]);
    assert!(validate_clusters(&cs, &c).is_empty());
    assert_eq!(cs.tags_of(0), vec![0, 1, 2, 3]);
    assert_eq!(cs.tags_of(1), vec![4, 5, 6]);
}

#[test]
fn worklist_matches_union_find_on_random_graphs() {
    let mut r = rng(2718);
    for _ in 0..200 {
        let m = r.random_range(1..=50);
        let l = r.random_range(1..=30);
        let density = r.random_range(0.0..0.15);
        let tag_sets: Vec<Vec<usize>> = (0..m)
            .map(|_| (0..l).filter(|_| r.random_bool(density)).collect())
            .collect();
        let c = corpus(&tag_sets, l);
        let cs = cluster_documents(&c);
        assert_eq!(as_sets(&cs), union_find_components(&c));
        assert!(validate_clusters(&cs, &c).is_empty());
        let untagged: Vec<usize> = (0..m).filter(|&d| tag_sets[d].is_empty()).collect();
        assert_eq!(cs.untagged, untagged);
        assert!(cs.clusters.windows(2).all(|w| w[0][0] < w[1][0]));
    }
}

#[test]
fn merging_independent_clusters_stays_valid() {
    let c = corpus(
        &[vec![0, 1, 2], vec![2, 3], vec![4, 5], vec![5, 6], vec![3]],
        7,
    );
    let cs = cluster_documents(&c);
    let merged = ClusterSet::from_clusters(vec![cs.clusters.concat()], &c);
    assert!(validate_clusters(&merged, &c).is_empty());
}

#[test]
fn splitting_a_cluster_names_the_shared_tag() {
    let c = corpus(&[vec![0, 1], vec![1]], 2);
    let split = ClusterSet::from_clusters(vec![vec![0], vec![1]], &c);
    let report = validate_clusters(&split, &c);
    assert!(
        report.contains(&Violation::SharedTag {
            tag: 1,
            clusters: vec![0, 1]
        }),
        "{report:?}"
    );
    assert!(report.iter().any(|v| v.to_string().contains("tag 1")));
}

#[test]
fn missing_and_duplicate_documents_are_reported() {
    let c = corpus(&[vec![0], vec![1], vec![]], 2);
    let cs = ClusterSet::from_clusters(vec![vec![0], vec![0, 2]], &c);
    let report = validate_clusters(&cs, &c);
    assert!(report.contains(&Violation::Missing { doc: 1 }));
    assert!(report.contains(&Violation::Duplicate { doc: 0 }));
    assert!(report.contains(&Violation::Duplicate { doc: 2 }));
}

#[test]
fn cluster_set_serializes() {
    let c = corpus(&[vec![0], vec![0, 1]], 2);
    let cs = cluster_documents(&c);
    let back: ClusterSet = serde_json::from_str(&serde_json::to_string(&cs).unwrap()).unwrap();
    assert_eq!(back, cs);
}
