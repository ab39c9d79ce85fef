use proptest::prelude::*;
use twtm::corpus::{
    build_tag_matrix, generate_synthetic, load_corpus, read_corpus, write_corpus, SyntheticSpec,
};
use twtm::{Corpus, Document, Matrix, TagMode};

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    (1usize..6, 1usize..8, 1usize..5).prop_flat_map(|(docs, v, l)| {
        let doc = (
            prop::collection::vec((0..v, 1u32..4), 1..6),
            prop::collection::vec(0..l, 0..4),
        );
        prop::collection::vec(doc, docs).prop_map(move |raw| {
            let documents: Vec<Document> = raw
                .into_iter()
                .enumerate()
                .map(|(i, (w, t))| Document::new(format!("doc{i}"), w, t))
                .collect();
            let vocab = (0..v).map(|i| format!("w{i}")).collect();
            let tags = (0..l).map(|i| format!("t{i}")).collect();
            Corpus::new(documents, vocab, tags).unwrap()
        })
    })
}

/// Keeps only dictionary entries that occur, in first-seen order, which is
/// what loading from text can recover.
fn canonical(c: &Corpus) -> Corpus {
    let mut text = Vec::new();
    write_corpus(c, &mut text).unwrap();
    read_corpus(text.as_slice(), "mem").unwrap()
}

proptest! {
    #[test]
    fn load_write_load_round_trips(c in arb_corpus()) {
        let once = canonical(&c);
        let twice = canonical(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn twtm_rows_of_t_times_theta_sum_to_one(
        tags in prop::collection::btree_set(0usize..8, 1..5),
        raw in prop::collection::vec(0.001f64..1.0, 8 * 4),
        weights in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let mut theta = Matrix::from_vec(8, 4, raw).unwrap();
        theta.normalize_rows(0.0);
        let doc = Document::new("d", [(0, 1)], tags.iter().copied());
        let t = build_tag_matrix(&doc, 8, TagMode::Twtm).unwrap();
        for row in t.to_dense() {
            let sum: f64 = (0..4).map(|k| (0..8).map(|l| f64::from(row[l]) * theta.get(l, k)).sum::<f64>()).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        let mix = twtm::twtm::doc_topic_mixture(&weights[..t.rows()], &t, &theta).unwrap();
        prop_assert!((mix.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tag_matrix_is_pure(tags in prop::collection::vec(0usize..6, 0..5), twda in any::<bool>()) {
        let doc = Document::new("d", [(0, 1)], tags);
        let mode = if twda { TagMode::Twda } else { TagMode::Twtm };
        let a = build_tag_matrix(&doc, 6, mode);
        let b = build_tag_matrix(&doc, 6, mode);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                for row in a.to_dense() {
                    prop_assert_eq!(row.iter().filter(|&&x| x == 1).count(), 1);
                }
                let expected = doc.tags.len() + usize::from(twda);
                prop_assert_eq!(a.rows(), expected);
            }
            (Err(_), Err(_)) => prop_assert!(!twda && doc.tags.is_empty()),
            _ => prop_assert!(false, "impure result"),
        }
    }
}

#[test]
fn load_corpus_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(
        &path,
        "{\"id\":\"a\",\"words\":[\"cat\",\"sat\",\"cat\"],\"tags\":[\"pets\"]}\n\
         {\"id\":\"b\",\"words\":[[\"cat\",2],[\"mat\",1]],\"tags\":[\"pets\",\"home\"]}\n",
    )
    .unwrap();
    let c = load_corpus(&path).unwrap();
    assert_eq!(c.vocab, vec!["cat", "sat", "mat"]);
    assert_eq!(c.tags, vec!["pets", "home"]);
    assert_eq!(c.documents[0].words, vec![(0, 2), (1, 1)]);
    assert_eq!(c.documents[1].words, vec![(0, 2), (2, 1)]);
    assert!(load_corpus(dir.path().join("missing.jsonl")).is_err());
}

#[test]
fn paper_scale_dictionaries_fit_index_types() {
    let (m, v, l) = (12_091usize, 52_274usize, 3_654usize);
    let docs: Vec<Document> = (0..m)
        .map(|d| {
            Document::new(
                format!("m{d}"),
                [(d * 7 % v, 1), (v - 1, 2)],
                [d % l, (d * 13 + 5) % l],
            )
        })
        .collect();
    let c = Corpus::new(
        docs,
        (0..v).map(|i| format!("w{i}")).collect(),
        (0..l).map(|i| format!("t{i}")).collect(),
    )
    .unwrap();
    assert_eq!((c.num_docs(), c.vocab_size(), c.num_tags()), (m, v, l));
    assert_eq!(c.num_tokens(), 3 * m as u64);
}

#[test]
fn synthetic_is_deterministic() {
    let spec = SyntheticSpec {
        seed: 42,
        ..Default::default()
    };
    let (a, ta) = generate_synthetic(&spec).unwrap();
    let (b, tb) = generate_synthetic(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let (c, _) = generate_synthetic(&SyntheticSpec { seed: 43, ..spec }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn single_topic_words_follow_psi() {
    let spec = SyntheticSpec {
        num_docs: 400,
        vocab_size: 20,
        num_topics: 1,
        words_per_doc: 100,
        beta: 1.0,
        ..Default::default()
    };
    let (c, truth) = generate_synthetic(&spec).unwrap();
    let mut counts = vec![0.0; 20];
    for d in &c.documents {
        for &(w, n) in &d.words {
            counts[w] += f64::from(n);
        }
    }
    let total: f64 = counts.iter().sum();
    for (w, n) in counts.iter().enumerate() {
        assert!((n / total - truth.psi.get(0, w)).abs() < 0.01, "word {w}");
    }
}

#[test]
fn synthetic_mixtures_lie_on_the_simplex() {
    let spec = SyntheticSpec {
        num_docs: 100,
        vocab_size: 200,
        num_tags: 10,
        num_topics: 5,
        ..Default::default()
    };
    let (c, truth) = generate_synthetic(&spec).unwrap();
    let mut mean = vec![0.0; 5];
    for (d, eps) in c.documents.iter().zip(&truth.doc_weights) {
        let mix = truth.doc_topic_mixture(&d.tags, eps);
        assert!((mix.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (m, x) in mean.iter_mut().zip(mix) {
            *m += x / 100.0;
        }
    }
    assert!((mean.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn synthetic_spec_parses_from_json() {
    let spec: SyntheticSpec = serde_json::from_str(
        "{\"num_docs\":5,\"vocab_size\":9,\"num_tags\":3,\"num_topics\":2,\"seed\":1}",
    )
    .unwrap();
    assert_eq!(spec.num_docs, 5);
    assert_eq!(spec.tags_per_doc, SyntheticSpec::default().tags_per_doc);
}
