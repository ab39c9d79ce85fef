mod common;

use common::*;
use twtm::eval::{
    export_features, infer_document, inject_noise_tags, perplexity, predict_tags, recall_at,
    tag_weights, EvalReport,
};
use twtm::model::LOG_FLOOR;
use twtm::{fit, Corpus, DocState, Document, Matrix, TagMode, TrainConfig};

fn cfg() -> TrainConfig {
    TrainConfig::default()
}

#[test]
fn uniform_psi_gives_perplexity_v() {
    let v = 7;
    let psi = Matrix::filled(3, v, 1.0 / v as f64);
    let mut r = rng(1);
    let theta = random_stochastic(&mut r, 4, 3);
    let m = model(TagMode::Twtm, theta, psi, vec![1.0; 4]);
    let corpus = Corpus::new(
        vec![
            Document::new("a", [(0, 3), (6, 1)], [0, 2]),
            Document::new("b", [(2, 5)], [1]),
        ],
        (0..v).map(|i| format!("w{i}")).collect(),
        (0..4).map(|i| format!("t{i}")).collect(),
    )
    .unwrap();
    let report = perplexity(&corpus, &m, &cfg()).unwrap();
    assert!((report.perplexity - v as f64).abs() < 1e-9);
    assert_eq!(report.token_count, 9);
    assert!((report.recomputed_perplexity() - report.perplexity).abs() < 1e-12);
}

#[test]
fn perplexity_improves_with_training_and_ignores_order() {
    let corpus = synthetic(60, 80, 6, 4, 13);
    let c = TrainConfig {
        num_topics: 4,
        seed: 2,
        max_iters: 30,
        ..cfg()
    };
    let init = twtm::init_model(TagMode::Twtm, 4, 6, 80, 2, 1.0, 1.0).unwrap();
    let trained = fit(&corpus, TagMode::Twtm, &c).unwrap();
    let before = perplexity(&corpus, &init, &c).unwrap().perplexity;
    let after = perplexity(&corpus, &trained.model, &c).unwrap().perplexity;
    assert!(after <= before, "{after} > {before}");

    let mut reversed = corpus.clone();
    reversed.documents.reverse();
    let again = perplexity(&reversed, &trained.model, &c)
        .unwrap()
        .perplexity;
    assert!((again - after).abs() <= 1e-9 * after);
}

#[test]
fn report_rejects_zero_tokens() {
    assert!(EvalReport::new(vec![], 0).is_err());
}

#[test]
fn inference_contract() {
    let corpus = synthetic(40, 60, 5, 3, 3);
    let trained = fit(
        &corpus,
        TagMode::Twtm,
        &TrainConfig {
            num_topics: 3,
            max_iters: 10,
            ..cfg()
        },
    )
    .unwrap();
    let m = &trained.model;
    let doc = Document::new("held", [(0, 2), (5, 1), (59, 4)], [1]);
    let inf = infer_document(&doc, m, &cfg()).unwrap();
    assert_eq!(inf.mixture, m.theta().row(1).to_vec());
    assert_eq!(inf, infer_document(&doc, m, &cfg()).unwrap());

    let multi = Document::new("held2", [(3, 2), (7, 1)], [0, 2, 4]);
    let inf = infer_document(&multi, m, &cfg()).unwrap();
    assert!((inf.mixture.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let unknown = Document::new("odd", [(0, 1)], [7]);
    let err = infer_document(&unknown, m, &cfg()).unwrap_err();
    assert!(err.to_string().contains("TWDA"), "{err}");
}

#[test]
fn tag_weight_examples() {
    let state = |xi: Vec<f64>| DocState {
        xi,
        gamma: Matrix::zeros(0, 2),
        rho: None,
    };
    assert_eq!(
        tag_weights(&[4, 9], &state(vec![3.0, 1.0])),
        vec![(4, 0.75), (9, 0.25)]
    );
    assert_eq!(
        tag_weights(&[9, 4], &state(vec![1.0, 3.0])),
        vec![(4, 0.75), (9, 0.25)]
    );
    assert_eq!(tag_weights(&[2], &state(vec![0.3])), vec![(2, 1.0)]);
    let w = tag_weights(&[0, 1], &state(vec![1.0, 3.0, 4.0]));
    assert_eq!(w, vec![(1, 0.75), (0, 0.25)]);
}

#[test]
fn separable_prediction() {
    let identity = || Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let m = model(TagMode::Twtm, identity(), identity(), vec![1.0, 1.0]);
    let doc = Document::new("d", [(0, 1)], Vec::<usize>::new());
    let ranked = predict_tags(&doc, &m, &[1, 0], 2).unwrap();
    assert_eq!(ranked, vec![(0, 0.0), (1, LOG_FLOOR)]);
    assert!(predict_tags(&doc, &m, &[], 2).is_err());

    let doubled = Document::new("d2", [(0, 2)], Vec::<usize>::new());
    let r2 = predict_tags(&doubled, &m, &[0, 1], 2).unwrap();
    assert_eq!(r2.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1]);
}

#[test]
fn duplicating_words_doubles_scores() {
    let mut r = rng(9);
    let m = random_model(&mut r, TagMode::Twtm, 5, 3, 10);
    let doc = Document::new("d", [(1, 1), (4, 2), (9, 1)], Vec::<usize>::new());
    let dup = Document::new("d", [(1, 2), (4, 4), (9, 2)], Vec::<usize>::new());
    let a = predict_tags(&doc, &m, &[0, 1, 2, 3, 4], 5).unwrap();
    let b = predict_tags(&dup, &m, &[0, 1, 2, 3, 4], 5).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
        assert!((2.0 * x.1 - y.1).abs() < 1e-9);
    }
}

#[test]
fn recall_examples() {
    assert_eq!(recall_at(&[vec![3, 1]], &[vec![3]], 1).unwrap(), 1.0);
    assert_eq!(recall_at(&[vec![3, 1]], &[vec![8]], 2).unwrap(), 0.0);
    let ranked = vec![vec![9, 2, 5, 6, 7, 8, 1], vec![10, 11, 12, 13, 14, 15, 4]];
    assert_eq!(recall_at(&ranked, &[vec![2], vec![4]], 5).unwrap(), 0.5);
    assert!(recall_at(&ranked, &[vec![2], vec![4]], 0).is_err());
}

fn tagged_corpus(tag_sets: &[&[usize]], l: usize) -> Corpus {
    let docs = tag_sets
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("d{i}"), [(0, 1)], t.iter().copied()))
        .collect();
    Corpus::new(
        docs,
        vec!["w".into()],
        (0..l).map(|i| format!("t{i}")).collect(),
    )
    .unwrap()
}

#[test]
fn noise_counts_follow_the_ceiling_rule() {
    let corpus = tagged_corpus(&[&[0, 1, 2, 3, 4], &[5, 6], &[7, 8, 9]], 12);
    let (noisy, sidecar) = inject_noise_tags(&corpus, 20, 1).unwrap();
    assert_eq!(sidecar["d0"].len(), 1);
    assert_eq!(sidecar["d1"].len(), 1);
    assert_eq!(sidecar["d2"].len(), 1);
    for (before, after) in corpus.documents.iter().zip(&noisy.documents) {
        let noise = &sidecar[&before.id];
        assert_eq!(after.tags.len(), before.tags.len() + noise.len());
        assert!(noise
            .iter()
            .all(|t| !before.tags.contains(t) && after.tags.contains(t)));
    }
    let (_, full) = inject_noise_tags(&corpus, 100, 1).unwrap();
    assert_eq!(full["d1"].len(), 2);
    assert_eq!(
        inject_noise_tags(&corpus, 50, 4).unwrap(),
        inject_noise_tags(&corpus, 50, 4).unwrap()
    );

    let crowded = tagged_corpus(&[&[0, 1, 2], &[0]], 4);
    let (out, sidecar) = inject_noise_tags(&crowded, 100, 0).unwrap();
    assert!(!sidecar.contains_key("d0"));
    assert_eq!(out.documents[0].tags, vec![0, 1, 2]);
    assert_eq!(sidecar["d1"].len(), 1);
}

#[test]
fn sidecar_is_a_json_map() {
    let corpus = tagged_corpus(&[&[0, 1]], 5);
    let (_, sidecar) = inject_noise_tags(&corpus, 50, 3).unwrap();
    let json = serde_json::to_value(&sidecar).unwrap();
    assert!(json["d0"].as_array().unwrap().len() == 1);
}

#[test]
fn exported_features_round_trip_through_csv() {
    let corpus = synthetic(20, 40, 4, 3, 6);
    let trained = fit(
        &corpus,
        TagMode::Twda,
        &TrainConfig {
            num_topics: 3,
            max_iters: 5,
            ..cfg()
        },
    )
    .unwrap();
    let mut buf = Vec::new();
    let n = export_features(&corpus, &trained.model, &cfg(), &mut buf).unwrap();
    assert_eq!(n, 20);
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        vec!["doc_id", "topic_0", "topic_1", "topic_2"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    for (row, doc) in rows.iter().zip(&corpus.documents) {
        assert_eq!(&row[0], doc.id);
        let values: Vec<f64> = row.iter().skip(1).map(|x| x.parse().unwrap()).collect();
        assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let expected = infer_document(doc, &trained.model, &cfg()).unwrap().mixture;
        assert_eq!(values, expected);
    }
}

#[test]
fn twda_weights_exclude_the_latent_row() {
    let corpus = synthetic(20, 40, 4, 3, 6);
    let trained = fit(
        &corpus,
        TagMode::Twda,
        &TrainConfig {
            num_topics: 3,
            max_iters: 5,
            ..cfg()
        },
    )
    .unwrap();
    let doc = &corpus.documents[0];
    let inf = infer_document(doc, &trained.model, &cfg()).unwrap();
    let w = tag_weights(&inf.tags, &inf.state);
    assert_eq!(w.len(), doc.tags.len());
    assert!((w.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
}
