#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twtm::corpus::{generate_synthetic, SyntheticSpec};
use twtm::{Corpus, Document, Matrix, Model, TagMode};

pub fn rows(r: &[&[f64]]) -> Matrix {
    Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn model(kind: TagMode, theta: Matrix, psi: Matrix, pi: Vec<f64>) -> Model {
    let l = theta.rows();
    let mu = (kind == TagMode::Twda).then(|| vec![1.0; theta.cols()]);
    Model::from_parts(kind, theta, psi, pi, vec![0.5; l], mu).unwrap()
}

pub fn random_stochastic(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    let mut m = Matrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            m.set(i, j, rng.random_range(0.05..1.0));
        }
    }
    m.normalize_rows(0.0);
    m
}

pub fn random_model(rng: &mut ChaCha8Rng, kind: TagMode, l: usize, k: usize, v: usize) -> Model {
    let theta = random_stochastic(rng, l, k);
    let psi = random_stochastic(rng, k, v);
    let pi_len = if kind == TagMode::Twda { l + 1 } else { l };
    let pi = (0..pi_len).map(|_| rng.random_range(0.2..3.0)).collect();
    let eta = (0..l).map(|_| rng.random_range(0.1..0.9)).collect();
    let mu = (kind == TagMode::Twda).then(|| (0..k).map(|_| rng.random_range(0.3..3.0)).collect());
    Model::from_parts(kind, theta, psi, pi, eta, mu).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn synthetic(num_docs: usize, vocab: usize, tags: usize, topics: usize, seed: u64) -> Corpus {
    let spec = SyntheticSpec {
        num_docs,
        vocab_size: vocab,
        num_tags: tags,
        num_topics: topics,
        seed,
        ..Default::default()
    };
    generate_synthetic(&spec).unwrap().0
}

/// Central finite difference of `f` along coordinate `i`, with a step
/// proportional to the coordinate.
pub fn central_diff(x: &[f64], i: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let h = 1e-5 * x[i].abs().max(1e-3);
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[i] += h;
    down[i] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-8);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / scale)
        .fold(0.0, f64::max)
}

pub fn is_nondecreasing(trace: &[f64], slack: f64) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - slack)
}

/// Documents with one word each and the given tag sets.
pub fn tag_corpus(tag_sets: &[Vec<usize>], num_tags: usize) -> Corpus {
    let docs = tag_sets
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("d{}", i + 1), [(0, 1)], t.iter().copied()))
        .collect();
    Corpus::new(
        docs,
        vec!["w".into()],
        (0..num_tags).map(|t| format!("t{}", t + 1)).collect(),
    )
    .unwrap()
}

/// Connected components by union-find over document–tag edges.
pub fn union_find_components(corpus: &Corpus) -> BTreeSet<BTreeSet<usize>> {
    let m = corpus.num_docs();
    let mut parent: Vec<usize> = (0..m + corpus.num_tags()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for (d, doc) in corpus.documents.iter().enumerate() {
        for &t in &doc.tags {
            let (a, b) = (find(&mut parent, d), find(&mut parent, m + t));
            parent[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for (d, doc) in corpus.documents.iter().enumerate() {
        if !doc.tags.is_empty() {
            let root = find(&mut parent, d);
            groups.entry(root).or_default().insert(d);
        }
    }
    groups.into_values().collect()
}
