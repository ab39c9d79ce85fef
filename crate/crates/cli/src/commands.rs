use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use twtm::cluster::cluster_documents;
use twtm::corpus::{generate_synthetic, load_corpus, write_corpus, SyntheticSpec};
use twtm::eval::{self, EvalReport};
use twtm::parallel::{train_parallel, IterationTiming, Solution};
use twtm::persist::ModelFile;
use twtm::{fit, Corpus, TagMode, TrainConfig};

use crate::{
    ClusterCmd, EvalCmd, ExportFeaturesCmd, GenerateCmd, InjectNoiseCmd, PredictCmd, TrainCmd,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("reading corpus {}", path.display()))
}

fn read_model(path: &Path) -> Result<ModelFile> {
    ModelFile::load(path).with_context(|| format!("reading model {}", path.display()))
}

/// Opens `path`, or standard output when there is none.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating directory {}", dir.display()))
}

#[derive(Serialize)]
struct TraceReport {
    library_version: &'static str,
    config: TrainConfig,
    iterations: usize,
    converged: bool,
    elbo_trace: Vec<f64>,
}

#[derive(Serialize)]
struct WeightedTag {
    tag: String,
    weight: f64,
}

#[derive(Serialize)]
struct DocWeights {
    id: String,
    /// Normalized weights of the document's own tags, heaviest first.
    weights: Vec<WeightedTag>,
    /// Share of the latent tag among all weights (TWDA only).
    #[serde(skip_serializing_if = "Option::is_none")]
    latent_share: Option<f64>,
}

#[derive(Serialize)]
struct TimingReport {
    library_version: &'static str,
    solution: Solution,
    workers: usize,
    /// Number of tag clusters (Solution III).
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<usize>,
    iterations: Vec<IterationTiming>,
}

pub fn train(c: TrainCmd) -> Result<()> {
    let corpus = read_corpus(&c.corpus)?;
    let cfg = c.model.train_config();
    let kind: TagMode = c.model.kind.into();
    let (trained, timing) = match c.solution.parallel() {
        None => {
            if c.workers != 1 {
                log::warn!("--workers is ignored for sequential training");
            }
            (fit(&corpus, kind, &cfg)?, None)
        }
        Some(solution) => {
            let run = train_parallel(&corpus, kind, solution, c.workers, &cfg)?;
            let clusters = (solution == Solution::Solution3).then_some(run.plan.num_clusters);
            if let Some(n) = clusters {
                println!("tag clusters: {n}");
            }
            let report = TimingReport {
                library_version: VERSION,
                solution,
                workers: c.workers,
                clusters,
                iterations: run.timing,
            };
            (run.trained, Some(report))
        }
    };
    create_dir(&c.out)?;
    let weights: Vec<DocWeights> = corpus
        .documents
        .iter()
        .zip(&trained.states)
        .map(|(doc, state)| DocWeights {
            id: doc.id.clone(),
            weights: eval::tag_weights(&doc.tags, state)
                .into_iter()
                .map(|(t, weight)| WeightedTag {
                    tag: corpus.tags[t].clone(),
                    weight,
                })
                .collect(),
            latent_share: (kind == TagMode::Twda).then(|| {
                let shares = state.tag_proportions();
                shares[shares.len() - 1]
            }),
        })
        .collect();
    let final_elbo = trained.elbo_trace.last().copied().unwrap_or(f64::NAN);
    let file = ModelFile::new(
        trained.model,
        corpus.vocab.clone(),
        corpus.tags.clone(),
        cfg.clone(),
    )?;
    file.save(c.out.join("model.json"))?;
    write_json(
        Some(&c.out.join("elbo_trace.json")),
        &TraceReport {
            library_version: VERSION,
            config: cfg,
            iterations: trained.iterations,
            converged: trained.converged,
            elbo_trace: trained.elbo_trace,
        },
    )?;
    write_json(Some(&c.out.join("tag_weights.json")), &weights)?;
    if let Some(report) = timing {
        write_json(Some(&c.out.join("timing.json")), &report)?;
    }
    println!(
        "final ELBO {final_elbo:.6} after {} iterations{}",
        trained.iterations,
        if trained.converged {
            " (converged)"
        } else {
            ""
        }
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    library_version: &'static str,
    model_kind: TagMode,
    config: &'a TrainConfig,
    test_documents: usize,
    #[serde(flatten)]
    report: EvalReport,
}

/// Loads a model and a corpus re-indexed into the model's dictionaries.
fn model_and_corpus(model: &Path, corpus: &Path) -> Result<(ModelFile, Corpus)> {
    let file = read_model(model)?;
    let corpus = read_corpus(corpus)?.remap(&file.vocab, &file.tags)?;
    Ok((file, corpus))
}

pub fn eval(c: EvalCmd) -> Result<()> {
    let (file, test) = model_and_corpus(&c.model_file, &c.test)?;
    let report = eval::perplexity(&test, &file.model, &file.config)?;
    println!(
        "perplexity {:.6} over {} tokens",
        report.perplexity, report.token_count
    );
    write_json(
        c.out.as_deref(),
        &EvalOutput {
            library_version: VERSION,
            model_kind: file.model.kind(),
            config: &file.config,
            test_documents: test.num_docs(),
            report,
        },
    )
}

#[derive(Serialize)]
struct RankedTag {
    tag: String,
    log_likelihood: f64,
}

#[derive(Serialize)]
struct DocPrediction {
    id: String,
    ranked: Vec<RankedTag>,
    truth: Vec<String>,
}

#[derive(Serialize)]
struct PredictOutput {
    library_version: &'static str,
    top_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    recall: Option<f64>,
    documents: Vec<DocPrediction>,
}

pub fn predict(c: PredictCmd) -> Result<()> {
    let (file, test) = model_and_corpus(&c.model_file, &c.test)?;
    let model = &file.model;
    let candidates: Vec<usize> = (0..model.num_tags())
        .filter(|&t| model.eta()[t] > 0.0)
        .collect();
    let mut ranked = Vec::with_capacity(test.num_docs());
    let mut documents = Vec::with_capacity(test.num_docs());
    for doc in &test.documents {
        let scores = eval::predict_tags(doc, model, &candidates, c.top_n)?;
        ranked.push(scores.iter().map(|&(t, _)| t).collect::<Vec<_>>());
        documents.push(DocPrediction {
            id: doc.id.clone(),
            ranked: scores
                .into_iter()
                .map(|(t, ll)| RankedTag {
                    tag: file.tags[t].clone(),
                    log_likelihood: ll,
                })
                .collect(),
            truth: doc.tags.iter().map(|&t| file.tags[t].clone()).collect(),
        });
    }
    let truth: Vec<Vec<usize>> = test.documents.iter().map(|d| d.tags.clone()).collect();
    let recall = if truth.iter().any(|t| !t.is_empty()) {
        let r = eval::recall_at(&ranked, &truth, c.top_n)?;
        println!("recall@{} {r:.4}", c.top_n);
        Some(r)
    } else {
        None
    };
    write_json(
        c.out.as_deref(),
        &PredictOutput {
            library_version: VERSION,
            top_n: c.top_n,
            recall,
            documents,
        },
    )
}

#[derive(Serialize)]
struct ClusterEntry {
    documents: Vec<String>,
    tags: Vec<String>,
}

#[derive(Serialize)]
struct ClusterOutput {
    num_clusters: usize,
    clusters: Vec<ClusterEntry>,
    untagged: Vec<String>,
}

pub fn cluster(c: ClusterCmd) -> Result<()> {
    let corpus = read_corpus(&c.corpus)?;
    let set = cluster_documents(&corpus);
    let doc_ids = |docs: &[usize]| -> Vec<String> {
        docs.iter()
            .map(|&d| corpus.documents[d].id.clone())
            .collect()
    };
    let clusters: Vec<ClusterEntry> = set
        .clusters
        .iter()
        .enumerate()
        .map(|(i, docs)| ClusterEntry {
            documents: doc_ids(docs),
            tags: set
                .tags_of(i)
                .into_iter()
                .map(|t| corpus.tags[t].clone())
                .collect(),
        })
        .collect();
    for entry in &clusters {
        println!("{{{}}}", entry.documents.join(", "));
    }
    let report = ClusterOutput {
        num_clusters: clusters.len(),
        clusters,
        untagged: doc_ids(&set.untagged),
    };
    match c.out {
        Some(path) => write_json(Some(&path), &report),
        None => Ok(()),
    }
}

pub fn inject_noise(c: InjectNoiseCmd) -> Result<()> {
    let corpus = read_corpus(&c.corpus)?;
    let (noisy, sidecar) = eval::inject_noise_tags(&corpus, c.noise_percent, c.seed)?;
    create_dir(&c.out)?;
    let path = c.out.join("corpus.jsonl");
    let mut out = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    write_corpus(&noisy, &mut out)?;
    out.flush()?;
    // Sidecar indices refer to the input corpus's tag dictionary.
    write_json(Some(&c.out.join("noise.json")), &sidecar)?;
    write_json(Some(&c.out.join("tags.json")), &corpus.tags)?;
    let added: usize = sidecar.values().map(Vec::len).sum();
    println!("added {added} noise tags to {} documents", sidecar.len());
    Ok(())
}

pub fn export_features(c: ExportFeaturesCmd) -> Result<()> {
    let (file, corpus) = model_and_corpus(&c.model_file, &c.corpus)?;
    let rows = eval::export_features(&corpus, &file.model, &file.config, sink(c.out.as_deref())?)?;
    if rows != corpus.num_docs() {
        bail!("wrote {rows} rows for {} documents", corpus.num_docs());
    }
    eprintln!("wrote {rows} feature rows");
    Ok(())
}

pub fn generate(c: GenerateCmd) -> Result<()> {
    let spec = SyntheticSpec {
        num_docs: c.docs,
        vocab_size: c.vocab,
        num_tags: c.tags,
        num_topics: c.topics,
        tags_per_doc: c.tags_per_doc,
        words_per_doc: c.words_per_doc,
        seed: c.seed,
        ..SyntheticSpec::default()
    };
    let (corpus, _) = generate_synthetic(&spec)?;
    let path: PathBuf = c.out;
    let mut out = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    write_corpus(&corpus, &mut out)?;
    out.flush()?;
    println!(
        "{} documents, {} words, {} tags",
        corpus.num_docs(),
        corpus.vocab_size(),
        corpus.num_tags()
    );
    Ok(())
}
