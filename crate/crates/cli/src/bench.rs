use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use twtm::parallel::{train_parallel, Solution};
use twtm::{Corpus, TagMode, TrainConfig};

use crate::commands::{read_corpus, write_json, VERSION};
use crate::BenchCmd;

const SOLUTIONS: [Solution; 3] = [
    Solution::Solution1,
    Solution::Solution2,
    Solution::Solution3,
];

#[derive(Serialize)]
struct Row {
    ratio: f64,
    documents: usize,
    workers: usize,
    solution: Solution,
    iterations: usize,
    mean_iteration_secs: f64,
    mean_map_secs: f64,
    mean_drive_secs: f64,
    /// Mean bytes of π material gathered by the driver per iteration.
    mean_gathered_pi_bytes: f64,
}

#[derive(Serialize)]
struct BenchReport {
    library_version: &'static str,
    model_kind: TagMode,
    config: TrainConfig,
    rows: Vec<Row>,
}

/// The first ⌈ratio·M⌉ documents of a seeded shuffle, in corpus order.
fn sample(corpus: &Corpus, ratio: f64, seed: u64) -> Corpus {
    let m = corpus.num_docs();
    let take = ((ratio * m as f64).ceil() as usize).clamp(1, m);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = order[..take].to_vec();
    chosen.sort_unstable();
    corpus.subset(&chosen)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n.max(1) as f64
}

fn table(rows: &[Row]) -> String {
    let mut out = format!(
        "{:>6} {:>8} {:>7} {:>9} {:>12} {:>10} {:>10} {:>14}\n",
        "ratio", "docs", "workers", "solution", "iter_secs", "map_secs", "drive_secs", "pi_bytes"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>7} {:>9} {:>12.4} {:>10.4} {:>10.4} {:>14.0}",
            r.ratio,
            r.documents,
            r.workers,
            format!("{:?}", r.solution).to_lowercase(),
            r.mean_iteration_secs,
            r.mean_map_secs,
            r.mean_drive_secs,
            r.mean_gathered_pi_bytes
        );
    }
    out
}

pub fn run(c: BenchCmd) -> Result<()> {
    if c.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        bail!("sampling ratios must lie in (0, 1]");
    }
    if c.workers.iter().any(|&w| w == 0) {
        bail!("worker counts must be at least 1");
    }
    if c.iterations == 0 {
        bail!("--iterations must be at least 1");
    }
    let corpus = read_corpus(&c.corpus)?;
    let kind: TagMode = c.model.kind.into();
    let cfg = TrainConfig {
        max_iters: c.iterations,
        tol: f64::MIN_POSITIVE,
        ..c.model.train_config()
    };
    let mut ratios = c.ratios.clone();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let mut workers = c.workers.clone();
    workers.sort_unstable();
    workers.dedup();

    let mut rows = Vec::new();
    for &ratio in &ratios {
        let part = sample(&corpus, ratio, c.model.seed);
        for &w in &workers {
            for solution in SOLUTIONS {
                let run = train_parallel(&part, kind, solution, w, &cfg)?;
                let t = &run.timing;
                rows.push(Row {
                    ratio,
                    documents: part.num_docs(),
                    workers: w,
                    solution,
                    iterations: t.len(),
                    mean_iteration_secs: mean(t.iter().map(|x| x.total_secs)),
                    mean_map_secs: mean(t.iter().map(|x| x.map_secs)),
                    mean_drive_secs: mean(t.iter().map(|x| x.drive_secs)),
                    mean_gathered_pi_bytes: mean(t.iter().map(|x| x.gathered_pi_bytes as f64)),
                });
            }
        }
    }
    fs::create_dir_all(&c.out)?;
    let text = table(&rows);
    print!("{text}");
    fs::write(c.out.join("bench.txt"), &text)?;
    write_json(
        Some(&c.out.join("bench.json")),
        &BenchReport {
            library_version: VERSION,
            model_kind: kind,
            config: cfg,
            rows,
        },
    )
}
