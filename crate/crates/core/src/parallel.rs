//! In-process map/reduce training. Workers run E-steps over their shards
//! against a frozen model; the driver merges their statistics in shard order
//! and produces the next model. The three solutions differ only in how π is
//! estimated: centrally from gathered per-document terms (I), as the mean of
//! per-shard estimates (II), or per tag-disjoint cluster (III).

use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_documents, ClusterSet};
use crate::config::TrainConfig;
use crate::corpus::{Corpus, TagMode};
use crate::em::{check_corpus, e_step_sweep, initial_model, relative_change_below, Trained};
use crate::error::{Error, Result};
use crate::inference::DocState;
use crate::model::Model;
use crate::stats::{
    apply_stats, estimate_pi, estimate_pi_block, PiBlock, PiRecord, SufficientStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    /// Driver maximizes π over all gathered per-document terms.
    Solution1,
    /// Each shard estimates π locally; the driver averages.
    Solution2,
    /// Shards hold whole tag-disjoint clusters and estimate their own π blocks.
    Solution3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardPlan {
    pub solution: Solution,
    /// Document indices per shard, ascending.
    pub shards: Vec<Vec<usize>>,
    pub workers: usize,
    /// Document groups (clusters, then untagged documents if any); Solution III only.
    pub groups: Vec<Vec<usize>>,
    /// Number of tag clusters found; Solution III only.
    pub num_clusters: usize,
}

impl ShardPlan {
    fn group_of_doc(&self, num_docs: usize) -> Vec<usize> {
        let mut owner = vec![usize::MAX; num_docs];
        for (g, docs) in self.groups.iter().enumerate() {
            for &d in docs {
                owner[d] = g;
            }
        }
        owner
    }
}

/// Splits the corpus into `workers` shards: round-robin for Solutions I and
/// II, and for Solution III whole clusters placed largest-first on the
/// currently smallest shard.
pub fn plan_shards(
    corpus: &Corpus,
    kind: TagMode,
    solution: Solution,
    workers: usize,
) -> Result<ShardPlan> {
    if workers == 0 {
        return Err(Error::InvalidArgument(
            "at least one worker is required".into(),
        ));
    }
    check_corpus(corpus, kind)?;
    let m = corpus.num_docs();
    let (shards, groups, num_clusters) = match solution {
        Solution::Solution1 | Solution::Solution2 => {
            let shards = (0..workers)
                .map(|s| (s..m).step_by(workers).collect())
                .collect();
            (shards, Vec::new(), 0)
        }
        Solution::Solution3 => {
            let ClusterSet {
                clusters, untagged, ..
            } = cluster_documents(corpus);
            let num_clusters = clusters.len();
            let mut groups = clusters;
            if !untagged.is_empty() {
                groups.push(untagged);
            }
            let mut order: Vec<usize> = (0..groups.len()).collect();
            order.sort_by(|&a, &b| {
                groups[b]
                    .len()
                    .cmp(&groups[a].len())
                    .then(groups[a][0].cmp(&groups[b][0]))
            });
            let mut shards: Vec<Vec<usize>> = vec![Vec::new(); workers];
            for g in order {
                let target = (0..workers)
                    .min_by_key(|&s| (shards[s].len(), s))
                    .expect("workers >= 1");
                shards[target].extend(&groups[g]);
            }
            for s in &mut shards {
                s.sort_unstable();
            }
            (shards, groups, num_clusters)
        }
    };
    Ok(ShardPlan {
        solution,
        shards,
        workers,
        groups,
        num_clusters,
    })
}

/// What a worker sends back after the map phase.
#[derive(Debug, Clone)]
pub struct ShardResult {
    pub shard: usize,
    pub stats: SufficientStats,
    /// Solution II: one full-length π; Solution III: one block per group.
    pub pi_local: Option<Vec<PiBlock>>,
    pub elbo: f64,
}

/// Wall-clock seconds per phase of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTiming {
    pub iteration: usize,
    pub map_secs: f64,
    pub reduce_secs: f64,
    pub drive_secs: f64,
    pub total_secs: f64,
    /// Bytes of π material the driver received (records or local estimates).
    pub gathered_pi_bytes: usize,
    pub elbo: f64,
}

/// Training output plus the per-iteration timing trace.
#[derive(Debug, Clone)]
pub struct ParallelTrained {
    pub trained: Trained,
    pub timing: Vec<IterationTiming>,
    pub plan: ShardPlan,
}

fn map_shard(
    corpus: &Corpus,
    plan: &ShardPlan,
    group_of: &[usize],
    shard: usize,
    model: &Model,
    cfg: &TrainConfig,
    states: &mut [Option<DocState>],
) -> Result<ShardResult> {
    let mut stats = e_step_sweep(corpus, &plan.shards[shard], model, cfg, states)?;
    let pi_local = match plan.solution {
        Solution::Solution1 => None,
        Solution::Solution2 => {
            let pi = estimate_pi(&stats.pi_records, model.pi(), cfg)?;
            Some(vec![PiBlock {
                coords: (0..pi.len()).collect(),
                values: pi,
            }])
        }
        Solution::Solution3 => {
            let mut by_group: Vec<(usize, Vec<PiRecord>)> = Vec::new();
            for r in &stats.pi_records {
                let g = group_of[r.doc];
                match by_group.iter_mut().find(|(id, _)| *id == g) {
                    Some((_, recs)) => recs.push(r.clone()),
                    None => by_group.push((g, vec![r.clone()])),
                }
            }
            by_group.sort_by_key(|(g, _)| *g);
            let blocks = by_group
                .iter()
                .map(|(_, recs)| estimate_pi_block(recs, model.pi(), cfg))
                .collect::<Result<Vec<_>>>()?;
            Some(blocks)
        }
    };
    if pi_local.is_some() {
        stats.pi_records.clear();
    }
    let elbo = stats.elbo_sum;
    Ok(ShardResult {
        shard,
        stats,
        pi_local,
        elbo,
    })
}

fn block_bytes(blocks: &[PiBlock]) -> usize {
    blocks
        .iter()
        .map(|b| {
            b.coords.len() * std::mem::size_of::<usize>()
                + b.values.len() * std::mem::size_of::<f64>()
        })
        .sum()
}

/// Combines Solution III blocks. Observed-tag coordinates belong to exactly
/// one block; the latent coordinate, shared by every document, is averaged
/// over the blocks that carry tagged documents.
fn combine_blocks(pi0: &[f64], blocks: &[PiBlock], latent: Option<usize>) -> Vec<f64> {
    let mut pi = pi0.to_vec();
    let mut latent_sum = 0.0;
    let mut latent_n = 0usize;
    for b in blocks {
        let has_observed = b.coords.iter().any(|&c| Some(c) != latent);
        for (&c, &v) in b.coords.iter().zip(&b.values) {
            if Some(c) == latent {
                if has_observed {
                    latent_sum += v;
                    latent_n += 1;
                }
            } else {
                pi[c] = v;
            }
        }
    }
    if let Some(l) = latent {
        if latent_n > 0 {
            pi[l] = latent_sum / latent_n as f64;
        }
    }
    pi
}

/// Unweighted mean of per-shard π estimates; `fallback` when there are none.
pub fn mean_pi(locals: &[Vec<f64>], fallback: &[f64]) -> Vec<f64> {
    if locals.is_empty() {
        return fallback.to_vec();
    }
    let mut pi = vec![0.0; fallback.len()];
    for local in locals {
        for (p, v) in pi.iter_mut().zip(local) {
            *p += v;
        }
    }
    let n = locals.len() as f64;
    pi.iter_mut().for_each(|p| *p /= n);
    pi
}

/// One map/reduce/drive round. `states` holds each shard's warm-start state
/// and is updated in place.
pub fn run_iteration(
    corpus: &Corpus,
    plan: &ShardPlan,
    model: &Model,
    cfg: &TrainConfig,
    states: &mut Vec<Vec<Option<DocState>>>,
    iteration: usize,
) -> Result<(Model, IterationTiming)> {
    let start = Instant::now();
    let group_of = plan.group_of_doc(corpus.num_docs());
    let taken: Vec<Vec<Option<DocState>>> = std::mem::take(states);
    let (tx, rx) = mpsc::channel();
    let mut returned: Vec<Option<Vec<Option<DocState>>>> = vec![None; plan.shards.len()];
    let mut results: Vec<Option<Result<ShardResult>>> =
        (0..plan.shards.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (shard, mut shard_states) in taken.into_iter().enumerate() {
            let tx = tx.clone();
            let group_of = &group_of;
            scope.spawn(move || {
                let result =
                    map_shard(corpus, plan, group_of, shard, model, cfg, &mut shard_states);
                let _ = tx.send((shard, shard_states, result));
            });
        }
        drop(tx);
        for (shard, shard_states, result) in rx {
            returned[shard] = Some(shard_states);
            results[shard] = Some(result);
        }
    });
    *states = returned
        .into_iter()
        .map(|s| s.expect("every worker reports"))
        .collect();
    let map_done = Instant::now();

    let mut merged = SufficientStats::new(model);
    let mut blocks: Vec<Vec<PiBlock>> = Vec::new();
    for (shard, result) in results.into_iter().enumerate() {
        let result = result
            .expect("every worker reports")
            .map_err(|e| Error::Worker {
                shard,
                source: Box::new(e),
            })?;
        merged.merge(result.stats)?;
        if let Some(b) = result.pi_local {
            blocks.push(b);
        }
    }
    let reduce_done = Instant::now();

    let (pi, gathered) = match plan.solution {
        Solution::Solution1 => {
            merged.pi_records.sort_by_key(|r| r.doc);
            let bytes = merged.pi_record_bytes();
            (estimate_pi(&merged.pi_records, model.pi(), cfg)?, bytes)
        }
        Solution::Solution2 => {
            let bytes = blocks.iter().map(|b| block_bytes(b)).sum();
            let locals: Vec<Vec<f64>> = blocks.into_iter().flatten().map(|b| b.values).collect();
            (mean_pi(&locals, model.pi()), bytes)
        }
        Solution::Solution3 => {
            let bytes = blocks.iter().map(|b| block_bytes(b)).sum();
            let flat: Vec<PiBlock> = blocks.into_iter().flatten().collect();
            (
                combine_blocks(model.pi(), &flat, model.latent_coordinate()),
                bytes,
            )
        }
    };
    let next = apply_stats(model, &merged, pi, cfg)?;
    let end = Instant::now();
    Ok((
        next,
        IterationTiming {
            iteration,
            map_secs: (map_done - start).as_secs_f64(),
            reduce_secs: (reduce_done - map_done).as_secs_f64(),
            drive_secs: (end - reduce_done).as_secs_f64(),
            total_secs: (end - start).as_secs_f64(),
            gathered_pi_bytes: gathered,
            elbo: merged.elbo_sum,
        },
    ))
}

/// Trains with the given solution and worker count, using the same
/// initialization and stopping rule as sequential training.
pub fn train_parallel(
    corpus: &Corpus,
    kind: TagMode,
    solution: Solution,
    workers: usize,
    cfg: &TrainConfig,
) -> Result<ParallelTrained> {
    cfg.validate()?;
    let plan = plan_shards(corpus, kind, solution, workers)?;
    let model = initial_model(corpus, kind, cfg)?;
    train_parallel_from(corpus, plan, model, cfg)
}

pub fn train_parallel_from(
    corpus: &Corpus,
    plan: ShardPlan,
    mut model: Model,
    cfg: &TrainConfig,
) -> Result<ParallelTrained> {
    let mut states: Vec<Vec<Option<DocState>>> =
        plan.shards.iter().map(|s| vec![None; s.len()]).collect();
    let mut trace: Vec<f64> = Vec::new();
    let mut timing = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let (next, t) = run_iteration(corpus, &plan, &model, cfg, &mut states, iterations)?;
        model = next;
        iterations += 1;
        log::info!(
            "iteration {iterations}: elbo {:.6} ({:.3}s)",
            t.elbo,
            t.total_secs
        );
        let prev = trace.last().copied();
        trace.push(t.elbo);
        timing.push(t);
        if prev.is_some_and(|p| relative_change_below(p, trace[trace.len() - 1], cfg.tol)) {
            converged = true;
            break;
        }
    }
    let mut ordered: Vec<Option<DocState>> = vec![None; corpus.num_docs()];
    for (shard, shard_states) in plan.shards.iter().zip(states) {
        for (&d, s) in shard.iter().zip(shard_states) {
            ordered[d] = s;
        }
    }
    Ok(ParallelTrained {
        trained: Trained {
            model,
            states: ordered.into_iter().flatten().collect(),
            elbo_trace: trace,
            iterations,
            converged,
        },
        timing,
        plan,
    })
}
