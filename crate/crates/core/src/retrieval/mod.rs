//! Aggregation-based, sequence-based and hybrid retrieval.
//!
//! Queries and candidates are encoded sequences in the shared latent space.
//! Rankings are lists of candidate indices; ties are broken by ascending
//! index so every ranking is reproducible. [`bench`] times each mode in both
//! directions and reports recall@{1,5,10}.

mod report;

use std::cmp::Ordering;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::{distance, DistanceKind};
use crate::objective::unit_pooled;
use crate::parallel::with_workers;
use crate::{Error, Result};

pub use report::{format_table, format_tsv, TSV_HEADER};

/// Recall cut-offs reported by [`evaluate`].
pub const RECALL_CUTOFFS: [usize; 3] = [1, 5, 10];

/// Which modality asks. `A2V`: audio queries retrieve videos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalDirection {
    A2V,
    V2A,
}

impl RetrievalDirection {
    pub const BOTH: [RetrievalDirection; 2] = [RetrievalDirection::A2V, RetrievalDirection::V2A];

    pub fn name(&self) -> &'static str {
        match self {
            RetrievalDirection::A2V => "A2V",
            RetrievalDirection::V2A => "V2A",
        }
    }

    /// Orders `(query, candidate)` as the kernel's `(video, audio)`.
    fn as_kernel_args<'a>(
        &self,
        query: ArrayView2<'a, f64>,
        candidate: ArrayView2<'a, f64>,
    ) -> (ArrayView2<'a, f64>, ArrayView2<'a, f64>) {
        match self {
            RetrievalDirection::V2A => (query, candidate),
            RetrievalDirection::A2V => (candidate, query),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RetrievalMode {
    Agg,
    Seq { kind: DistanceKind },
    Hybrid { k: usize, kind: DistanceKind },
}

impl RetrievalMode {
    /// Label used in report rows, e.g. `agg`, `seq-eucl`, `hybrid-eucl-k100`.
    pub fn label(&self) -> String {
        match self {
            RetrievalMode::Agg => "agg".into(),
            RetrievalMode::Seq { kind } => format!("seq-{}", kind.name()),
            RetrievalMode::Hybrid { k, kind } => format!("hybrid-{}-k{k}", kind.name()),
        }
    }
}

/// Top-`R` candidate indices per query plus per-phase wall time.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub ranks: Vec<Vec<usize>>,
    pub preselect_s: f64,
    pub rerank_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalReport {
    pub mode: String,
    pub direction: RetrievalDirection,
    #[serde(skip)]
    pub ranks: Vec<Vec<usize>>,
    /// `recall[i]` is recall@`RECALL_CUTOFFS[i]`.
    pub recall: [f64; 3],
    pub preselect_s: f64,
    pub rerank_s: f64,
    pub total_s: f64,
}

/// Sorts `(score, index)` pairs with `better` deciding the score order and
/// ascending index breaking ties, then keeps the first `top`.
fn top_indices(mut scored: Vec<(f64, usize)>, top: usize, better: fn(f64, f64) -> Ordering) -> Vec<usize> {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| better(a.0, b.0).then(a.1.cmp(&b.1));
    let top = top.min(scored.len());
    if top == 0 {
        return Vec::new();
    }
    if top < scored.len() {
        scored.select_nth_unstable_by(top - 1, cmp);
        scored.truncate(top);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, i)| i).collect()
}

fn higher_first(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

fn lower_first(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

fn check_lists(queries: &[Array2<f64>], candidates: &[Array2<f64>]) -> Result<()> {
    if queries.is_empty() || candidates.is_empty() {
        return Err(Error::InvalidArgument("queries and candidates must be non-empty".into()));
    }
    let c = candidates[0].ncols();
    if let Some(bad) = queries.iter().chain(candidates).find(|s| s.ncols() != c) {
        return Err(Error::ShapeMismatch(format!(
            "all sequences must share one width; found {} and {c}",
            bad.ncols()
        )));
    }
    Ok(())
}

/// Ranks candidates by descending cosine similarity of mean-pooled
/// embeddings.
pub fn agg_retrieve(
    queries: &[Array2<f64>],
    candidates: &[Array2<f64>],
    top: usize,
    workers: Option<usize>,
) -> Result<Vec<Vec<usize>>> {
    check_lists(queries, candidates)?;
    let (uq, _) = unit_pooled(queries)?;
    let (uc, _) = unit_pooled(candidates)?;
    let sims = uq.dot(&uc.t());
    Ok(with_workers(workers, || {
        (0..sims.nrows())
            .into_par_iter()
            .map(|i| {
                let scored = sims.row(i).iter().copied().zip(0..).collect();
                top_indices(scored, top, higher_first)
            })
            .collect()
    }))
}

fn rank_by_distance(
    query: &Array2<f64>,
    candidates: &[Array2<f64>],
    pool: impl Iterator<Item = usize>,
    kind: &DistanceKind,
    direction: RetrievalDirection,
    top: usize,
) -> Result<Vec<usize>> {
    let scored = pool
        .map(|j| {
            let (x, y) = direction.as_kernel_args(query.view(), candidates[j].view());
            distance(x, y, kind).map(|d| (d, j))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(top_indices(scored, top, lower_first))
}

/// Queries scored together against each candidate, so a candidate is read
/// once per tile rather than once per query.
const QUERY_TILE: usize = 16;

/// Ranks candidates by ascending raw sequential distance. The video-role
/// sequence is always the kernel's first argument.
pub fn seq_retrieve(
    queries: &[Array2<f64>],
    candidates: &[Array2<f64>],
    kind: &DistanceKind,
    direction: RetrievalDirection,
    top: usize,
    workers: Option<usize>,
) -> Result<Vec<Vec<usize>>> {
    check_lists(queries, candidates)?;
    kind.validate()?;
    with_workers(workers, || {
        let tiles = queries
            .par_chunks(QUERY_TILE)
            .map(|tile| {
                let mut scored = vec![Vec::with_capacity(candidates.len()); tile.len()];
                for (j, cand) in candidates.iter().enumerate() {
                    for (q, s) in tile.iter().zip(scored.iter_mut()) {
                        let (x, y) = direction.as_kernel_args(q.view(), cand.view());
                        s.push((distance(x, y, kind)?, j));
                    }
                }
                Ok(scored.into_iter().map(|s| top_indices(s, top, lower_first)).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(tiles.into_iter().flatten().collect())
    })
}

/// Aggregation pre-selection of `k` candidates, then sequence re-ranking of
/// that pool. Positions past `k` keep the aggregation order.
pub fn hybrid_retrieve(
    queries: &[Array2<f64>],
    candidates: &[Array2<f64>],
    k: usize,
    kind: &DistanceKind,
    direction: RetrievalDirection,
    top: usize,
    workers: Option<usize>,
) -> Result<Ranking> {
    if k == 0 || k > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={}, got {k}",
            candidates.len()
        )));
    }
    kind.validate()?;
    let start = Instant::now();
    let pre = agg_retrieve(queries, candidates, k.max(top), workers)?;
    let preselect_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let ranks = with_workers(workers, || {
        queries
            .par_iter()
            .zip(&pre)
            .map(|(q, order)| {
                let mut ranked = rank_by_distance(q, candidates, order[..k].iter().copied(), kind, direction, k)?;
                ranked.extend_from_slice(&order[k..]);
                ranked.truncate(top);
                Ok(ranked)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Ranking {
        ranks,
        preselect_s,
        rerank_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs any mode. Agg time counts as pre-selection, Seq time as re-ranking.
pub fn retrieve(
    queries: &[Array2<f64>],
    candidates: &[Array2<f64>],
    mode: &RetrievalMode,
    direction: RetrievalDirection,
    top: usize,
    workers: Option<usize>,
) -> Result<Ranking> {
    let start = Instant::now();
    match mode {
        RetrievalMode::Agg => {
            let ranks = agg_retrieve(queries, candidates, top, workers)?;
            Ok(Ranking {
                ranks,
                preselect_s: start.elapsed().as_secs_f64(),
                rerank_s: 0.0,
            })
        }
        RetrievalMode::Seq { kind } => {
            let ranks = seq_retrieve(queries, candidates, kind, direction, top, workers)?;
            Ok(Ranking {
                ranks,
                preselect_s: 0.0,
                rerank_s: start.elapsed().as_secs_f64(),
            })
        }
        RetrievalMode::Hybrid { k, kind } => {
            hybrid_retrieve(queries, candidates, *k, kind, direction, top, workers)
        }
    }
}

/// Fraction of queries whose positive is among the first `r` ranks.
///
/// Rankings may be truncated; a positive outside a truncated list counts as
/// a miss. `candidates` is the size of the candidate set.
pub fn recall_at(ranks: &[Vec<usize>], positives: &[usize], r: usize, candidates: usize) -> Result<f64> {
    if ranks.len() != positives.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rankings but {} positives",
            ranks.len(),
            positives.len()
        )));
    }
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("recall of an empty query set".into()));
    }
    if let Some(&p) = positives.iter().find(|&&p| p >= candidates) {
        return Err(Error::MissingPositive { positive: p, candidates });
    }
    let hits = ranks
        .iter()
        .zip(positives)
        .filter(|(rank, p)| rank.iter().take(r).any(|c| c == *p))
        .count();
    Ok(hits as f64 / ranks.len() as f64)
}

/// Retrieves and scores one mode in one direction.
pub fn evaluate(
    queries: &[Array2<f64>],
    candidates: &[Array2<f64>],
    positives: &[usize],
    mode: &RetrievalMode,
    direction: RetrievalDirection,
    workers: Option<usize>,
) -> Result<RetrievalReport> {
    let top = RECALL_CUTOFFS[RECALL_CUTOFFS.len() - 1];
    let start = Instant::now();
    let ranking = retrieve(queries, candidates, mode, direction, top, workers)?;
    let total_s = start.elapsed().as_secs_f64();
    let mut recall = [0.0; 3];
    for (slot, r) in recall.iter_mut().zip(RECALL_CUTOFFS) {
        *slot = recall_at(&ranking.ranks, positives, r, candidates.len())?;
    }
    Ok(RetrievalReport {
        mode: mode.label(),
        direction,
        ranks: ranking.ranks,
        recall,
        preselect_s: ranking.preselect_s,
        rerank_s: ranking.rerank_s,
        total_s,
    })
}

/// Encoded query and candidate pairs for [`bench`]. `positives[i]` is the
/// candidate index paired with query `i`.
pub struct BenchSet<'a> {
    pub query_videos: &'a [Array2<f64>],
    pub query_audios: &'a [Array2<f64>],
    pub cand_videos: &'a [Array2<f64>],
    pub cand_audios: &'a [Array2<f64>],
    pub positives: &'a [usize],
}

/// Number of queries used by the untimed warm-up pass.
pub const WARMUP_QUERIES: usize = 4;

/// Every mode in both directions. Each timed run follows an untimed warm-up
/// on the first few queries.
pub fn bench(set: &BenchSet<'_>, modes: &[RetrievalMode], workers: Option<usize>) -> Result<Vec<RetrievalReport>> {
    let mut out = Vec::with_capacity(modes.len() * 2);
    for mode in modes {
        for direction in RetrievalDirection::BOTH {
            let (queries, candidates) = match direction {
                RetrievalDirection::V2A => (set.query_videos, set.cand_audios),
                RetrievalDirection::A2V => (set.query_audios, set.cand_videos),
            };
            let warm = WARMUP_QUERIES.min(queries.len());
            retrieve(&queries[..warm], candidates, mode, direction, 1, workers)?;
            out.push(evaluate(queries, candidates, set.positives, mode, direction, workers)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
