//! Node centrality scores and selection of the central set that seeds LVN
//! groups.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CentralityError {
    #[error("n_s = {n_s} outside 1..={num_nodes}")]
    BadSelectionSize { n_s: usize, num_nodes: usize },
    #[error("score vector has {scores} entries for {num_nodes} nodes")]
    LengthMismatch { scores: usize, num_nodes: usize },
    #[error("label-propagation scores carry no community assignment")]
    MissingCommunities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityMethod {
    Degree,
    PageRank,
    LabelPropOutDegree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub method: CentralityMethod,
    pub scores: Vec<f64>,
    /// Community id per node, present for label-propagation scores.
    pub communities: Option<Vec<usize>>,
    /// False when PageRank stopped at `max_iter` before reaching `tol`.
    pub converged: bool,
}

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-8;
pub const PAGERANK_MAX_ITER: usize = 200;
pub const LABELPROP_MAX_SWEEPS: usize = 100;

pub fn degree_centrality(g: &Graph) -> CentralityScores {
    CentralityScores {
        method: CentralityMethod::Degree,
        scores: g.degrees().into_iter().map(|d| d as f64).collect(),
        communities: None,
        converged: true,
    }
}

/// Power iteration with uniform teleport. Dangling mass is spread uniformly.
pub fn pagerank(g: &Graph, damping: f64, tol: f64, max_iter: usize) -> CentralityScores {
    assert!(damping > 0.0 && damping < 1.0, "damping must lie in (0, 1)");
    let n = g.num_nodes();
    if n == 0 {
        return CentralityScores {
            method: CentralityMethod::PageRank,
            scores: Vec::new(),
            communities: None,
            converged: true,
        };
    }
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..max_iter {
        let mut dangling = 0.0;
        next.iter_mut().for_each(|v| *v = 0.0);
        for u in 0..n {
            let d = g.degree(u);
            if d == 0 {
                dangling += x[u];
            } else {
                let share = x[u] / d as f64;
                for &v in g.neighbors(u) {
                    next[v] += share;
                }
            }
        }
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        let mut delta = 0.0;
        for v in 0..n {
            let val = damping * next[v] + base;
            delta += (val - x[v]).abs();
            x[v] = val;
        }
        if delta < tol {
            converged = true;
            break;
        }
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    CentralityScores {
        method: CentralityMethod::PageRank,
        scores: x,
        communities: None,
        converged,
    }
}

/// Asynchronous label propagation followed by the out-community degree of
/// every node.
///
/// Each sweep visits nodes in a seeded random order; a node adopts the most
/// frequent label among its neighbors, ties going to the smallest label.
/// Sweeps stop once nothing changes or after `max_sweeps`.
pub fn labelprop_select(g: &Graph, seed: u64, max_sweeps: usize) -> CentralityScores {
    let communities = label_propagation(g, seed, max_sweeps);
    let scores = (0..g.num_nodes())
        .map(|v| {
            g.neighbors(v)
                .iter()
                .filter(|&&u| communities[u] != communities[v])
                .count() as f64
        })
        .collect();
    CentralityScores {
        method: CentralityMethod::LabelPropOutDegree,
        scores,
        communities: Some(communities),
        converged: true,
    }
}

/// Community label per node, renumbered densely by first appearance.
pub fn label_propagation(g: &Graph, seed: u64, max_sweeps: usize) -> Vec<usize> {
    let sym;
    let g = if g.is_directed() {
        sym = g.symmetrize();
        &sym
    } else {
        g
    };
    let n = g.num_nodes();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..max_sweeps {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            if g.degree(v) == 0 {
                continue;
            }
            counts.clear();
            for &u in g.neighbors(v) {
                *counts.entry(labels[u]).or_insert(0) += 1;
            }
            let best_count = counts.values().copied().max().unwrap_or(0);
            // BTreeMap iterates ascending, so the first hit is the smallest label
            let best = counts
                .iter()
                .find(|(_, &c)| c == best_count)
                .map(|(&l, _)| l)
                .unwrap_or(labels[v]);
            if best != labels[v] {
                labels[v] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut remap = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = remap.len();
            *remap.entry(*l).or_insert(next)
        })
        .collect()
}

/// The chosen central set `C` and the rank function `c(.)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentralSelection {
    /// Central nodes in rank order; `ranked[k]` has group index `k`.
    ranked: Vec<usize>,
}

impl CentralSelection {
    pub fn from_ranked(ranked: Vec<usize>) -> Self {
        Self { ranked }
    }

    /// Sorted member set.
    pub fn members(&self) -> Vec<usize> {
        let mut m = self.ranked.clone();
        m.sort_unstable();
        m
    }

    pub fn ranked(&self) -> &[usize] {
        &self.ranked
    }

    pub fn n_s(&self) -> usize {
        self.ranked.len()
    }

    /// Group index of `node`, if it is central.
    pub fn group_of(&self, node: usize) -> Option<usize> {
        self.ranked.iter().position(|&v| v == node)
    }

    pub fn index_map(&self) -> BTreeMap<usize, usize> {
        self.ranked.iter().enumerate().map(|(i, &v)| (v, i)).collect()
    }

    /// The `n` highest-ranked members.
    pub fn truncate(&self, n: usize) -> Self {
        Self {
            ranked: self.ranked[..n.min(self.ranked.len())].to_vec(),
        }
    }
}

fn rank_desc(scores: &[f64], candidates: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut c: Vec<usize> = candidates.into_iter().collect();
    c.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    c
}

/// Picks `n_s` central nodes. Degree and PageRank take the global top
/// scores. Label-propagation mode first takes one winner per community,
/// ranked by score, and falls back to the global ranking when there are
/// fewer communities than `n_s`. Ties go to the smaller node id.
pub fn select_central(
    scores: &CentralityScores,
    g: &Graph,
    n_s: usize,
) -> Result<CentralSelection, CentralityError> {
    let n = g.num_nodes();
    if scores.scores.len() != n {
        return Err(CentralityError::LengthMismatch {
            scores: scores.scores.len(),
            num_nodes: n,
        });
    }
    if n_s == 0 || n_s > n {
        return Err(CentralityError::BadSelectionSize { n_s, num_nodes: n });
    }
    let s = &scores.scores;
    let global = rank_desc(s, 0..n);
    let ranked = match scores.method {
        CentralityMethod::Degree | CentralityMethod::PageRank => global[..n_s].to_vec(),
        CentralityMethod::LabelPropOutDegree => {
            let comm = scores
                .communities
                .as_ref()
                .ok_or(CentralityError::MissingCommunities)?;
            let mut winner: BTreeMap<usize, usize> = BTreeMap::new();
            // global is already in (score desc, id asc) order
            for &v in &global {
                winner.entry(comm[v]).or_insert(v);
            }
            let mut picked = rank_desc(s, winner.into_values());
            picked.truncate(n_s);
            if picked.len() < n_s {
                let mut taken = vec![false; n];
                picked.iter().for_each(|&v| taken[v] = true);
                let fill: Vec<usize> = global.iter().copied().filter(|&v| !taken[v]).collect();
                picked.extend(fill.into_iter().take(n_s - picked.len()));
            }
            picked
        }
    };
    Ok(CentralSelection { ranked })
}

/// Convenience: score `g` with `method` using the default parameters.
pub fn score(g: &Graph, method: CentralityMethod, seed: u64) -> CentralityScores {
    match method {
        CentralityMethod::Degree => degree_centrality(g),
        CentralityMethod::PageRank => pagerank(g, PAGERANK_DAMPING, PAGERANK_TOL, PAGERANK_MAX_ITER),
        CentralityMethod::LabelPropOutDegree => labelprop_select(g, seed, LABELPROP_MAX_SWEEPS),
    }
}
