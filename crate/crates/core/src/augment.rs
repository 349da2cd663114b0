//! Local virtual node (LVN) augmentation and the global virtual node
//! baseline.
//!
//! Every central node `i` is replaced by a group of `n_c` virtual nodes. In
//! undirected mode each LVN of the group is joined to every non-central
//! neighbor of `i`. In directed mode every LVN receives from all of those
//! neighbors but sends to only a round-robin share of them. Groups of
//! adjacent centrals are fully connected to each other. The central nodes
//! themselves are then dropped and the survivors relabeled in ascending
//! order, followed by the virtual nodes in (group, slot) order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::CentralSelection;
use crate::graph::{Graph, GraphError};
use crate::tensor::Tensor2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("n_c must be at least 1")]
    ZeroGroupSize,
    #[error("LVN augmentation expects an undirected input graph")]
    DirectedInput,
    #[error("central node {0} is not a node of the graph")]
    BadCentral(usize),
    #[error("central node {0} selected twice")]
    DuplicateCentral(usize),
    #[error("GVN count must be at least 1")]
    ZeroGvn,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    Undirected,
    Directed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualNodeRecord {
    /// Id in the augmented graph.
    pub node: usize,
    pub group: usize,
    pub slot: usize,
    pub origin_node: usize,
    /// Input features of the central node, copied before removal.
    pub origin_features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGraph {
    /// Survivors first, then virtual nodes. Feature rows of virtual nodes hold
    /// their origin's features; node labels likewise.
    pub graph: Graph,
    pub registry: Vec<VirtualNodeRecord>,
    pub n_c: usize,
    pub n_s: usize,
    pub edge_mode: EdgeMode,
    /// Original id -> augmented id; `None` for removed central nodes.
    pub old_to_new: Vec<Option<usize>>,
    /// Central nodes in group order.
    pub centrals: Vec<usize>,
    /// Groups whose central node had no neighbors; their LVNs are isolated.
    pub isolated_groups: Vec<usize>,
}

impl AugmentedGraph {
    /// Number of surviving original nodes; virtual ids start here.
    pub fn num_original(&self) -> usize {
        self.graph.num_nodes() - self.registry.len()
    }

    pub fn is_virtual(&self, node: usize) -> bool {
        node >= self.num_original()
    }

    /// Identity augmentation: no central nodes.
    pub fn passthrough(g: &Graph) -> Self {
        Self {
            graph: g.clone(),
            registry: Vec::new(),
            n_c: 0,
            n_s: 0,
            edge_mode: EdgeMode::Undirected,
            old_to_new: (0..g.num_nodes()).map(Some).collect(),
            centrals: Vec::new(),
            isolated_groups: Vec::new(),
        }
    }

    /// Virtual node ids per group, slot-ordered.
    pub fn readout_groups(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for r in &self.registry {
            groups.entry(r.group).or_default().push((r.slot, r.node));
        }
        groups
            .into_iter()
            .map(|(g, mut v)| {
                v.sort_unstable();
                (g, v.into_iter().map(|(_, n)| n).collect())
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let g = &self.graph;
        let mut edges = Vec::new();
        for (u, v) in g.arcs() {
            let reverse = g.has_edge(v, u);
            if reverse && u > v {
                continue;
            }
            edges.push(SerializedEdge {
                source: u,
                target: v,
                directed: !reverse,
            });
        }
        serde_json::to_value(SerializedAugmented {
            num_nodes: g.num_nodes(),
            num_original: self.num_original(),
            num_edges: edges.len(),
            n_s: self.n_s,
            n_c: self.n_c,
            edge_mode: self.edge_mode,
            centrals: self.centrals.clone(),
            old_to_new: self.old_to_new.clone(),
            edges,
            registry: self.registry.clone(),
            isolated_groups: self.isolated_groups.clone(),
        })
        .expect("augmented graph serializes")
    }
}

#[derive(Serialize)]
struct SerializedEdge {
    source: usize,
    target: usize,
    directed: bool,
}

#[derive(Serialize)]
struct SerializedAugmented {
    num_nodes: usize,
    num_original: usize,
    num_edges: usize,
    n_s: usize,
    n_c: usize,
    edge_mode: EdgeMode,
    centrals: Vec<usize>,
    old_to_new: Vec<Option<usize>>,
    edges: Vec<SerializedEdge>,
    registry: Vec<VirtualNodeRecord>,
    isolated_groups: Vec<usize>,
}

pub fn lvn_augment(
    g: &Graph,
    selection: &CentralSelection,
    n_c: usize,
    mode: EdgeMode,
) -> Result<AugmentedGraph, AugmentError> {
    if n_c == 0 {
        return Err(AugmentError::ZeroGroupSize);
    }
    if g.is_directed() {
        return Err(AugmentError::DirectedInput);
    }
    let n = g.num_nodes();
    let centrals = selection.ranked().to_vec();
    let mut group_of = vec![None; n];
    for (k, &c) in centrals.iter().enumerate() {
        if c >= n {
            return Err(AugmentError::BadCentral(c));
        }
        if group_of[c].is_some() {
            return Err(AugmentError::DuplicateCentral(c));
        }
        group_of[c] = Some(k);
    }
    let n_s = centrals.len();

    let mut old_to_new = vec![None; n];
    let mut survivors = Vec::with_capacity(n - n_s);
    for v in 0..n {
        if group_of[v].is_none() {
            old_to_new[v] = Some(survivors.len());
            survivors.push(v);
        }
    }
    let base = survivors.len();
    let lvn = |group: usize, slot: usize| base + group * n_c + slot;
    let total = base + n_s * n_c;

    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for (u, v) in g.arcs() {
        if let (Some(a), Some(b)) = (old_to_new[u], old_to_new[v]) {
            arcs.push((a, b));
        }
    }
    for (k, &c) in centrals.iter().enumerate() {
        let outside: Vec<usize> = g
            .neighbors(c)
            .iter()
            .filter_map(|&j| old_to_new[j])
            .collect();
        for (idx, &j) in outside.iter().enumerate() {
            for m in 0..n_c {
                arcs.push((j, lvn(k, m)));
                if mode == EdgeMode::Undirected {
                    arcs.push((lvn(k, m), j));
                }
            }
            if mode == EdgeMode::Directed {
                arcs.push((lvn(k, idx % n_c), j));
            }
        }
        for &other in g.neighbors(c) {
            if let Some(k2) = group_of[other] {
                for y in 0..n_c {
                    for z in 0..n_c {
                        arcs.push((lvn(k, y), lvn(k2, z)));
                    }
                }
            }
        }
    }
    // undirected mode emits both directions explicitly, so build as directed
    // storage and only flag the result
    let mut graph = Graph::build(total, &arcs, true, None)?;
    if mode == EdgeMode::Undirected {
        graph = graph.symmetrize();
    }

    let mut registry = Vec::with_capacity(n_s * n_c);
    for (k, &c) in centrals.iter().enumerate() {
        let origin_features = g.features().map(|f| f.row(c).to_vec()).unwrap_or_default();
        for m in 0..n_c {
            registry.push(VirtualNodeRecord {
                node: lvn(k, m),
                group: k,
                slot: m,
                origin_node: c,
                origin_features: origin_features.clone(),
            });
        }
    }

    let isolated_groups: Vec<usize> = (0..n_s).filter(|&k| g.degree(centrals[k]) == 0).collect();
    if !isolated_groups.is_empty() {
        log::warn!("LVN groups {isolated_groups:?} come from isolated central nodes and have no edges");
    }

    if let Some(f) = g.features() {
        let mut rows = survivors.clone();
        rows.extend(registry.iter().map(|r| r.origin_node));
        graph = graph.with_features(f.select_rows(&rows))?;
    }
    if let Some(l) = g.node_labels() {
        let mut labels: Vec<usize> = survivors.iter().map(|&v| l[v]).collect();
        labels.extend(registry.iter().map(|r| l[r.origin_node]));
        graph = graph.with_node_labels(labels)?;
    }
    if let Some(y) = g.graph_label() {
        graph = graph.with_graph_label(y);
    }

    Ok(AugmentedGraph {
        graph,
        registry,
        n_c,
        n_s,
        edge_mode: mode,
        old_to_new,
        centrals,
        isolated_groups,
    })
}

/// Adds `k` global virtual nodes, each joined to every original node.
/// Virtual feature rows are zero.
pub fn gvn_augment(g: &Graph, k: usize) -> Result<Graph, AugmentError> {
    if k == 0 {
        return Err(AugmentError::ZeroGvn);
    }
    let n = g.num_nodes();
    let mut edges: Vec<(usize, usize)> = g.arcs().collect();
    for m in 0..k {
        for v in 0..n {
            edges.push((v, n + m));
            edges.push((n + m, v));
        }
    }
    let mut out = Graph::build(n + k, &edges, g.is_directed(), None)?;
    if let Some(f) = g.features() {
        out = out.with_features(f.vstack(&Tensor2::zeros(k, f.cols())))?;
    }
    if let Some(y) = g.graph_label() {
        out = out.with_graph_label(y);
    }
    Ok(out)
}
