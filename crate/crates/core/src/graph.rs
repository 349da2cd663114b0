//! Immutable CSR graph and the structural transforms shared by every other
//! module.
//!
//! Rows hold out-neighbors sorted ascending. Undirected graphs store both
//! directions of every edge, so `neighbors(i)` is the full neighborhood.

use std::collections::VecDeque;

use thiserror::Error;

use crate::tensor::Tensor2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) has an endpoint outside 0..{2}")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("self-loop ({0}, {0}) is not allowed")]
    SelfLoop(usize),
    #[error("feature matrix has {rows} rows but the graph has {nodes} nodes")]
    FeatureRows { rows: usize, nodes: usize },
    #[error("node label array has {len} entries but the graph has {nodes} nodes")]
    LabelCount { len: usize, nodes: usize },
    #[error("node subset is empty")]
    EmptySubset,
    #[error("node subset is invalid: {0}")]
    InvalidSubset(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    directed: bool,
    features: Option<Tensor2>,
    node_labels: Option<Vec<usize>>,
    graph_label: Option<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicates are merged; for undirected
    /// graphs both directions are materialized.
    pub fn build(
        num_nodes: usize,
        edges: &[(usize, usize)],
        directed: bool,
        features: Option<Tensor2>,
    ) -> Result<Self, GraphError> {
        let mut arcs = Vec::with_capacity(if directed { edges.len() } else { 2 * edges.len() });
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(GraphError::EndpointOutOfRange(u, v, num_nodes));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            arcs.push((u, v));
            if !directed {
                arcs.push((v, u));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        let mut offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &arcs {
            offsets[u + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let targets = arcs.into_iter().map(|(_, v)| v).collect();
        let g = Self {
            num_nodes,
            offsets,
            targets,
            directed,
            features: None,
            node_labels: None,
            graph_label: None,
        };
        match features {
            Some(f) => g.with_features(f),
            None => Ok(g),
        }
    }

    pub fn with_features(mut self, features: Tensor2) -> Result<Self, GraphError> {
        if features.rows() != self.num_nodes {
            return Err(GraphError::FeatureRows {
                rows: features.rows(),
                nodes: self.num_nodes,
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn with_node_labels(mut self, labels: Vec<usize>) -> Result<Self, GraphError> {
        if labels.len() != self.num_nodes {
            return Err(GraphError::LabelCount {
                len: labels.len(),
                nodes: self.num_nodes,
            });
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn with_graph_label(mut self, label: usize) -> Self {
        self.graph_label = Some(label);
        self
    }

    pub fn without_features(mut self) -> Self {
        self.features = None;
        self
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of stored arcs (each undirected edge counts twice).
    #[inline]
    pub fn num_arcs(&self) -> usize {
        self.targets.len()
    }

    /// Undirected edge count for undirected graphs, arc count otherwise.
    pub fn num_edges(&self) -> usize {
        if self.directed {
            self.targets.len()
        } else {
            self.targets.len() / 2
        }
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn features(&self) -> Option<&Tensor2> {
        self.features.as_ref()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.as_ref().map_or(0, Tensor2::cols)
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn graph_label(&self) -> Option<usize> {
        self.graph_label
    }

    /// All stored arcs `(u, v)` in row order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Canonical edge list: `u < v` pairs for undirected graphs, all arcs for
    /// directed ones.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        if self.directed {
            self.arcs().collect()
        } else {
            self.arcs().filter(|&(u, v)| u < v).collect()
        }
    }

    /// Reverse adjacency as (offsets, sources): row `v` lists every `u` with an
    /// arc `u -> v`, ascending.
    pub fn in_adjacency(&self) -> (Vec<usize>, Vec<usize>) {
        let mut offsets = vec![0usize; self.num_nodes + 1];
        for &v in &self.targets {
            offsets[v + 1] += 1;
        }
        for i in 0..self.num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut sources = vec![0usize; self.targets.len()];
        // rows are visited in ascending u, so every in-row ends up sorted
        for (u, v) in self.arcs() {
            sources[cursor[v]] = u;
            cursor[v] += 1;
        }
        (offsets, sources)
    }

    /// Undirected graph on the union of both arc directions. Metadata is kept.
    pub fn symmetrize(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        let edges: Vec<_> = self.arcs().collect();
        let mut g = Graph::build(self.num_nodes, &edges, false, None)
            .expect("arcs of a valid graph are valid edges");
        g.features = self.features.clone();
        g.node_labels = self.node_labels.clone();
        g.graph_label = self.graph_label;
        g
    }

    /// Induced subgraph over `keep`, relabeled in ascending original order.
    /// Returns the graph and the old-to-new map (`None` for dropped nodes).
    pub fn induced_subgraph(
        &self,
        keep: &NodeSubset,
    ) -> Result<(Graph, Vec<Option<usize>>), GraphError> {
        if keep.is_empty() {
            return Err(GraphError::EmptySubset);
        }
        keep.validate(self.num_nodes)?;
        let mut old_to_new = vec![None; self.num_nodes];
        for (new, &old) in keep.members().iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        let n = keep.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for &old in keep.members() {
            // relabeling is monotone, so filtered rows stay sorted
            targets.extend(self.neighbors(old).iter().filter_map(|&t| old_to_new[t]));
            offsets.push(targets.len());
        }
        let g = Graph {
            num_nodes: n,
            offsets,
            targets,
            directed: self.directed,
            features: self.features.as_ref().map(|f| f.select_rows(keep.members())),
            node_labels: self
                .node_labels
                .as_ref()
                .map(|l| keep.members().iter().map(|&i| l[i]).collect()),
            graph_label: self.graph_label,
        };
        Ok((g, old_to_new))
    }

    /// Weak component id per node, numbered in order of smallest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let sym;
        let g = if self.directed {
            sym = self.symmetrize();
            &sym
        } else {
            self
        };
        let mut comp = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.num_nodes {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in g.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn num_components(&self) -> usize {
        self.connected_components()
            .into_iter()
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }
}

/// A sorted set of node ids. `complement_of` names the set this one excludes,
/// when it was built as a complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSubset {
    members: Vec<usize>,
    complement_of: Option<String>,
}

impl NodeSubset {
    /// Sorts and deduplicates `members`.
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self {
            members,
            complement_of: None,
        }
    }

    pub fn all(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    /// Every node of `0..n` not in `excluded`.
    pub fn complement(n: usize, excluded: &[usize], tag: impl Into<String>) -> Self {
        let mut mask = vec![true; n];
        for &e in excluded {
            if e < n {
                mask[e] = false;
            }
        }
        Self {
            members: (0..n).filter(|&i| mask[i]).collect(),
            complement_of: Some(tag.into()),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn complement_of(&self) -> Option<&str> {
        self.complement_of.as_deref()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn validate(&self, num_nodes: usize) -> Result<(), GraphError> {
        if self.members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::InvalidSubset("members not strictly increasing".into()));
        }
        if let Some(&last) = self.members.last() {
            if last >= num_nodes {
                return Err(GraphError::InvalidSubset(format!(
                    "member {last} outside 0..{num_nodes}"
                )));
            }
        }
        Ok(())
    }
}

/// Small fixture graphs used across tests, examples and the CLI.
pub mod fixtures {
    use super::Graph;

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::build(n, &edges, false, None).unwrap()
    }

    /// Hub 0 joined to leaves `1..n`.
    pub fn star(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Graph::build(n, &edges, false, None).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::build(n, &edges, false, None).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::build(n, &edges, false, None).unwrap()
    }

    pub fn empty(n: usize) -> Graph {
        Graph::build(n, &[], false, None).unwrap()
    }

    /// Two `k`-cliques, nodes `0..k` and `k..2k`, joined by the edge
    /// `(k-1, k)`.
    pub fn bridged_cliques(k: usize) -> Graph {
        let mut edges = Vec::new();
        for base in [0, k] {
            for i in 0..k {
                for j in i + 1..k {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((k - 1, k));
        Graph::build(2 * k, &edges, false, None).unwrap()
    }

    /// Two `k`-cliques connected through a path of `bridge` intermediate
    /// nodes. The cliques occupy `0..k` and `k+bridge..2k+bridge`.
    pub fn barbell(k: usize, bridge: usize) -> Graph {
        let n = 2 * k + bridge;
        let mut edges = Vec::new();
        let right = k + bridge;
        for base in [0, right] {
            for i in 0..k {
                for j in i + 1..k {
                    edges.push((base + i, base + j));
                }
            }
        }
        let mut prev = k - 1;
        for b in 0..bridge {
            edges.push((prev, k + b));
            prev = k + b;
        }
        edges.push((prev, right));
        Graph::build(n, &edges, false, None).unwrap()
    }
}
