//! Benchmark loaders, constant-feature injection and seeded splits.
//!
//! TUDataset directories use the standard flat files with 1-based,
//! comma-separated indices. Node-classification graphs use a small JSON
//! layout:
//!
//! ```json
//! {"num_nodes": 3, "edges": [[0, 1], [1, 2]],
//!  "features": [[1.0], [0.0], [1.0]], "labels": [0, 1, 0]}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::tensor::Tensor2;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("format error in {file} line {line}: {msg}")]
    Format {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("dataset already has {0} feature columns; constant injection needs a featureless dataset")]
    AlreadyFeatured(usize),
    #[error("split needs at least 3 items, got {0}")]
    TooFewItems(usize),
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    BadFractions((f64, f64, f64)),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// A labelled collection of graphs sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, labels: Vec<usize>) -> Result<Self, DatasetError> {
        if graphs.len() != labels.len() {
            return Err(DatasetError::Malformed(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        let feature_dim = graphs.first().map_or(0, Graph::feature_dim);
        if let Some(g) = graphs.iter().find(|g| g.feature_dim() != feature_dim) {
            return Err(DatasetError::Malformed(format!(
                "mixed feature dims {} and {}",
                feature_dim,
                g.feature_dim()
            )));
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            name: name.into(),
            graphs,
            labels,
            num_classes,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn mean_nodes(&self) -> f64 {
        let total: usize = self.graphs.iter().map(Graph::num_nodes).sum();
        total as f64 / self.len().max(1) as f64
    }

    /// Mean number of stored arcs (each undirected edge counted in both directions).
    pub fn mean_arcs(&self) -> f64 {
        let total: usize = self.graphs.iter().map(Graph::num_arcs).sum();
        total as f64 / self.len().max(1) as f64
    }

    /// Adds a single constant feature of 1.0 to every node. Only valid on
    /// featureless datasets.
    pub fn inject_constant_feature(self) -> Result<Self, DatasetError> {
        if self.feature_dim != 0 {
            return Err(DatasetError::AlreadyFeatured(self.feature_dim));
        }
        let graphs = self
            .graphs
            .into_iter()
            .map(|g| {
                let n = g.num_nodes();
                g.with_features(Tensor2::filled(n, 1, 1.0))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            graphs,
            feature_dim: 1,
            ..self
        })
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn parse_int<T: std::str::FromStr>(s: &str, file: &str, line: usize) -> Result<T, DatasetError> {
    s.trim().parse().map_err(|_| DatasetError::Format {
        file: file.to_string(),
        line,
        msg: format!("expected integer, got {s:?}"),
    })
}

/// Maps arbitrary label values onto `0..k` in ascending value order.
fn densify(values: &[i64]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &v in values {
        map.entry(v).or_insert(0usize);
    }
    for (i, slot) in map.values_mut().enumerate() {
        *slot = i;
    }
    (values.iter().map(|v| map[v]).collect(), map.len())
}

/// Loads a TUDataset directory. The dataset name is taken from the
/// `<DS>_A.txt` file found in the directory.
pub fn load_tudataset(dir: impl AsRef<Path>) -> Result<GraphDataset, DatasetError> {
    let dir = dir.as_ref();
    let name = find_dataset_name(dir)?;
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_lines = read_lines(&file("graph_indicator"))?;
    let graph_label_lines = read_lines(&file("graph_labels"))?;
    let edge_lines = read_lines(&file("A"))?;
    let node_label_path = file("node_labels");
    let node_label_lines = if node_label_path.exists() {
        Some(read_lines(&node_label_path)?)
    } else {
        None
    };

    let ind_name = format!("{name}_graph_indicator.txt");
    let mut indicator = Vec::with_capacity(indicator_lines.len());
    for (i, l) in indicator_lines.iter().enumerate() {
        let gid: usize = parse_int(l, &ind_name, i + 1)?;
        if gid == 0 {
            return Err(DatasetError::Format {
                file: ind_name,
                line: i + 1,
                msg: "graph ids are 1-based".into(),
            });
        }
        if let Some(&prev) = indicator.last() {
            if gid < prev {
                return Err(DatasetError::Format {
                    file: ind_name,
                    line: i + 1,
                    msg: format!("graph id {gid} after {prev}; indicator must be non-decreasing"),
                });
            }
        }
        indicator.push(gid);
    }
    let num_graphs = graph_label_lines.len();
    if indicator.last().copied().unwrap_or(0) > num_graphs {
        return Err(DatasetError::Malformed(format!(
            "indicator references graph {} but only {} labels exist",
            indicator.last().unwrap(),
            num_graphs
        )));
    }

    // first global node id and size of each graph
    let mut start = vec![usize::MAX; num_graphs];
    let mut size = vec![0usize; num_graphs];
    for (node, &gid) in indicator.iter().enumerate() {
        let g = gid - 1;
        if start[g] == usize::MAX {
            start[g] = node;
        }
        size[g] += 1;
    }

    let a_name = format!("{name}_A.txt");
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (i, l) in edge_lines.iter().enumerate() {
        let mut parts = l.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(DatasetError::Format {
                file: a_name,
                line: i + 1,
                msg: "expected two comma-separated ids".into(),
            });
        };
        let u: usize = parse_int(a, &a_name, i + 1)?;
        let v: usize = parse_int(b, &a_name, i + 1)?;
        if u == 0 || v == 0 || u > indicator.len() || v > indicator.len() {
            return Err(DatasetError::Format {
                file: a_name,
                line: i + 1,
                msg: format!("node id out of range in ({u}, {v})"),
            });
        }
        let (gu, gv) = (indicator[u - 1], indicator[v - 1]);
        if gu != gv {
            return Err(DatasetError::Format {
                file: a_name,
                line: i + 1,
                msg: format!("edge ({u}, {v}) crosses graphs {gu} and {gv}"),
            });
        }
        let g = gu - 1;
        let (lu, lv) = (u - 1 - start[g], v - 1 - start[g]);
        if lu != lv {
            edges[g].push((lu, lv));
        }
    }

    let features: Option<Tensor2> = match node_label_lines {
        Some(lines) => {
            if lines.len() != indicator.len() {
                return Err(DatasetError::Malformed(format!(
                    "{} node labels for {} nodes",
                    lines.len(),
                    indicator.len()
                )));
            }
            let nl_name = format!("{name}_node_labels.txt");
            let raw = lines
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    // some datasets carry extra attribute columns; the first is the label
                    parse_int::<i64>(l.split(',').next().unwrap_or(""), &nl_name, i + 1)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let (dense, k) = densify(&raw);
            let mut x = Tensor2::zeros(indicator.len(), k);
            for (node, &c) in dense.iter().enumerate() {
                x.set(node, c, 1.0);
            }
            Some(x)
        }
        None => None,
    };

    let gl_name = format!("{name}_graph_labels.txt");
    let raw_labels = graph_label_lines
        .iter()
        .enumerate()
        .map(|(i, l)| parse_int::<i64>(l, &gl_name, i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let (labels, _) = densify(&raw_labels);

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        if size[g] == 0 {
            return Err(DatasetError::Malformed(format!("graph {} has no nodes", g + 1)));
        }
        let feats = features.as_ref().map(|x| {
            let rows: Vec<usize> = (start[g]..start[g] + size[g]).collect();
            x.select_rows(&rows)
        });
        let graph = Graph::build(size[g], &edges[g], false, feats)?.with_graph_label(labels[g]);
        graphs.push(graph);
    }
    GraphDataset::new(name, graphs, labels)
}

fn find_dataset_name(dir: &Path) -> Result<String, DatasetError> {
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(String::from))
        .filter_map(|f| f.strip_suffix("_A.txt").map(String::from))
        .collect();
    names.sort();
    names
        .into_iter()
        .next()
        .ok_or_else(|| DatasetError::MissingFile(dir.join("<DS>_A.txt")))
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDatasetFile {
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

/// Loads a single node-classification graph from the JSON layout.
pub fn load_node_dataset(path: impl AsRef<Path>) -> Result<Graph, DatasetError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_node_dataset(&text)
}

pub fn parse_node_dataset(text: &str) -> Result<Graph, DatasetError> {
    let file: NodeDatasetFile = serde_json::from_str(text)?;
    if file.features.len() != file.num_nodes || file.labels.len() != file.num_nodes {
        return Err(DatasetError::Malformed(format!(
            "num_nodes {} but {} feature rows and {} labels",
            file.num_nodes,
            file.features.len(),
            file.labels.len()
        )));
    }
    let features = Tensor2::from_rows(&file.features)
        .ok_or_else(|| DatasetError::Malformed("ragged feature rows".into()))?;
    let edges: Vec<(usize, usize)> = file
        .edges
        .iter()
        .filter(|e| e[0] != e[1])
        .map(|e| (e[0], e[1]))
        .collect();
    let g = Graph::build(file.num_nodes, &edges, false, Some(features))?;
    Ok(g.with_node_labels(file.labels)?)
}

/// Train/validation/test index partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const GRAPH_TASK_FRACTIONS: (f64, f64, f64) = (0.8, 0.1, 0.1);
pub const NODE_TASK_FRACTIONS: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// Seeded shuffle; test and validation get `round(frac * n)` items and
/// training keeps the remainder. Each index list is returned sorted.
pub fn make_splits(
    n_items: usize,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitSpec, DatasetError> {
    if n_items < 3 {
        return Err(DatasetError::TooFewItems(n_items));
    }
    let (tr, va, te) = fractions;
    if tr < 0.0 || va < 0.0 || te < 0.0 || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadFractions(fractions));
    }
    let n_test = (te * n_items as f64).round() as usize;
    let n_val = (va * n_items as f64).round() as usize;
    if n_test + n_val >= n_items {
        return Err(DatasetError::BadFractions(fractions));
    }
    let mut perm: Vec<usize> = (0..n_items).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let mut test = perm[..n_test].to_vec();
    let mut val = perm[n_test..n_test + n_val].to_vec();
    let mut train = perm[n_test + n_val..].to_vec();
    test.sort_unstable();
    val.sort_unstable();
    train.sort_unstable();
    Ok(SplitSpec {
        seed,
        train,
        val,
        test,
    })
}

impl SplitSpec {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("split serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, DatasetError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Writes a list of splits as a JSON array of split objects.
pub fn save_splits(path: impl AsRef<Path>, splits: &[SplitSpec]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(splits)?;
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_splits(path: impl AsRef<Path>) -> Result<Vec<SplitSpec>, DatasetError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_triangle_dir(dir: &Path) {
        fs::write(dir.join("TRI_A.txt"), "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n").unwrap();
        fs::write(dir.join("TRI_graph_indicator.txt"), "1\n1\n1\n").unwrap();
        fs::write(dir.join("TRI_graph_labels.txt"), "-1\n").unwrap();
    }

    #[test]
    fn minimal_triangle_directory() {
        let tmp = tempfile::tempdir().unwrap();
        write_triangle_dir(tmp.path());
        let ds = load_tudataset(tmp.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0].num_nodes(), 3);
        assert_eq!(ds.graphs[0].num_edges(), 3);
        assert_eq!(ds.labels, vec![0]);
        assert_eq!(ds.feature_dim, 0);
    }

    #[test]
    fn missing_file_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        write_triangle_dir(tmp.path());
        fs::remove_file(tmp.path().join("TRI_graph_labels.txt")).unwrap();
        assert!(matches!(load_tudataset(tmp.path()), Err(DatasetError::MissingFile(_))));
    }

    #[test]
    fn cross_graph_edge_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("X_A.txt"), "1, 2\n2, 3\n").unwrap();
        fs::write(tmp.path().join("X_graph_indicator.txt"), "1\n1\n2\n").unwrap();
        fs::write(tmp.path().join("X_graph_labels.txt"), "1\n2\n").unwrap();
        let err = load_tudataset(tmp.path()).unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_monotone_indicator_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("X_A.txt"), "1, 2\n").unwrap();
        fs::write(tmp.path().join("X_graph_indicator.txt"), "2\n1\n").unwrap();
        fs::write(tmp.path().join("X_graph_labels.txt"), "1\n2\n").unwrap();
        assert!(matches!(load_tudataset(tmp.path()), Err(DatasetError::Format { .. })));
    }

    #[test]
    fn node_labels_become_one_hot_and_labels_densify() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("Y_A.txt"), "1, 2\n2, 1\n3, 4\n4, 3\n").unwrap();
        fs::write(tmp.path().join("Y_graph_indicator.txt"), "1\n1\n2\n2\n").unwrap();
        fs::write(tmp.path().join("Y_graph_labels.txt"), "1\n2\n").unwrap();
        fs::write(tmp.path().join("Y_node_labels.txt"), "3\n7\n7\n3\n").unwrap();
        let ds = load_tudataset(tmp.path()).unwrap();
        assert_eq!(ds.labels, vec![0, 1]);
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.feature_dim, 2);
        assert_eq!(ds.graphs[1].features().unwrap().data(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(ds.graphs[1].edges(), vec![(0, 1)]);
    }

    #[test]
    fn constant_feature_injection() {
        let g = Graph::build(1, &[], false, None).unwrap();
        let ds = GraphDataset::new("one", vec![g], vec![0]).unwrap();
        let ds = ds.inject_constant_feature().unwrap();
        assert_eq!(ds.feature_dim, 1);
        assert_eq!(ds.graphs[0].features().unwrap().data(), &[1.0]);
        assert!(matches!(
            ds.inject_constant_feature(),
            Err(DatasetError::AlreadyFeatured(1))
        ));
    }

    #[test]
    fn split_sizes() {
        assert_eq!(make_splits(188, GRAPH_TASK_FRACTIONS, 3).unwrap().sizes(), (150, 19, 19));
        assert_eq!(make_splits(10, GRAPH_TASK_FRACTIONS, 3).unwrap().sizes(), (8, 1, 1));
        assert_eq!(make_splits(10, GRAPH_TASK_FRACTIONS, 9).unwrap(), make_splits(10, GRAPH_TASK_FRACTIONS, 9).unwrap());
        assert!(matches!(make_splits(2, GRAPH_TASK_FRACTIONS, 0), Err(DatasetError::TooFewItems(2))));
        assert!(make_splits(10, (0.5, 0.1, 0.1), 0).is_err());
    }

    #[test]
    fn split_json_round_trip() {
        let s = make_splits(20, NODE_TASK_FRACTIONS, 4).unwrap();
        assert_eq!(SplitSpec::from_json(&s.to_json()).unwrap(), s);
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("splits.json");
        save_splits(&p, std::slice::from_ref(&s)).unwrap();
        assert_eq!(load_splits(&p).unwrap(), vec![s]);
    }

    #[test]
    fn node_dataset_toy() {
        let g = parse_node_dataset(
            r#"{"num_nodes": 2, "edges": [[0, 1]], "features": [[1.0, 0.0], [0.0, 1.0]], "labels": [0, 1]}"#,
        )
        .unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.feature_dim(), 2);
        assert_eq!(g.node_labels().unwrap(), &[0, 1]);
        assert!(parse_node_dataset(r#"{"num_nodes": 2, "edges": [], "features": [[1.0]], "labels": [0, 1]}"#).is_err());
        assert!(parse_node_dataset("{not json").is_err());
    }

    proptest! {
        #[test]
        fn splits_partition(n in 3usize..1000, seed in any::<u64>(), node_task in any::<bool>()) {
            let fr = if node_task { NODE_TASK_FRACTIONS } else { GRAPH_TASK_FRACTIONS };
            let s = make_splits(n, fr, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
