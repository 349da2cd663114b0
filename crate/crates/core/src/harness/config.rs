use serde::{Deserialize, Serialize};

use crate::augment::EdgeMode;
use crate::centrality::CentralityMethod;
use crate::gnn::EmbedMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    GraphClassification,
    NodeClassification,
}

/// Graph-level readout over all node rows, virtual ones included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: Task,
    /// TUDataset directory (graph task) or node-dataset JSON file.
    pub dataset: String,
    /// Central nodes per graph; 0 trains a plain GCN.
    pub n_s: usize,
    pub n_c: usize,
    pub centrality: CentralityMethod,
    pub edge_mode: EdgeMode,
    pub embed_mode: EmbedMode,
    /// Defaults to 64 (graph task) or 128 (node task).
    pub hidden_dim: Option<usize>,
    /// Defaults to 4 (graph task) or 3 (node task).
    pub num_layers: Option<usize>,
    pub dropout: f64,
    pub lr: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub num_splits: usize,
    pub base_seed: u64,
    /// Graphs per optimizer step; `None` uses the whole training portion.
    pub batch_size: Option<usize>,
    pub pooling: Pooling,
    /// Use only the first `n` graphs of the dataset.
    pub max_graphs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::GraphClassification,
            dataset: String::new(),
            n_s: 0,
            n_c: 1,
            centrality: CentralityMethod::Degree,
            edge_mode: EdgeMode::Undirected,
            embed_mode: EmbedMode::Replace,
            hidden_dim: None,
            num_layers: None,
            dropout: 0.5,
            lr: 1e-3,
            patience: 100,
            max_epochs: 1000,
            num_splits: 50,
            base_seed: 0,
            batch_size: None,
            pooling: Pooling::Mean,
            max_graphs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim.unwrap_or(match self.task {
            Task::GraphClassification => 64,
            Task::NodeClassification => 128,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers.unwrap_or(match self.task {
            Task::GraphClassification => 4,
            Task::NodeClassification => 3,
        })
    }

    pub fn uses_lvn(&self) -> bool {
        self.n_s > 0
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(format!("lr must be positive, got {}", self.lr));
        }
        if self.uses_lvn() && self.n_c == 0 {
            return Err("n_c must be at least 1 when n_s > 0".into());
        }
        if self.num_splits == 0 {
            return Err("num_splits must be at least 1".into());
        }
        if self.hidden_dim() == 0 {
            return Err("hidden_dim must be positive".into());
        }
        if self.batch_size == Some(0) {
            return Err("batch_size must be positive".into());
        }
        Ok(())
    }
}

/// Cartesian product of LVN settings layered over a base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_s: Vec<usize>,
    pub n_c: Vec<usize>,
    pub centrality: Vec<CentralityMethod>,
    pub edge_mode: Vec<EdgeMode>,
    pub embed_mode: Vec<EmbedMode>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_s: vec![1, 2, 3],
            n_c: vec![2, 4],
            centrality: vec![CentralityMethod::Degree],
            edge_mode: vec![EdgeMode::Directed],
            embed_mode: vec![EmbedMode::Add],
        }
    }
}

impl GridSpec {
    pub fn expand(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &n_s in &self.n_s {
            for &n_c in &self.n_c {
                for &centrality in &self.centrality {
                    for &edge_mode in &self.edge_mode {
                        for &embed_mode in &self.embed_mode {
                            out.push(ExperimentConfig {
                                n_s,
                                n_c,
                                centrality,
                                edge_mode,
                                embed_mode,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}
