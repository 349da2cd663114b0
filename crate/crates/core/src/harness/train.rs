use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::embeddings::{drift_csv, embedding_similarity, similarity_csv, track_embedding_drift};
use super::{mean_ci95, mix_seed, ExperimentConfig, GridSpec, HarnessError, Pooling, Task};
use crate::augment::{lvn_augment, AugmentedGraph};
use crate::centrality::{score, select_central};
use crate::datasets::{
    load_node_dataset, load_tudataset, make_splits, GraphDataset, SplitSpec, GRAPH_TASK_FRACTIONS,
    NODE_TASK_FRACTIONS,
};
use crate::gnn::loss::{argmax_rows, cross_entropy};
use crate::gnn::{
    backward, forward, readout_node, readout_node_backward, AdamState, Architecture, ForwardOptions, InitPlan,
    ModelError, ModelParams, ParamSet, ShiftOperator,
};
use crate::graph::Graph;
use crate::tensor::Tensor2;

pub enum TaskData {
    Graphs(GraphDataset),
    Node(Graph),
}

impl TaskData {
    pub fn num_items(&self) -> usize {
        match self {
            TaskData::Graphs(d) => d.len(),
            TaskData::Node(g) => g.num_nodes(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            TaskData::Graphs(d) => d.num_classes,
            TaskData::Node(g) => g.node_labels().map_or(0, |l| l.iter().max().map_or(0, |m| m + 1)),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            TaskData::Graphs(d) => d.feature_dim,
            TaskData::Node(g) => g.feature_dim(),
        }
    }
}

/// Loads the configured dataset. Featureless data gets a constant feature.
pub fn load_task_data(cfg: &ExperimentConfig) -> Result<TaskData, HarnessError> {
    match cfg.task {
        Task::GraphClassification => {
            let mut ds = load_tudataset(&cfg.dataset)?;
            if let Some(m) = cfg.max_graphs {
                let m = m.min(ds.len());
                ds = GraphDataset::new(ds.name, ds.graphs[..m].to_vec(), ds.labels[..m].to_vec())?;
            }
            if ds.feature_dim == 0 {
                ds = ds.inject_constant_feature()?;
            }
            Ok(TaskData::Graphs(ds))
        }
        Task::NodeClassification => {
            let mut g = load_node_dataset(&cfg.dataset)?;
            if g.node_labels().is_none() {
                return Err(HarnessError::Config("node dataset has no labels".into()));
            }
            if g.feature_dim() == 0 {
                let n = g.num_nodes();
                g = g.with_features(Tensor2::filled(n, 1, 1.0)).map_err(crate::datasets::DatasetError::from)?;
            }
            Ok(TaskData::Node(g))
        }
    }
}

/// An augmented graph ready for the GCN.
pub(crate) struct Prepared {
    pub aug: AugmentedGraph,
    pub shift: ShiftOperator,
    pub plan: InitPlan,
}

/// Augments one graph with its own centrality ranking; `n_s` is capped at the
/// node count.
pub(crate) fn augment_for(g: &Graph, index: usize, cfg: &ExperimentConfig) -> Result<AugmentedGraph, HarnessError> {
    if !cfg.uses_lvn() || g.num_nodes() == 0 {
        return Ok(AugmentedGraph::passthrough(g));
    }
    let scores = score(g, cfg.centrality, cfg.base_seed);
    let selection = select_central(&scores, g, cfg.n_s.min(g.num_nodes()))?;
    lvn_augment(g, &selection, cfg.n_c, cfg.edge_mode).map_err(|source| HarnessError::Augment { graph: index, source })
}

pub(crate) fn prepare(g: &Graph, index: usize, cfg: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    let aug = augment_for(g, index, cfg)?;
    let raw = g.features().ok_or(HarnessError::Featureless)?;
    let raw = match aug.old_to_new.iter().position(Option::is_none) {
        // keep only surviving rows, in their new order
        Some(_) => {
            let keep: Vec<usize> = (0..g.num_nodes()).filter(|&v| aug.old_to_new[v].is_some()).collect();
            raw.select_rows(&keep)
        }
        None => raw.clone(),
    };
    let plan = InitPlan::from_augmented(&aug, &raw, cfg.embed_mode)?;
    let shift = ShiftOperator::build(&aug.graph);
    Ok(Prepared { aug, shift, plan })
}

fn pool(logits: &Tensor2, pooling: Pooling) -> Vec<f64> {
    match pooling {
        Pooling::Mean => logits.column_means(),
        Pooling::Sum => logits.column_sums(),
    }
}

fn pool_backward(grad: &[f64], rows: usize, pooling: Pooling) -> Tensor2 {
    let s = match pooling {
        Pooling::Mean => 1.0 / rows as f64,
        Pooling::Sum => 1.0,
    };
    let mut g = Tensor2::zeros(rows, grad.len());
    for r in 0..rows {
        g.row_mut(r).iter_mut().zip(grad).for_each(|(o, x)| *o = x * s);
    }
    g
}

fn graph_scores(p: &Prepared, params: &ModelParams, pooling: Pooling) -> Result<Vec<f64>, ModelError> {
    let (logits, _) = forward(&p.shift, &p.plan, params, ForwardOptions::inference())?;
    Ok(pool(&logits, pooling))
}

fn graph_gradient(
    p: &Prepared,
    label: usize,
    params: &ModelParams,
    pooling: Pooling,
    opts: ForwardOptions,
) -> Result<(f64, ModelParams), ModelError> {
    let (logits, mut tape) = forward(&p.shift, &p.plan, params, opts)?;
    let pooled = pool(&logits, pooling);
    let k = pooled.len();
    let (loss, g) = cross_entropy(&Tensor2::from_vec(1, k, pooled), &[label], None)?;
    let grad_logits = pool_backward(g.row(0), logits.rows(), pooling);
    Ok((loss, backward(&mut tape, &grad_logits)?.params))
}

/// Everything a split produces.
pub(crate) struct SplitOutcome {
    pub val_acc: f64,
    pub test_acc: f64,
    pub best_epoch: usize,
    pub snapshots: Vec<Tensor2>,
    pub params: ModelParams,
}

/// Per-task evaluation and gradient plumbing for [`train_loop`].
trait Trainer: Sync {
    fn accuracy(&self, params: &ModelParams, items: &[usize]) -> Result<f64, HarnessError>;
    /// Summed gradient for a batch, already divided by the batch size.
    fn batch_gradient(&self, params: &ModelParams, batch: &[usize], seed: u64) -> Result<(f64, ModelParams), HarnessError>;
}

struct GraphTrainer<'a> {
    prepared: &'a [Prepared],
    labels: &'a [usize],
    cfg: &'a ExperimentConfig,
}

impl Trainer for GraphTrainer<'_> {
    fn accuracy(&self, params: &ModelParams, items: &[usize]) -> Result<f64, HarnessError> {
        if items.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0;
        for &i in items {
            let s = graph_scores(&self.prepared[i], params, self.cfg.pooling)?;
            let pred = argmax_rows(&Tensor2::from_vec(1, s.len(), s))[0];
            correct += usize::from(pred == self.labels[i]);
        }
        Ok(correct as f64 / items.len() as f64)
    }

    fn batch_gradient(&self, params: &ModelParams, batch: &[usize], seed: u64) -> Result<(f64, ModelParams), HarnessError> {
        let mut total = params.zeros_like();
        let mut loss = 0.0;
        for &i in batch {
            let opts = ForwardOptions {
                dropout: self.cfg.dropout,
                seed: mix_seed(seed, i as u64),
                training: true,
            };
            let (l, g) = graph_gradient(&self.prepared[i], self.labels[i], params, self.cfg.pooling, opts)?;
            loss += l;
            total.add_assign(&g);
        }
        let inv = 1.0 / batch.len() as f64;
        total.scale(inv);
        Ok((loss * inv, total))
    }
}

struct NodeTrainer<'a> {
    prepared: &'a Prepared,
    labels: &'a [usize],
    cfg: &'a ExperimentConfig,
}

impl Trainer for NodeTrainer<'_> {
    fn accuracy(&self, params: &ModelParams, items: &[usize]) -> Result<f64, HarnessError> {
        if items.is_empty() {
            return Ok(0.0);
        }
        let (logits, _) = forward(&self.prepared.shift, &self.prepared.plan, params, ForwardOptions::inference())?;
        let preds = argmax_rows(&readout_node(&logits, &self.prepared.aug));
        let correct = items.iter().filter(|&&v| preds[v] == self.labels[v]).count();
        Ok(correct as f64 / items.len() as f64)
    }

    fn batch_gradient(&self, params: &ModelParams, batch: &[usize], seed: u64) -> Result<(f64, ModelParams), HarnessError> {
        let opts = ForwardOptions {
            dropout: self.cfg.dropout,
            seed,
            training: true,
        };
        let p = self.prepared;
        let (logits, mut tape) = forward(&p.shift, &p.plan, params, opts)?;
        let scores = readout_node(&logits, &p.aug);
        let (loss, g) = cross_entropy(&scores, self.labels, Some(batch))?;
        let grads = backward(&mut tape, &readout_node_backward(&g, &p.aug))?;
        Ok((loss, grads.params))
    }
}

/// Early-stopped Adam training on one split. Validation ties keep the earlier
/// checkpoint; the untrained model is epoch 0.
fn train_loop(
    trainer: &dyn Trainer,
    arch: &Architecture,
    cfg: &ExperimentConfig,
    split: &SplitSpec,
    split_index: usize,
    track: bool,
) -> Result<SplitOutcome, HarnessError> {
    let seed = cfg.base_seed ^ split_index as u64;
    let mut params = ModelParams::init(arch, seed);
    let mut adam = AdamState::new(&params, cfg.lr);
    let mut order_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5eed));
    let mut best = params.clone();
    let mut best_val = trainer.accuracy(&params, &split.val)?;
    let mut best_epoch = 0;
    let mut snapshots = Vec::new();
    if track {
        snapshots.push(params.embedding_table.clone());
    }
    let mut order = split.train.clone();
    let batch_size = cfg.batch_size.unwrap_or(order.len()).max(1);
    for epoch in 1..=cfg.max_epochs {
        if cfg.batch_size.is_some() {
            order.shuffle(&mut order_rng);
        }
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(batch_size).enumerate() {
            let step_seed = mix_seed(seed, ((epoch as u64) << 20) | b as u64);
            let (loss, grads) = trainer.batch_gradient(&params, batch, step_seed)?;
            if !loss.is_finite() {
                return Err(HarnessError::Numerical(format!(
                    "non-finite loss at split {split_index}, epoch {epoch}"
                )));
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut params, &grads);
        }
        log::trace!("split {split_index} epoch {epoch}: train loss {:.5}", epoch_loss / order.len().max(1) as f64);
        if track {
            snapshots.push(params.embedding_table.clone());
        }
        let val = trainer.accuracy(&params, &split.val)?;
        if val > best_val {
            best_val = val;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.patience {
            log::debug!("split {split_index}: stopping at epoch {epoch}, best {best_epoch}");
            break;
        }
    }
    let test_acc = trainer.accuracy(&best, &split.test)?;
    log::info!("split {split_index}: val {best_val:.4} test {test_acc:.4} (epoch {best_epoch})");
    Ok(SplitOutcome {
        val_acc: best_val,
        test_acc,
        best_epoch,
        snapshots,
        params: best,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub splits: Vec<SplitSpec>,
    pub test_accuracies: Vec<f64>,
    pub val_accuracies: Vec<f64>,
    pub best_epochs: Vec<usize>,
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub mean_val: f64,
    /// Split 0, one row per epoch, one column per slot.
    pub embedding_drift: Vec<Vec<f64>>,
    /// Split 0's restored embedding table.
    pub final_embedding_table: Tensor2,
    pub similarity: Vec<Vec<Option<f64>>>,
    /// Restored embedding table of every split, for the probe.
    #[serde(skip)]
    pub split_embeddings: Vec<Tensor2>,
}

impl RunResult {
    pub fn accuracies_csv(&self) -> String {
        let mut out = String::from("split,seed,val_accuracy,test_accuracy,best_epoch\n");
        for (i, s) in self.splits.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                s.seed, self.val_accuracies[i], self.test_accuracies[i], self.best_epochs[i]
            ));
        }
        out
    }

    pub fn drift_csv(&self) -> String {
        drift_csv(&self.embedding_drift)
    }

    pub fn similarity_csv(&self) -> String {
        similarity_csv(&self.similarity)
    }
}

pub fn run_training(cfg: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    let data = load_task_data(cfg)?;
    run_training_on(cfg, &data)
}

/// Seeded splits for a config: split `i` uses seed `base_seed ⊕ i`.
pub fn splits_for(cfg: &ExperimentConfig, num_items: usize) -> Result<Vec<SplitSpec>, HarnessError> {
    let fractions = match cfg.task {
        Task::GraphClassification => GRAPH_TASK_FRACTIONS,
        Task::NodeClassification => NODE_TASK_FRACTIONS,
    };
    (0..cfg.num_splits)
        .map(|i| Ok(make_splits(num_items, fractions, cfg.base_seed ^ i as u64)?))
        .collect()
}

pub fn run_training_on(cfg: &ExperimentConfig, data: &TaskData) -> Result<RunResult, HarnessError> {
    cfg.validate().map_err(HarnessError::Config)?;
    let splits = splits_for(cfg, data.num_items())?;
    let arch = Architecture {
        in_dim: data.feature_dim(),
        hidden_dim: cfg.hidden_dim(),
        num_layers: cfg.num_layers(),
        num_classes: data.num_classes(),
        n_c: if cfg.uses_lvn() { cfg.n_c } else { 0 },
    };
    let outcomes: Vec<SplitOutcome> = match data {
        TaskData::Graphs(ds) => {
            let prepared = ds
                .graphs
                .par_iter()
                .enumerate()
                .map(|(i, g)| prepare(g, i, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            let trainer = GraphTrainer {
                prepared: &prepared,
                labels: &ds.labels,
                cfg,
            };
            splits
                .par_iter()
                .enumerate()
                .map(|(i, s)| train_loop(&trainer, &arch, cfg, s, i, i == 0))
                .collect::<Result<_, _>>()?
        }
        TaskData::Node(g) => {
            let prepared = prepare(g, 0, cfg)?;
            let labels = g.node_labels().expect("checked at load");
            let trainer = NodeTrainer {
                prepared: &prepared,
                labels,
                cfg,
            };
            splits
                .par_iter()
                .enumerate()
                .map(|(i, s)| train_loop(&trainer, &arch, cfg, s, i, i == 0))
                .collect::<Result<_, _>>()?
        }
    };
    let test: Vec<f64> = outcomes.iter().map(|o| o.test_acc).collect();
    let val: Vec<f64> = outcomes.iter().map(|o| o.val_acc).collect();
    let (mean, ci95_halfwidth) = mean_ci95(&test);
    let mean_val = mean_ci95(&val).0;
    let first = &outcomes[0];
    Ok(RunResult {
        config: cfg.clone(),
        test_accuracies: test,
        val_accuracies: val,
        best_epochs: outcomes.iter().map(|o| o.best_epoch).collect(),
        mean,
        ci95_halfwidth,
        mean_val,
        embedding_drift: track_embedding_drift(&first.snapshots),
        final_embedding_table: first.params.embedding_table.clone(),
        similarity: embedding_similarity(&first.params.embedding_table),
        split_embeddings: outcomes.iter().map(|o| o.params.embedding_table.clone()).collect(),
        splits,
    })
}

/// Runs every grid point over `base`. The best point is the one with the
/// highest mean validation accuracy (earlier points win ties).
pub fn run_grid(base: &ExperimentConfig, grid: &GridSpec, data: &TaskData) -> Result<(Vec<RunResult>, usize), HarnessError> {
    let results = grid
        .expand(base)
        .iter()
        .map(|cfg| run_training_on(cfg, data))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.mean_val > results[best].mean_val {
            best = i;
        }
    }
    Ok((results, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn toy_dataset() -> GraphDataset {
        // class 0: paths, class 1: stars
        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        for n in 4..14 {
            for (g, y) in [(path(n), 0), (star(n), 1)] {
                let f = Tensor2::filled(n, 1, 1.0);
                graphs.push(g.with_features(f).unwrap());
                labels.push(y);
            }
        }
        GraphDataset::new("toy", graphs, labels).unwrap()
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            hidden_dim: Some(8),
            num_layers: Some(2),
            num_splits: 2,
            max_epochs: 30,
            patience: 10,
            lr: 1e-2,
            base_seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let data = TaskData::Graphs(toy_dataset());
        let cfg = ExperimentConfig {
            n_s: 1,
            n_c: 2,
            ..small_cfg()
        };
        let a = run_training_on(&cfg, &data).unwrap();
        let b = run_training_on(&cfg, &data).unwrap();
        assert_eq!(a.accuracies_csv(), b.accuracies_csv());
        assert_eq!(a.drift_csv(), b.drift_csv());
        assert!(a.embedding_drift[0].iter().all(|&d| d == 0.0));
    }

    #[test]
    fn zero_epochs_is_untrained() {
        let data = TaskData::Graphs(toy_dataset());
        let cfg = ExperimentConfig {
            max_epochs: 0,
            ..small_cfg()
        };
        let r = run_training_on(&cfg, &data).unwrap();
        assert!(r.best_epochs.iter().all(|&e| e == 0));
        assert_eq!(r.embedding_drift.len(), 1);
    }

    #[test]
    fn learns_paths_versus_stars() {
        let data = TaskData::Graphs(toy_dataset());
        let cfg = ExperimentConfig {
            max_epochs: 200,
            patience: 200,
            dropout: 0.0,
            pooling: Pooling::Sum,
            ..small_cfg()
        };
        let r = run_training_on(&cfg, &data).unwrap();
        assert!(r.mean_val > 0.5, "{:?}", r.val_accuracies);
    }

    #[test]
    fn node_task_runs_with_lvn() {
        let g = bridged_cliques(5)
            .with_features(Tensor2::filled(10, 1, 1.0))
            .unwrap()
            .with_node_labels((0..10).map(|v| usize::from(v >= 5)).collect())
            .unwrap();
        let cfg = ExperimentConfig {
            task: Task::NodeClassification,
            n_s: 2,
            n_c: 2,
            ..small_cfg()
        };
        let r = run_training_on(&cfg, &TaskData::Node(g)).unwrap();
        assert_eq!(r.test_accuracies.len(), 2);
        assert_eq!(r.final_embedding_table.shape(), (2, 8));
    }
}
