//! Structure-free MLP probe on raw node features versus the LVN-augmented
//! node set whose virtual rows carry pre-trained embeddings.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::augment_for;
use super::{mean_ci95, mix_seed, ExperimentConfig, HarnessError};
use crate::datasets::{GraphDataset, SplitSpec};
use crate::gnn::loss::cross_entropy;
use crate::gnn::{mlp_probe_backward, mlp_probe_forward, AdamState, EmbedMode, ParamSet, ProbeParams};
use crate::tensor::Tensor2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub hidden_dim: usize,
    pub lr: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: Option<usize>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            lr: 1e-3,
            patience: 100,
            max_epochs: 1000,
            batch_size: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    /// Indices of the splits that had an embedding checkpoint.
    pub used_splits: Vec<usize>,
    pub skipped_splits: Vec<usize>,
    /// The split index sets actually used, copied from the cache.
    pub splits: Vec<SplitSpec>,
    pub raw_accuracies: Vec<f64>,
    pub emb_accuracies: Vec<f64>,
    pub raw_mean: f64,
    pub raw_ci95: f64,
    pub emb_mean: f64,
    pub emb_ci95: f64,
}

impl ProbeResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,raw_accuracy,emb_accuracy\n");
        for (k, s) in self.used_splits.iter().enumerate() {
            out.push_str(&format!("{s},{},{}\n", self.raw_accuracies[k], self.emb_accuracies[k]));
        }
        out
    }
}

/// Node rows of the augmented graph: originals `[x_v ; 0]`, virtual nodes
/// `[x_origin ; p_slot]` in add mode and `[0 ; p_slot]` in replace mode.
pub fn embedded_rows(
    ds: &GraphDataset,
    cfg: &ExperimentConfig,
    table: &Tensor2,
) -> Result<Vec<Tensor2>, HarnessError> {
    let f = ds.feature_dim;
    let d = table.cols();
    ds.graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let aug = augment_for(g, i, cfg)?;
            let x = g.features().ok_or(HarnessError::Featureless)?;
            let mut rows = Tensor2::zeros(aug.graph.num_nodes(), f + d);
            for (v, new) in aug.old_to_new.iter().enumerate() {
                if let Some(r) = *new {
                    rows.row_mut(r)[..f].copy_from_slice(x.row(v));
                }
            }
            for rec in &aug.registry {
                let row = rows.row_mut(rec.node);
                if cfg.embed_mode == EmbedMode::Add {
                    row[..f].copy_from_slice(&rec.origin_features);
                }
                row[f..].copy_from_slice(table.row(rec.slot));
            }
            Ok(rows)
        })
        .collect()
}

fn accuracy(features: &[Tensor2], labels: &[usize], params: &ProbeParams, items: &[usize]) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let correct = items
        .iter()
        .filter(|&&i| {
            let (s, _) = mlp_probe_forward(&features[i], params);
            let mut best = 0;
            for j in 1..s.len() {
                if s[j] > s[best] {
                    best = j;
                }
            }
            best == labels[i]
        })
        .count();
    correct as f64 / items.len() as f64
}

/// Early-stopped probe training on one split; returns the test accuracy of
/// the best-validation checkpoint.
pub fn train_probe(
    features: &[Tensor2],
    labels: &[usize],
    num_classes: usize,
    split: &SplitSpec,
    seed: u64,
    pcfg: &ProbeConfig,
) -> Result<f64, HarnessError> {
    let in_dim = features.first().map_or(0, Tensor2::cols);
    let mut params = ProbeParams::init(in_dim, pcfg.hidden_dim, num_classes, seed);
    let mut adam = AdamState::new(&params, pcfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5eed));
    let mut best = params.clone();
    let mut best_val = accuracy(features, labels, &params, &split.val);
    let mut best_epoch = 0;
    let mut order = split.train.clone();
    let bs = pcfg.batch_size.unwrap_or(order.len()).max(1);
    for epoch in 1..=pcfg.max_epochs {
        if pcfg.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(bs) {
            let mut grads = params.zeros_like();
            for &i in batch {
                let (s, tape) = mlp_probe_forward(&features[i], &params);
                let (loss, g) = cross_entropy(&Tensor2::from_vec(1, s.len(), s), &[labels[i]], None)?;
                if !loss.is_finite() {
                    return Err(HarnessError::Numerical(format!("probe loss diverged at epoch {epoch}")));
                }
                grads.add_assign(&mlp_probe_backward(&tape, &params, g.data()));
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut params, &grads);
        }
        let val = accuracy(features, labels, &params, &split.val);
        if val > best_val {
            best_val = val;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= pcfg.patience {
            break;
        }
    }
    Ok(accuracy(features, labels, &best, &split.test))
}

/// Two probe runs per cached split, reusing the split's indices and seed.
/// Splits without an embedding table are skipped with a warning.
pub fn run_mlp_probe(
    ds: &GraphDataset,
    cfg: &ExperimentConfig,
    cached_splits: &[SplitSpec],
    embeddings: &[Option<Tensor2>],
    pcfg: &ProbeConfig,
) -> Result<ProbeResult, HarnessError> {
    if ds.feature_dim == 0 {
        return Err(HarnessError::Featureless);
    }
    if !cfg.uses_lvn() {
        return Err(HarnessError::Config("the probe needs an LVN configuration (n_s > 0)".into()));
    }
    let raw: Vec<Tensor2> = ds
        .graphs
        .iter()
        .map(|g| g.features().cloned().ok_or(HarnessError::Featureless))
        .collect::<Result<_, _>>()?;
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..cached_splits.len() {
        match embeddings.get(i) {
            Some(Some(_)) => used.push(i),
            _ => {
                log::warn!("split {i}: no embedding checkpoint, skipped");
                skipped.push(i);
            }
        }
    }
    let pairs = used
        .par_iter()
        .map(|&i| -> Result<(f64, f64), HarnessError> {
            let split = &cached_splits[i];
            let seed = cfg.base_seed ^ i as u64;
            let table = embeddings[i].as_ref().expect("filtered above");
            let emb = embedded_rows(ds, cfg, table)?;
            let a = train_probe(&raw, &ds.labels, ds.num_classes, split, seed, pcfg)?;
            let b = train_probe(&emb, &ds.labels, ds.num_classes, split, seed, pcfg)?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let raw_acc: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let emb_acc: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (raw_mean, raw_ci95) = mean_ci95(&raw_acc);
    let (emb_mean, emb_ci95) = mean_ci95(&emb_acc);
    Ok(ProbeResult {
        splits: used.iter().map(|&i| cached_splits[i].clone()).collect(),
        used_splits: used,
        skipped_splits: skipped,
        raw_accuracies: raw_acc,
        emb_accuracies: emb_acc,
        raw_mean,
        raw_ci95,
        emb_mean,
        emb_ci95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::make_splits;
    use crate::graph::fixtures::*;

    fn ds() -> GraphDataset {
        let graphs: Vec<_> = (3..13)
            .map(|n| star(n).with_features(Tensor2::filled(n, 2, 1.0)).unwrap())
            .collect();
        let labels = (0..10).map(|i| i % 2).collect();
        GraphDataset::new("stars", graphs, labels).unwrap()
    }

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_s: 1,
            n_c: 2,
            embed_mode: EmbedMode::Add,
            ..Default::default()
        }
    }

    #[test]
    fn virtual_rows_carry_origin_and_embedding() {
        let d = ds();
        let table = Tensor2::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let rows = embedded_rows(&d, &cfg(), &table).unwrap();
        let r = &rows[0];
        assert_eq!(r.shape(), (4, 5));
        assert_eq!(r.row(0), &[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.row(2), &[1.0, 1.0, 1.0, 2.0, 3.0]);
        assert_eq!(r.row(3), &[1.0, 1.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn missing_checkpoint_is_skipped_and_indices_reused() {
        let d = ds();
        let splits: Vec<_> = (0..2).map(|s| make_splits(10, (0.6, 0.2, 0.2), s).unwrap()).collect();
        let pcfg = ProbeConfig {
            max_epochs: 5,
            ..Default::default()
        };
        let tables = vec![None, Some(Tensor2::zeros(2, 4))];
        let r = run_mlp_probe(&d, &cfg(), &splits, &tables, &pcfg).unwrap();
        assert_eq!(r.used_splits, vec![1]);
        assert_eq!(r.skipped_splits, vec![0]);
        assert_eq!(r.splits[0], splits[1]);
    }

    #[test]
    fn featureless_dataset_refused() {
        let d = GraphDataset::new("bare", vec![path(3)], vec![0]).unwrap();
        assert!(matches!(
            run_mlp_probe(&d, &cfg(), &[], &[], &ProbeConfig::default()),
            Err(HarnessError::Featureless)
        ));
    }
}
