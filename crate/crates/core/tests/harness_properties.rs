use std::path::PathBuf;

use lvn_core::gnn::EmbedMode;
use lvn_core::harness::{load_task_data, run_mlp_probe, run_training_on, ExperimentConfig, ProbeConfig, TaskData};
use lvn_core::EdgeMode;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        dataset: PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../data/MUTAG")
            .to_string_lossy()
            .into_owned(),
        max_graphs: Some(50),
        n_s: 2,
        n_c: 2,
        edge_mode: EdgeMode::Directed,
        embed_mode: EmbedMode::Add,
        hidden_dim: Some(16),
        num_splits: 3,
        max_epochs: 12,
        batch_size: Some(16),
        base_seed: 11,
        ..Default::default()
    }
}

#[test]
fn identical_configs_give_identical_accuracies() {
    let cfg = small_config();
    let data = load_task_data(&cfg).unwrap();
    let a = run_training_on(&cfg, &data).unwrap();
    let b = run_training_on(&cfg, &data).unwrap();
    assert_eq!(a.test_accuracies, b.test_accuracies);
    assert_eq!(a.val_accuracies, b.val_accuracies);
    assert_eq!(a.best_epochs, b.best_epochs);
    for (i, s) in a.splits.iter().enumerate() {
        assert_eq!(s.seed, cfg.base_seed ^ i as u64);
    }
}

#[test]
fn probe_reuses_cached_split_indices() {
    let cfg = small_config();
    let data = load_task_data(&cfg).unwrap();
    let run = run_training_on(&cfg, &data).unwrap();
    let TaskData::Graphs(ds) = data else { panic!("graph data expected") };
    let mut tables: Vec<_> = run.split_embeddings.iter().cloned().map(Some).collect();
    tables[1] = None;
    let pcfg = ProbeConfig {
        hidden_dim: 8,
        max_epochs: 5,
        ..Default::default()
    };
    let p = run_mlp_probe(&ds, &cfg, &run.splits, &tables, &pcfg).unwrap();
    assert_eq!(p.splits, vec![run.splits[0].clone(), run.splits[2].clone()]);
    assert_eq!(p.used_splits, vec![0, 2]);
    assert_eq!(p.skipped_splits, vec![1]);
    assert_eq!(p.raw_accuracies.len(), 2);
}
