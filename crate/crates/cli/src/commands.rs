use std::path::{Path, PathBuf};

use lvn_core::augment::{gvn_augment, lvn_augment};
use lvn_core::centrality::{score, select_central};
use lvn_core::datasets::{load_splits, save_splits};
use lvn_core::harness::{
    load_task_data, path_suite, resistance_suite, run_grid, run_mlp_probe, run_training_on, RunResult, TaskData,
};
use lvn_core::spectral::total_resistance_subset;
use lvn_core::{Graph, NodeSubset, Tensor2};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{AugmentMethod, CliConfig, InputSpec};
use crate::CliError;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write(name, text + "\n")
    }
}

fn input_graphs(cfg: &CliConfig) -> Result<Vec<Graph>, CliError> {
    match &cfg.input {
        Some(spec) => spec.load(),
        None if !cfg.experiment.dataset.is_empty() => InputSpec::Tudataset {
            path: cfg.experiment.dataset.clone(),
            max_graphs: cfg.experiment.max_graphs,
            min_nodes: None,
        }
        .load(),
        None => Err(CliError::Config("no input graphs: set `input` or `experiment.dataset`".into())),
    }
}

pub fn augment(cfg: &CliConfig, out: &Output) -> Result<Value, CliError> {
    let spec = &cfg.augment;
    let graphs = input_graphs(cfg)?;
    let mut records = Vec::with_capacity(graphs.len());
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let g = if g.is_directed() { g.symmetrize() } else { g.clone() };
        match spec.method {
            AugmentMethod::Lvn => {
                let scores = score(&g, spec.centrality, spec.seed);
                let sel = select_central(&scores, &g, spec.n_s.min(g.num_nodes()))
                    .map_err(|e| CliError::Data(format!("graph {i}: {e}")))?;
                let aug = lvn_augment(&g, &sel, spec.n_c, spec.edge_mode)
                    .map_err(|e| CliError::Data(format!("graph {i}: {e}")))?;
                let v = aug.to_json();
                nodes.push(v["num_nodes"].clone());
                edges.push(v["num_edges"].clone());
                records.push(v);
            }
            AugmentMethod::Gvn => {
                let a = gvn_augment(&g, spec.gvn_k).map_err(|e| CliError::Data(format!("graph {i}: {e}")))?;
                nodes.push(json!(a.num_nodes()));
                edges.push(json!(a.num_edges()));
                records.push(json!({
                    "num_nodes": a.num_nodes(),
                    "num_original": g.num_nodes(),
                    "num_edges": a.num_edges(),
                    "edges": a.edges(),
                }));
            }
        }
    }
    out.write_json("augmented.json", &records)?;
    Ok(json!({"subcommand": "augment", "graphs": graphs.len(), "num_nodes": nodes, "num_edges": edges}))
}

pub fn analyze_resistance(cfg: &CliConfig, out: &Output) -> Result<Value, CliError> {
    let graphs: Vec<Graph> = input_graphs(cfg)?.iter().map(Graph::symmetrize).collect();
    let mut baseline = String::from("graph,num_nodes,total_resistance,cross_component_pairs\n");
    let mut totals = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let r = total_resistance_subset(g, &NodeSubset::all(g.num_nodes()))
            .map_err(|e| CliError::Numerical(format!("graph {i}: {e}")))?;
        baseline.push_str(&format!("{i},{},{},{}\n", g.num_nodes(), r.total, r.cross_component_pairs));
        totals.push(r.total);
    }
    out.write("baseline.csv", baseline)?;
    let suite = resistance_suite(&graphs, &cfg.connectivity)?;
    let mut summary = json!({
        "subcommand": "analyze-resistance",
        "graphs": graphs.len(),
        "total_resistance": totals,
        "sweep_graphs": suite.used_graphs.len(),
    });
    if !suite.used_graphs.is_empty() {
        out.write("resistance.csv", suite.to_csv())?;
        let mut per_graph = String::from("graph,n_s,total_resistance,baseline\n");
        for (g, s) in suite.used_graphs.iter().zip(&suite.sweeps) {
            for p in &s.points {
                let t = p.total.map_or_else(|| "nan".into(), |t| t.to_string());
                per_graph.push_str(&format!("{g},{},{t},{}\n", p.n_s, s.baseline));
            }
        }
        out.write("resistance_per_graph.csv", per_graph)?;
        summary["monotone"] = json!(suite.is_monotone(1e-9));
        summary["mean_curve"] = serde_json::to_value(&suite.mean_curve).unwrap_or(Value::Null);
    }
    Ok(summary)
}

pub fn analyze_paths(cfg: &CliConfig, out: &Output) -> Result<Value, CliError> {
    let graphs: Vec<Graph> = input_graphs(cfg)?.iter().map(Graph::symmetrize).collect();
    let curve = path_suite(&graphs, &cfg.connectivity)?
        .ok_or_else(|| CliError::Data(format!("no graph has more than {} nodes", cfg.connectivity.path_n_s)))?;
    out.write("paths.csv", curve.to_csv())?;
    if curve.precision_warning {
        log::warn!("walk counts exceeded 2^53; deltas are approximate");
    }
    Ok(json!({
        "subcommand": "analyze-paths",
        "graphs": graphs.len(),
        "r": curve.r_values,
        "delta": curve.deltas,
        "precision_warning": curve.precision_warning,
    }))
}

fn write_run(out: &Output, r: &RunResult) -> Result<(), CliError> {
    out.write_json("results.json", r)?;
    out.write("accuracies.csv", r.accuracies_csv())?;
    out.write("drift.csv", r.drift_csv())?;
    out.write("similarity.csv", r.similarity_csv())?;
    let path = out.dir().join("splits.json");
    save_splits(&path, &r.splits).map_err(|e| CliError::Data(e.to_string()))?;
    for (i, t) in r.split_embeddings.iter().enumerate() {
        out.write_json(&format!("embeddings/split_{i}.json"), t)?;
    }
    Ok(())
}

pub fn train(cfg: &CliConfig, out: &Output) -> Result<Value, CliError> {
    let data = load_task_data(&cfg.experiment)?;
    let (result, grid_best) = match &cfg.grid {
        Some(grid) => {
            let (runs, best) = run_grid(&cfg.experiment, grid, &data)?;
            let mut csv = String::from("index,n_s,n_c,centrality,edge_mode,embed_mode,mean_val,mean_test,ci95\n");
            for (i, r) in runs.iter().enumerate() {
                let c = &r.config;
                csv.push_str(&format!(
                    "{i},{},{},{},{},{},{},{},{}\n",
                    c.n_s,
                    c.n_c,
                    json!(c.centrality).as_str().unwrap_or_default(),
                    json!(c.edge_mode).as_str().unwrap_or_default(),
                    json!(c.embed_mode).as_str().unwrap_or_default(),
                    r.mean_val,
                    r.mean,
                    r.ci95_halfwidth
                ));
            }
            out.write("grid.csv", csv)?;
            (runs.into_iter().nth(best).expect("grid is non-empty"), Some(best))
        }
        None => (run_training_on(&cfg.experiment, &data)?, None),
    };
    write_run(out, &result)?;
    Ok(json!({
        "subcommand": "train",
        "mean": result.mean,
        "ci95": result.ci95_halfwidth,
        "mean_val": result.mean_val,
        "splits": result.test_accuracies.len(),
        "grid_best": grid_best,
        "n_s": result.config.n_s,
        "n_c": result.config.n_c,
    }))
}

pub fn probe(cfg: &CliConfig, out: &Output) -> Result<Value, CliError> {
    let source = cfg.probe_source.as_ref().map_or_else(|| out.dir().to_path_buf(), PathBuf::from);
    let splits = load_splits(source.join("splits.json")).map_err(|e| CliError::Data(e.to_string()))?;
    let mut tables = Vec::with_capacity(splits.len());
    for i in 0..splits.len() {
        let path = source.join(format!("embeddings/split_{i}.json"));
        let table = match std::fs::read_to_string(&path) {
            Ok(text) => Some(
                serde_json::from_str::<Tensor2>(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
            ),
            Err(_) => None,
        };
        tables.push(table);
    }
    let ds = match load_task_data(&cfg.experiment)? {
        TaskData::Graphs(ds) => ds,
        TaskData::Node(_) => return Err(CliError::Config("the probe runs on graph-classification data".into())),
    };
    let r = run_mlp_probe(&ds, &cfg.experiment, &splits, &tables, &cfg.probe)?;
    out.write_json("probe.json", &r)?;
    out.write("probe.csv", r.to_csv())?;
    Ok(json!({
        "subcommand": "probe",
        "raw_mean": r.raw_mean,
        "emb_mean": r.emb_mean,
        "used_splits": r.used_splits.len(),
        "skipped_splits": r.skipped_splits,
    }))
}
