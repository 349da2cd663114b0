use std::path::Path;

use lvn_core::centrality::CentralityMethod;
use lvn_core::datasets::{load_node_dataset, load_tudataset};
use lvn_core::graph::fixtures;
use lvn_core::harness::{ConnectivityConfig, ExperimentConfig, GridSpec, ProbeConfig};
use lvn_core::{EdgeMode, Graph};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureName {
    Path,
    Star,
    Complete,
    Cycle,
    Empty,
    BridgedCliques,
    Barbell,
}

/// Where `augment` and the analyses read graphs from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Fixture {
        name: FixtureName,
        n: usize,
        #[serde(default)]
        bridge: usize,
    },
    Tudataset {
        path: String,
        #[serde(default)]
        max_graphs: Option<usize>,
        /// Keep only graphs with more than this many nodes.
        #[serde(default)]
        min_nodes: Option<usize>,
    },
    NodeJson {
        path: String,
    },
}

impl InputSpec {
    pub fn load(&self) -> Result<Vec<Graph>, CliError> {
        match self {
            InputSpec::Fixture { name, n, bridge } => {
                let n = *n;
                Ok(vec![match name {
                    FixtureName::Path => fixtures::path(n),
                    FixtureName::Star => fixtures::star(n),
                    FixtureName::Complete => fixtures::complete(n),
                    FixtureName::Cycle => fixtures::cycle(n),
                    FixtureName::Empty => fixtures::empty(n),
                    FixtureName::BridgedCliques => fixtures::bridged_cliques(n),
                    FixtureName::Barbell => fixtures::barbell(n, *bridge),
                }])
            }
            InputSpec::Tudataset {
                path,
                max_graphs,
                min_nodes,
            } => {
                let ds = load_tudataset(path).map_err(|e| CliError::Data(e.to_string()))?;
                let min = min_nodes.unwrap_or(0);
                let it = ds.graphs.into_iter().filter(|g| g.num_nodes() > min);
                Ok(match max_graphs {
                    Some(m) => it.take(*m).collect(),
                    None => it.collect(),
                })
            }
            InputSpec::NodeJson { path } => {
                Ok(vec![load_node_dataset(path).map_err(|e| CliError::Data(e.to_string()))?])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMethod {
    Lvn,
    Gvn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSpec {
    pub method: AugmentMethod,
    pub n_s: usize,
    pub n_c: usize,
    pub centrality: CentralityMethod,
    pub edge_mode: EdgeMode,
    /// Number of global virtual nodes for `method = "gvn"`.
    pub gvn_k: usize,
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            method: AugmentMethod::Lvn,
            n_s: 1,
            n_c: 2,
            centrality: CentralityMethod::Degree,
            edge_mode: EdgeMode::Undirected,
            gvn_k: 1,
            seed: 0,
        }
    }
}

/// The single JSON config shared by all subcommands; each reads its section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub input: Option<InputSpec>,
    pub augment: AugmentSpec,
    pub connectivity: ConnectivityConfig,
    pub experiment: ExperimentConfig,
    pub grid: Option<GridSpec>,
    pub probe: ProbeConfig,
    /// Directory of a previous `train` run (splits and embeddings); defaults
    /// to the output directory.
    pub probe_source: Option<String>,
    /// Directory holding CSVs for `report`; defaults to the output directory.
    pub report_source: Option<String>,
}

/// Sets `a.b.c = value` inside a JSON object, creating objects on the way.
/// The value is parsed as JSON and falls back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("empty key segment in '{key}'")));
        }
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(CliError::Config(format!("'{key}' descends into a non-object")));
            }
        }
        let obj = node.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Reads the config file (or a previous run's `manifest.json`), applies the
/// overrides, then validates against the schema.
pub fn load_config(path: Option<&Path>, overrides: &[String], subcommand: &str) -> Result<CliConfig, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            unwrap_manifest(v, subcommand)?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let cfg: CliConfig = serde_json::from_value(root).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.experiment.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn unwrap_manifest(v: Value, subcommand: &str) -> Result<Value, CliError> {
    if v.get("tool").and_then(Value::as_str) != Some(crate::TOOL) {
        return Ok(v);
    }
    let recorded = v.get("subcommand").and_then(Value::as_str).unwrap_or_default();
    if recorded != subcommand {
        return Err(CliError::Config(format!(
            "manifest records subcommand '{recorded}', not '{subcommand}'"
        )));
    }
    v.get("config")
        .cloned()
        .ok_or_else(|| CliError::Config("manifest has no config".into()))
}
