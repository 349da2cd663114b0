//! `lvn`: augment graphs, run the connectivity analyses, train and probe
//! models, and render report plots.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lvn_core::harness::HarnessError;

pub const TOOL: &str = "lvn";

#[derive(Parser, Debug)]
#[command(name = "lvn", version, about = "Local virtual node augmentation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file (a previous run's manifest.json also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override, e.g. `--set experiment.n_s=3` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Write LVN- or GVN-augmented graphs as JSON.
    Augment,
    /// Total effective resistance, raw and across the n_s sweep.
    AnalyzeResistance,
    /// Change in walk counts after augmentation.
    AnalyzePaths,
    /// Train and evaluate a GCN over seeded splits.
    Train,
    /// MLP probe with raw features against pre-trained embeddings.
    Probe,
    /// Render CSV outputs as SVG plots.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Augment => "augment",
            Command::AnalyzeResistance => "analyze-resistance",
            Command::AnalyzePaths => "analyze-paths",
            Command::Train => "train",
            Command::Probe => "probe",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        use lvn_core::gnn::ModelError;
        let msg = e.to_string();
        match e {
            HarnessError::Config(_) | HarnessError::Model(ModelError::FeaturelessAdd) => CliError::Config(msg),
            HarnessError::Dataset(_)
            | HarnessError::Featureless
            | HarnessError::Augment { .. }
            | HarnessError::Centrality(_) => CliError::Data(msg),
            HarnessError::Model(_) | HarnessError::Spectral(_) | HarnessError::Numerical(_) => {
                CliError::Numerical(msg)
            }
        }
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let mut overrides = Vec::new();
    if let Some(s) = cli.seed {
        for key in ["experiment.base_seed", "connectivity.seed", "augment.seed"] {
            overrides.push(format!("{key}={s}"));
        }
    }
    overrides.extend(cli.overrides.iter().cloned());
    let sub = cli.command.name();
    let cfg = config::load_config(cli.config.as_deref(), &overrides, sub)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = commands::Output::create(&cli.output_dir)?;
    out.write_json(
        &manifest_name(&cli.output_dir, sub),
        &serde_json::json!({
            "tool": TOOL,
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": sub,
            "seed": cli.seed,
            "config": cfg,
        }),
    )?;
    log::info!("{sub}: writing to {}", cli.output_dir.display());
    match cli.command {
        Command::Augment => commands::augment(&cfg, &out),
        Command::AnalyzeResistance => commands::analyze_resistance(&cfg, &out),
        Command::AnalyzePaths => commands::analyze_paths(&cfg, &out),
        Command::Train => commands::train(&cfg, &out),
        Command::Probe => commands::probe(&cfg, &out),
        Command::Report => report::report(&cfg, &out),
    }
}

/// `manifest.json`, unless that file belongs to a different subcommand run
/// in the same directory; then `manifest-<subcommand>.json`.
fn manifest_name(dir: &std::path::Path, sub: &str) -> String {
    let existing = std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok());
    match existing {
        Some(v) if v.get("subcommand").and_then(|s| s.as_str()) != Some(sub) => format!("manifest-{sub}.json"),
        _ => "manifest.json".to_string(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let reason = e.to_string();
            let first = reason.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({"error": "config", "reason": first}));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({"error": e.kind(), "reason": e.to_string()}));
            ExitCode::from(e.exit_code())
        }
    }
}
