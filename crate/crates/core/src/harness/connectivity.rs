//! Dataset-level resistance sweeps and walk-count deltas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::augment::{lvn_augment, EdgeMode};
use crate::centrality::{score, select_central, CentralityMethod};
use crate::graph::{Graph, NodeSubset};
use crate::spectral::{path_count_delta, resistance_sweep, PathDeltaCurve, SweepReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectivityConfig {
    pub ns_values: Vec<usize>,
    pub n_c: usize,
    pub edge_mode: EdgeMode,
    pub centrality: CentralityMethod,
    pub seed: u64,
    /// Longest walk length for the path-count delta.
    pub r_max: usize,
    /// Central nodes used for the path-count delta.
    pub path_n_s: usize,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self {
            ns_values: vec![1, 2, 3, 5, 7, 10, 12, 15],
            n_c: 2,
            edge_mode: EdgeMode::Undirected,
            centrality: CentralityMethod::Degree,
            seed: 0,
            r_max: 8,
            path_n_s: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanPoint {
    pub n_s: usize,
    pub mean_total: f64,
    /// Graphs contributing to this point.
    pub graphs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResistanceSuite {
    pub used_graphs: Vec<usize>,
    /// Graphs too small for the largest `n_s` (the fixed subset would be empty).
    pub skipped_graphs: Vec<usize>,
    pub sweeps: Vec<SweepReport>,
    pub mean_baseline: f64,
    pub mean_curve: Vec<MeanPoint>,
}

impl ResistanceSuite {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_s,mean_total_resistance,mean_baseline,graphs\n");
        for p in &self.mean_curve {
            out.push_str(&format!("{},{},{},{}\n", p.n_s, p.mean_total, self.mean_baseline, p.graphs));
        }
        out
    }

    /// True when the mean curve never increases and never exceeds the baseline
    /// (with a relative slack `tol`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        let slack = |x: f64| tol * x.abs().max(1.0);
        self.mean_curve.windows(2).all(|w| w[1].mean_total <= w[0].mean_total + slack(w[0].mean_total))
            && self
                .mean_curve
                .iter()
                .all(|p| p.mean_total <= self.mean_baseline + slack(self.mean_baseline))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectivityReport {
    pub resistance: ResistanceSuite,
    pub path_curve: Option<PathDeltaCurve>,
}

impl ConnectivityReport {
    pub fn paths_csv(&self) -> String {
        self.path_curve
            .as_ref()
            .map_or_else(|| String::from("r,delta\n"), PathDeltaCurve::to_csv)
    }
}

fn path_curve(g: &Graph, cfg: &ConnectivityConfig) -> Result<PathDeltaCurve, HarnessError> {
    let scores = score(g, cfg.centrality, cfg.seed);
    let sel = select_central(&scores, g, cfg.path_n_s)?;
    let aug = lvn_augment(g, &sel, cfg.n_c, cfg.edge_mode).map_err(|source| HarnessError::Augment { graph: 0, source })?;
    let subset = NodeSubset::complement(g.num_nodes(), sel.ranked(), "C");
    Ok(path_count_delta(g, &aug, &subset, cfg.r_max)?)
}

/// Runs the resistance sweep on every graph large enough for the largest
/// `n_s`, then averages pointwise.
pub fn resistance_suite(graphs: &[Graph], cfg: &ConnectivityConfig) -> Result<ResistanceSuite, HarnessError> {
    let max_ns = cfg.ns_values.iter().copied().max().unwrap_or(0);
    let (used, skipped): (Vec<usize>, Vec<usize>) = (0..graphs.len()).partition(|&i| graphs[i].num_nodes() > max_ns);
    for &i in &skipped {
        log::warn!("graph {i}: {} nodes, too small for n_s = {max_ns}", graphs[i].num_nodes());
    }
    let sweeps = used
        .par_iter()
        .map(|&i| {
            let g = &graphs[i];
            let scores = score(g, cfg.centrality, cfg.seed);
            Ok(resistance_sweep(g, &scores, &cfg.ns_values, cfg.n_c, cfg.edge_mode)?)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mean_baseline = sweeps.iter().map(|s| s.baseline).sum::<f64>() / sweeps.len().max(1) as f64;
    let mean_curve = cfg
        .ns_values
        .iter()
        .enumerate()
        .map(|(k, &n_s)| {
            let vals: Vec<f64> = sweeps.iter().filter_map(|s| s.points[k].total).collect();
            MeanPoint {
                n_s,
                mean_total: vals.iter().sum::<f64>() / vals.len().max(1) as f64,
                graphs: vals.len(),
            }
        })
        .collect();
    Ok(ResistanceSuite {
        used_graphs: used,
        skipped_graphs: skipped,
        sweeps,
        mean_baseline,
        mean_curve,
    })
}

/// Mean walk-count delta over graphs with more than `path_n_s` nodes.
pub fn path_suite(graphs: &[Graph], cfg: &ConnectivityConfig) -> Result<Option<PathDeltaCurve>, HarnessError> {
    if cfg.path_n_s == 0 || cfg.r_max == 0 {
        return Err(HarnessError::Config("path_n_s and r_max must be positive".into()));
    }
    let curves = graphs
        .par_iter()
        .filter(|g| g.num_nodes() > cfg.path_n_s)
        .map(|g| path_curve(g, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PathDeltaCurve::mean(&curves))
}

pub fn run_connectivity_suite(graphs: &[Graph], cfg: &ConnectivityConfig) -> Result<ConnectivityReport, HarnessError> {
    Ok(ConnectivityReport {
        resistance: resistance_suite(graphs, cfg)?,
        path_curve: path_suite(graphs, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    #[test]
    fn barbell_sweep_is_monotone() {
        let cfg = ConnectivityConfig {
            ns_values: vec![1, 2, 3],
            ..Default::default()
        };
        let r = run_connectivity_suite(&[barbell(4, 2)], &cfg).unwrap();
        assert!(r.resistance.is_monotone(1e-9), "{:?}", r.resistance.mean_curve);
        assert!(r.path_curve.unwrap().deltas.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn identity_augmentation_has_zero_path_delta() {
        let cfg = ConnectivityConfig {
            ns_values: vec![1],
            n_c: 1,
            ..Default::default()
        };
        let r = run_connectivity_suite(&[star(6), path(5)], &cfg).unwrap();
        assert!(r.path_curve.unwrap().deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn small_graphs_skipped() {
        let cfg = ConnectivityConfig {
            ns_values: vec![1, 3],
            ..Default::default()
        };
        let r = run_connectivity_suite(&[path(3), path(6)], &cfg).unwrap();
        assert_eq!(r.resistance.skipped_graphs, vec![0]);
        assert_eq!(r.resistance.used_graphs, vec![1]);
    }
}
