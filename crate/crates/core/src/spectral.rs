//! Connectivity metrics: Laplacian spectra, effective resistance, the
//! fixed-subset resistance sweep, and walk-count deltas.

use serde::Serialize;
use thiserror::Error;

use crate::augment::{lvn_augment, AugmentError, AugmentedGraph, EdgeMode};
use crate::centrality::{select_central, CentralityError, CentralityScores};
use crate::eigen::{jacobi_eigen, MAX_SWEEPS};
use crate::graph::{Graph, NodeSubset};
use crate::tensor::Tensor2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("{zeros} near-zero eigenvalues but {components} connected components")]
    NullSpaceMismatch { zeros: usize, components: usize },
    #[error("nodes {0} and {1} lie in different components")]
    DisconnectedPair(usize, usize),
    #[error("resistance needs two distinct nodes, got {0} twice")]
    SameNode(usize),
    #[error("node {0} is not present in the augmented graph")]
    MissingNode(usize),
    #[error("n_s = {0} exceeds the node count {1}")]
    SweepTooLarge(usize, usize),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Centrality(#[from] CentralityError),
}

/// Spectrum of the combinatorial Laplacian `L = D - A`.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: Tensor2,
    pub zero_tol: f64,
    pub components: Vec<usize>,
}

pub fn laplacian(g: &Graph) -> Tensor2 {
    let n = g.num_nodes();
    let mut l = Tensor2::zeros(n, n);
    for u in 0..n {
        l.set(u, u, g.degree(u) as f64);
        for &v in g.neighbors(u) {
            l.set(u, v, -1.0);
        }
    }
    l
}

/// Full eigendecomposition of the Laplacian. Directed graphs are symmetrized
/// first.
pub fn laplacian_eigendecomposition(g: &Graph) -> Result<LaplacianSpectrum, SpectralError> {
    let sym;
    let g = if g.is_directed() {
        sym = g.symmetrize();
        &sym
    } else {
        g
    };
    let eig = jacobi_eigen(&laplacian(g), MAX_SWEEPS).map_err(|e| SpectralError::NoConvergence {
        sweeps: e.sweeps,
        residual: e.off_diagonal_norm,
    })?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0);
    let zero_tol = 1e-9 * lambda_max.max(1.0);
    let components = g.connected_components();
    let num_components = components.iter().max().map_or(0, |m| m + 1);
    let zeros = eig.values.iter().filter(|&&l| l < zero_tol).count();
    if zeros != num_components {
        return Err(SpectralError::NullSpaceMismatch {
            zeros,
            components: num_components,
        });
    }
    Ok(LaplacianSpectrum {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        zero_tol,
        components,
    })
}

impl LaplacianSpectrum {
    pub fn num_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `L⁺[u][v]`.
    pub fn pinv_entry(&self, u: usize, v: usize) -> f64 {
        let vecs = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > self.zero_tol)
            .map(|(i, &l)| vecs.get(u, i) * vecs.get(v, i) / l)
            .sum()
    }

    /// `Σ_{λ > tol} 1/λ`, so that `N` times this is the all-pairs total of a
    /// connected graph.
    pub fn inverse_eigen_sum(&self) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|&&l| l > self.zero_tol)
            .map(|l| 1.0 / l)
            .sum()
    }
}

/// `(1_u - 1_v)ᵀ L⁺ (1_u - 1_v)`.
pub fn effective_resistance(spec: &LaplacianSpectrum, u: usize, v: usize) -> Result<f64, SpectralError> {
    if u == v {
        return Err(SpectralError::SameNode(u));
    }
    if spec.components[u] != spec.components[v] {
        return Err(SpectralError::DisconnectedPair(u, v));
    }
    let vecs = &spec.eigenvectors;
    let mut r = 0.0;
    for (i, &l) in spec.eigenvalues.iter().enumerate() {
        if l > spec.zero_tol {
            let d = vecs.get(u, i) - vecs.get(v, i);
            r += d * d / l;
        }
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct ResistanceReport {
    pub subset: NodeSubset,
    pub total: f64,
    /// Row/column order follows `subset.members()`; cross-component entries are NaN.
    pub pair_values: Option<Tensor2>,
    pub cross_component_pairs: usize,
}

/// Sum of pairwise resistances over unordered same-component pairs of `subset`.
pub fn total_resistance_subset(g: &Graph, subset: &NodeSubset) -> Result<ResistanceReport, SpectralError> {
    let spec = laplacian_eigendecomposition(g)?;
    Ok(total_resistance_with_spectrum(&spec, subset))
}

pub fn total_resistance_with_spectrum(spec: &LaplacianSpectrum, subset: &NodeSubset) -> ResistanceReport {
    let m = subset.members();
    let k = m.len();
    // L⁺ restricted to the subset
    let active: Vec<usize> = (0..spec.num_nodes())
        .filter(|&i| spec.eigenvalues[i] > spec.zero_tol)
        .collect();
    let mut scaled = Tensor2::zeros(k, active.len());
    let mut plain = Tensor2::zeros(k, active.len());
    for (a, &u) in m.iter().enumerate() {
        for (b, &i) in active.iter().enumerate() {
            let x = spec.eigenvectors.get(u, i);
            plain.set(a, b, x);
            scaled.set(a, b, x / spec.eigenvalues[i]);
        }
    }
    let pinv = scaled.matmul_t(&plain);
    let mut pairs = Tensor2::zeros(k, k);
    let mut total = 0.0;
    let mut cross = 0;
    for a in 0..k {
        for b in a + 1..k {
            let r = if spec.components[m[a]] != spec.components[m[b]] {
                cross += 1;
                f64::NAN
            } else {
                let r = pinv.get(a, a) + pinv.get(b, b) - 2.0 * pinv.get(a, b);
                total += r;
                r
            };
            pairs.set(a, b, r);
            pairs.set(b, a, r);
        }
    }
    ResistanceReport {
        subset: subset.clone(),
        total,
        pair_values: Some(pairs),
        cross_component_pairs: cross,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub n_s: usize,
    /// `None` when this point failed; see `error`.
    pub total: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub baseline: f64,
    pub subset_size: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_s,total_resistance,baseline\n");
        for p in &self.points {
            let total = p.total.map_or_else(|| "nan".to_string(), |t| t.to_string());
            out.push_str(&format!("{},{},{}\n", p.n_s, total, self.baseline));
        }
        out
    }
}

/// Augments `g` independently for every `n_s` and reports the total
/// resistance over the fixed subset `S = V \ C_max`, where `C_max` is the
/// selection for the largest `n_s`. Smaller selections are prefixes of the
/// same ranking.
pub fn resistance_sweep(
    g: &Graph,
    scores: &CentralityScores,
    ns_values: &[usize],
    n_c: usize,
    mode: EdgeMode,
) -> Result<SweepReport, SpectralError> {
    let max_ns = ns_values.iter().copied().max().unwrap_or(0);
    if max_ns > g.num_nodes() {
        return Err(SpectralError::SweepTooLarge(max_ns, g.num_nodes()));
    }
    let c_max = select_central(scores, g, max_ns.max(1))?;
    let c_max = c_max.truncate(max_ns);
    let subset = NodeSubset::complement(g.num_nodes(), c_max.ranked(), "C_max");
    let baseline = total_resistance_subset(g, &subset)?.total;

    let points = ns_values
        .iter()
        .map(|&n_s| {
            let result = (|| -> Result<f64, SpectralError> {
                let aug = lvn_augment(g, &c_max.truncate(n_s), n_c, mode)?;
                let image = subset_image(&aug, &subset)?;
                Ok(total_resistance_subset(&aug.graph.symmetrize(), &image)?.total)
            })();
            match result {
                Ok(t) => SweepPoint {
                    n_s,
                    total: Some(t),
                    error: None,
                },
                Err(e) => SweepPoint {
                    n_s,
                    total: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepReport {
        baseline,
        subset_size: subset.len(),
        points,
    })
}

/// Maps original node ids to their augmented ids.
pub fn subset_image(aug: &AugmentedGraph, subset: &NodeSubset) -> Result<NodeSubset, SpectralError> {
    let ids = subset
        .members()
        .iter()
        .map(|&v| aug.old_to_new.get(v).copied().flatten().ok_or(SpectralError::MissingNode(v)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NodeSubset::new(ids))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDeltaCurve {
    pub r_values: Vec<usize>,
    pub deltas: Vec<f64>,
    /// Pair convention used for the sum.
    pub pairs: &'static str,
    /// Set when some walk count exceeded 2^53 and lost integer precision.
    pub precision_warning: bool,
}

impl PathDeltaCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,delta\n");
        for (r, d) in self.r_values.iter().zip(&self.deltas) {
            out.push_str(&format!("{r},{d}\n"));
        }
        out
    }

    /// Pointwise mean over curves with identical `r_values`.
    pub fn mean(curves: &[PathDeltaCurve]) -> Option<PathDeltaCurve> {
        let first = curves.first()?;
        let n = curves.len() as f64;
        let mut deltas = vec![0.0; first.deltas.len()];
        for c in curves {
            for (acc, d) in deltas.iter_mut().zip(&c.deltas) {
                *acc += d;
            }
        }
        deltas.iter_mut().for_each(|d| *d /= n);
        Some(PathDeltaCurve {
            r_values: first.r_values.clone(),
            deltas,
            pairs: first.pairs,
            precision_warning: curves.iter().any(|c| c.precision_warning),
        })
    }
}

const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

/// `Σ_{i,j ∈ S} (A^r)_{ij}` for `r = 1..=r_max`, via repeated products with `1_S`.
fn walk_sums(g: &Graph, subset: &[usize], r_max: usize) -> (Vec<f64>, bool) {
    let n = g.num_nodes();
    let mut x = vec![0.0; n];
    for &s in subset {
        x[s] = 1.0;
    }
    let mut next = vec![0.0; n];
    let mut sums = Vec::with_capacity(r_max);
    let mut overflow = false;
    for _ in 0..r_max {
        for i in 0..n {
            next[i] = g.neighbors(i).iter().map(|&j| x[j]).sum();
        }
        std::mem::swap(&mut x, &mut next);
        let s: f64 = subset.iter().map(|&i| x[i]).sum();
        overflow |= x.iter().any(|&v| v > EXACT_LIMIT) || s > EXACT_LIMIT;
        sums.push(s);
    }
    (sums, overflow)
}

/// Change in the number of length-`r` walks between nodes of `subset`
/// (original ids) after augmentation. Ordered pairs, diagonal included; the
/// augmented adjacency is used as stored, so directed arcs count one way.
pub fn path_count_delta(
    g_raw: &Graph,
    g_aug: &AugmentedGraph,
    subset: &NodeSubset,
    r_max: usize,
) -> Result<PathDeltaCurve, SpectralError> {
    assert!(r_max >= 1, "r_max must be at least 1");
    let image = subset_image(g_aug, subset)?;
    let (raw, w1) = walk_sums(g_raw, subset.members(), r_max);
    let (aug, w2) = walk_sums(&g_aug.graph, image.members(), r_max);
    if w1 || w2 {
        log::warn!("walk counts exceed 2^53; deltas are approximate");
    }
    Ok(PathDeltaCurve {
        r_values: (1..=r_max).collect(),
        deltas: aug.iter().zip(&raw).map(|(a, b)| a - b).collect(),
        pairs: "ordered_with_diagonal",
        precision_warning: w1 || w2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::{degree_centrality, CentralSelection, CentralityMethod};
    use crate::graph::fixtures::*;

    #[test]
    fn path3_spectrum() {
        let s = laplacian_eigendecomposition(&path(3)).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_graph_spectrum() {
        for n in 2..8 {
            let g = complete(n);
            let s = laplacian_eigendecomposition(&g).unwrap();
            assert!(s.eigenvalues[0].abs() < 1e-12);
            assert!(s.eigenvalues[1..].iter().all(|l| (l - n as f64).abs() < 1e-10));
            // L v = n v for any v orthogonal to 1
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            v[1] = -1.0;
            let l = laplacian(&g);
            for i in 0..n {
                let lv: f64 = (0..n).map(|j| l.get(i, j) * v[j]).sum();
                assert!((lv - n as f64 * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_node_spectrum() {
        let s = laplacian_eigendecomposition(&empty(1)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0]);
    }

    #[test]
    fn eigenvalue_bounds_and_null_space() {
        let g = Graph::build(7, &[(0, 1), (1, 2), (3, 4), (4, 5), (5, 3)], false, None).unwrap();
        let s = laplacian_eigendecomposition(&g).unwrap();
        let zeros = s.eigenvalues.iter().filter(|&&l| l < s.zero_tol).count();
        assert_eq!(zeros, 3);
        let max_deg = *g.degrees().iter().max().unwrap() as f64;
        assert!(s.eigenvalues.iter().all(|&l| l >= -s.zero_tol && l <= 2.0 * max_deg + s.zero_tol));
    }

    #[test]
    fn resistance_closed_forms() {
        let s = laplacian_eigendecomposition(&path(2)).unwrap();
        assert!((effective_resistance(&s, 0, 1).unwrap() - 1.0).abs() < 1e-12);
        let s = laplacian_eigendecomposition(&complete(3)).unwrap();
        assert!((effective_resistance(&s, 0, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let s = laplacian_eigendecomposition(&path(3)).unwrap();
        assert!((effective_resistance(&s, 0, 2).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(effective_resistance(&s, 1, 0).unwrap(), effective_resistance(&s, 0, 1).unwrap());
    }

    #[test]
    fn disconnected_pair_is_signalled() {
        let g = Graph::build(4, &[(0, 1), (2, 3)], false, None).unwrap();
        let s = laplacian_eigendecomposition(&g).unwrap();
        assert_eq!(effective_resistance(&s, 0, 2), Err(SpectralError::DisconnectedPair(0, 2)));
        assert_eq!(effective_resistance(&s, 1, 1), Err(SpectralError::SameNode(1)));
    }

    #[test]
    fn subset_totals() {
        let r = total_resistance_subset(&path(3), &NodeSubset::all(3)).unwrap();
        assert!((r.total - 4.0).abs() < 1e-12);
        let s = laplacian_eigendecomposition(&path(3)).unwrap();
        assert!((3.0 * s.inverse_eigen_sum() - 4.0).abs() < 1e-12);

        let r = total_resistance_subset(&barbell(4, 1), &NodeSubset::new(vec![2])).unwrap();
        assert_eq!(r.total, 0.0);

        let g = Graph::build(4, &[(0, 1), (2, 3)], false, None).unwrap();
        let r = total_resistance_subset(&g, &NodeSubset::all(4)).unwrap();
        assert!((r.total - 2.0).abs() < 1e-12);
        assert_eq!(r.cross_component_pairs, 4);
    }

    #[test]
    fn barbell_sweep_is_non_increasing() {
        let g = barbell(6, 3);
        let rep = resistance_sweep(&g, &degree_centrality(&g), &[1, 2, 3], 2, EdgeMode::Undirected).unwrap();
        let totals: Vec<f64> = rep.points.iter().map(|p| p.total.unwrap()).collect();
        assert!(totals[0] <= rep.baseline + 1e-9);
        assert!(totals.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{totals:?}");
    }

    #[test]
    fn isolated_top_central_leaves_total_unchanged() {
        let g = Graph::build(4, &[(1, 2), (2, 3)], false, None).unwrap();
        let scores = CentralityScores {
            method: CentralityMethod::Degree,
            scores: vec![10.0, 1.0, 2.0, 1.0],
            communities: None,
            converged: true,
        };
        let rep = resistance_sweep(&g, &scores, &[1], 3, EdgeMode::Undirected).unwrap();
        assert!((rep.points[0].total.unwrap() - rep.baseline).abs() < 1e-10);
    }

    #[test]
    fn star_sweep_drops_below_baseline() {
        let g = star(16);
        for n_c in 2..5 {
            let rep = resistance_sweep(&g, &degree_centrality(&g), &[1], n_c, EdgeMode::Undirected).unwrap();
            assert!(rep.points[0].total.unwrap() < rep.baseline - 1e-6);
        }
    }

    #[test]
    fn sweep_csv_layout() {
        let g = star(5);
        let rep = resistance_sweep(&g, &degree_centrality(&g), &[1], 2, EdgeMode::Directed).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("n_s,total_resistance,baseline\n1,"));
    }

    #[test]
    fn star_path_deltas() {
        let g = star(4);
        let aug = lvn_augment(&g, &CentralSelection::from_ranked(vec![0]), 2, EdgeMode::Undirected).unwrap();
        let leaves = NodeSubset::new(vec![1, 2, 3]);
        let curve = path_count_delta(&g, &aug, &leaves, 2).unwrap();
        assert_eq!(curve.deltas, vec![0.0, 9.0]);
        assert_eq!(curve.to_csv(), "r,delta\n1,0\n2,9\n");
    }

    #[test]
    fn identity_augmentation_has_zero_delta() {
        let g = barbell(4, 2);
        let aug = AugmentedGraph::passthrough(&g);
        let curve = path_count_delta(&g, &aug, &NodeSubset::all(g.num_nodes()), 6).unwrap();
        assert!(curve.deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn single_clone_has_zero_delta() {
        let g = barbell(4, 2);
        let sel = CentralSelection::from_ranked(vec![3, 4]);
        let aug = lvn_augment(&g, &sel, 1, EdgeMode::Undirected).unwrap();
        let s = NodeSubset::complement(g.num_nodes(), &[3, 4], "C");
        let curve = path_count_delta(&g, &aug, &s, 8).unwrap();
        assert!(curve.deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn removed_node_in_subset_is_rejected() {
        let g = star(4);
        let aug = lvn_augment(&g, &CentralSelection::from_ranked(vec![0]), 2, EdgeMode::Undirected).unwrap();
        assert_eq!(
            path_count_delta(&g, &aug, &NodeSubset::all(4), 2),
            Err(SpectralError::MissingNode(0))
        );
    }
}
