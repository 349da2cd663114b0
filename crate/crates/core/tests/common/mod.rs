//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use lvn_core::augment::AugmentedGraph;
use lvn_core::gnn::{backward, forward, ForwardOptions, InitPlan, ModelParams, ParamSet, ShiftOperator};
use lvn_core::{Graph, Tensor2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style graph with edge probability `p`.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::build(n, &edges, false, None).unwrap()
}

/// Random spanning tree plus extra edges, so always connected.
pub fn random_connected_graph(r: &mut ChaCha8Rng, n: usize, extra_p: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((r.gen_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if r.gen::<f64>() < extra_p {
                edges.push((u, v));
            }
        }
    }
    Graph::build(n, &edges, false, None).unwrap()
}

pub fn random_features(r: &mut ChaCha8Rng, n: usize, f: usize) -> Tensor2 {
    Tensor2::from_vec(n, f, (0..n * f).map(|_| r.gen_range(-1.0..1.0)).collect())
}

/// Dense Gaussian elimination with partial pivoting; `a` is row-major n×n.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Effective resistance by grounding `v`: solve the reduced Laplacian system
/// for a unit current injected at `u`; the potential at `u` is `R(u, v)`.
pub fn grounded_resistance(g: &Graph, u: usize, v: usize) -> f64 {
    if u == v {
        return 0.0;
    }
    let n = g.num_nodes();
    let keep: Vec<usize> = (0..n).filter(|&x| x != v).collect();
    let pos = |x: usize| keep.iter().position(|&k| k == x).unwrap();
    let mut a = vec![vec![0.0; n - 1]; n - 1];
    for (i, &x) in keep.iter().enumerate() {
        a[i][i] = g.degree(x) as f64;
        for &y in g.neighbors(x) {
            if y != v {
                a[i][pos(y)] -= 1.0;
            }
        }
    }
    let mut b = vec![0.0; n - 1];
    b[pos(u)] = 1.0;
    solve(a, b)[pos(u)]
}

pub fn edge_set(g: &Graph) -> BTreeSet<(usize, usize)> {
    g.edges().into_iter().collect()
}

/// Undirected LVN edge set built directly from the set definition:
/// surviving original edges, every LVN of a group joined to each non-central
/// neighbour of its central node, and full bipartite links between the groups
/// of adjacent central nodes. Survivors keep ascending order; LVN `(k, i)`
/// gets id `survivors + k·n_c + i`.
pub fn lvn_edges_oracle(g: &Graph, centrals: &[usize], n_c: usize) -> (usize, BTreeSet<(usize, usize)>) {
    let n = g.num_nodes();
    let central: BTreeSet<usize> = centrals.iter().copied().collect();
    let survivors: Vec<usize> = (0..n).filter(|v| !central.contains(v)).collect();
    let new_id = |v: usize| survivors.binary_search(&v).unwrap();
    let base = survivors.len();
    let lvn = |k: usize, i: usize| base + k * n_c + i;
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut out = BTreeSet::new();
    for (u, v) in g.edges() {
        if !central.contains(&u) && !central.contains(&v) {
            out.insert(norm(new_id(u), new_id(v)));
        }
    }
    for (k, &c) in centrals.iter().enumerate() {
        for &w in g.neighbors(c) {
            match centrals.iter().position(|&x| x == w) {
                None => {
                    for i in 0..n_c {
                        out.insert(norm(lvn(k, i), new_id(w)));
                    }
                }
                Some(k2) => {
                    for i in 0..n_c {
                        for j in 0..n_c {
                            out.insert(norm(lvn(k, i), lvn(k2, j)));
                        }
                    }
                }
            }
        }
    }
    (base + centrals.len() * n_c, out)
}

/// Max relative error between analytic gradients and central differences of
/// `loss(params)`, over every entry of every tensor. Entries where both are
/// below `floor` in magnitude are compared against `floor`.
pub fn max_grad_rel_error<P, F>(params: &P, analytic: &P, h: f64, floor: f64, mut loss: F) -> (f64, String)
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> f64,
{
    let names = params.names();
    let mut worst = (0.0, String::new());
    for t in 0..names.len() {
        let len = params.tensors()[t].data().len();
        for i in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[t].data_mut()[i] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[t].data_mut()[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let a = analytic.tensors()[t].data()[i];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
            if err > worst.0 {
                worst = (err, format!("{}[{i}]: analytic {a:e} vs numeric {fd:e}", names[t]));
            }
        }
    }
    worst
}

/// `Σ logits ⊙ weights` through the full model, with its analytic gradient.
pub fn weighted_logit_loss(
    shift: &ShiftOperator,
    plan: &InitPlan,
    params: &ModelParams,
    weights: &Tensor2,
) -> (f64, ModelParams) {
    let (logits, mut tape) = forward(shift, plan, params, ForwardOptions::inference()).unwrap();
    let loss = logits.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum();
    let grads = backward(&mut tape, weights).unwrap();
    (loss, grads.params)
}

pub fn weighted_logit_value(shift: &ShiftOperator, plan: &InitPlan, params: &ModelParams, weights: &Tensor2) -> f64 {
    let (logits, _) = forward(shift, plan, params, ForwardOptions::inference()).unwrap();
    logits.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}

/// Checks that `map` (original id -> augmented id) carries the edge set of
/// `g` exactly onto the edge set of `aug` and is a bijection.
pub fn is_isomorphism(g: &Graph, aug: &Graph, map: &[usize]) -> bool {
    if g.num_nodes() != aug.num_nodes() || map.len() != g.num_nodes() {
        return false;
    }
    let image: BTreeSet<usize> = map.iter().copied().collect();
    if image.len() != map.len() {
        return false;
    }
    let mapped: BTreeSet<(usize, usize)> = g
        .edges()
        .into_iter()
        .map(|(u, v)| (map[u].min(map[v]), map[u].max(map[v])))
        .collect();
    mapped == edge_set(aug)
}

/// Original id -> augmented id for an `n_c = 1` augmentation: survivors via
/// `old_to_new`, each central node onto its single LVN.
pub fn identity_certificate(aug: &AugmentedGraph) -> Vec<usize> {
    aug.old_to_new
        .iter()
        .enumerate()
        .map(|(v, m)| {
            m.unwrap_or_else(|| {
                let k = aug.centrals.iter().position(|&c| c == v).unwrap();
                aug.registry.iter().find(|r| r.group == k).unwrap().node
            })
        })
        .collect()
}
