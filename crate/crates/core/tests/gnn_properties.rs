mod common;

use common::*;
use lvn_core::augment::{lvn_augment, EdgeMode};
use lvn_core::centrality::{score, select_central, CentralityMethod};
use lvn_core::gnn::{
    backward, forward, readout_graph, readout_graph_backward, readout_node, readout_node_backward, Architecture,
    EmbedMode, ForwardOptions, InitPlan, ModelParams, ParamSet, ShiftOperator,
};
use lvn_core::gnn::loss::cross_entropy;
use lvn_core::{Graph, Tensor2};
use proptest::prelude::*;

fn arch(f: usize, n_c: usize) -> Architecture {
    Architecture {
        in_dim: f,
        hidden_dim: 5,
        num_layers: 2,
        num_classes: 3,
        n_c,
    }
}

fn augmented(seed: u64, n: usize, n_s: usize, n_c: usize, mode: EdgeMode) -> lvn_core::AugmentedGraph {
    let mut r = rng(seed);
    let g = random_connected_graph(&mut r, n, 0.25);
    let g = g.with_features(random_features(&mut r, n, 3)).unwrap();
    let sel = select_central(&score(&g, CentralityMethod::Degree, 0), &g, n_s).unwrap();
    lvn_augment(&g, &sel, n_c, mode).unwrap()
}

fn plan_for(aug: &lvn_core::AugmentedGraph, mode: EmbedMode) -> InitPlan {
    let raw = aug.graph.features().unwrap().clone();
    InitPlan::from_augmented(aug, &raw, mode).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradients_match_finite_differences(seed in 0u64..1000, directed in any::<bool>(), add in any::<bool>()) {
        let mode = if directed { EdgeMode::Directed } else { EdgeMode::Undirected };
        let embed = if add { EmbedMode::Add } else { EmbedMode::Replace };
        let aug = augmented(seed, 8, 2, 2, mode);
        let plan = plan_for(&aug, embed);
        let shift = ShiftOperator::build(&aug.graph);
        let params = ModelParams::init(&arch(3, 2), seed);
        let mut r = rng(seed ^ 0xabc);
        let weights = random_features(&mut r, aug.graph.num_nodes(), 3);
        let (_, grads) = weighted_logit_loss(&shift, &plan, &params, &weights);
        let (err, at) = max_grad_rel_error(&params, &grads, 1e-5, 1e-6, |p| weighted_logit_value(&shift, &plan, p, &weights));
        prop_assert!(err < 1e-4, "{err:e} at {at}");
    }

    #[test]
    fn replace_mode_ignores_origin_features(seed in 0u64..1000) {
        let aug = augmented(seed, 9, 2, 3, EdgeMode::Undirected);
        let mut perturbed = aug.clone();
        for rec in &mut perturbed.registry {
            rec.origin_features.iter_mut().for_each(|x| *x += 7.5);
        }
        let params = ModelParams::init(&arch(3, 3), seed);
        let shift = ShiftOperator::build(&aug.graph);
        let a = plan_for(&aug, EmbedMode::Replace);
        let b = plan_for(&perturbed, EmbedMode::Replace);
        let (la, _) = forward(&shift, &a, &params, ForwardOptions::inference()).unwrap();
        let (lb, _) = forward(&shift, &b, &params, ForwardOptions::inference()).unwrap();
        prop_assert_eq!(la, lb);
    }

    #[test]
    fn relabeling_permutes_logits(seed in 0u64..1000, n in 3usize..12) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.3);
        let x = random_features(&mut r, n, 3);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut r);
        // node v of g becomes perm[v] of h
        let edges: Vec<_> = g.edges().into_iter().map(|(u, v)| (perm[u], perm[v])).collect();
        let h = Graph::build(n, &edges, false, None).unwrap();
        let mut xh = Tensor2::zeros(n, 3);
        for v in 0..n {
            xh.row_mut(perm[v]).copy_from_slice(x.row(v));
        }
        let params = ModelParams::init(&arch(3, 0), seed);
        let run = |g: &Graph, x: Tensor2| {
            let plan = InitPlan::plain(x);
            let shift = ShiftOperator::build(g);
            forward(&shift, &plan, &params, ForwardOptions::inference()).unwrap().0
        };
        let lg = run(&g, x);
        let lh = run(&h, xh);
        for v in 0..n {
            for (a, b) in lg.row(v).iter().zip(lh.row(perm[v])) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

/// The shared table's gradient is the sum of the gradients obtained when
/// only one group at a time receives an upstream signal.
#[test]
fn shared_embedding_gradient_is_sum_over_groups() {
    let aug = augmented(17, 10, 3, 2, EdgeMode::Directed);
    let plan = plan_for(&aug, EmbedMode::Add);
    let shift = ShiftOperator::build(&aug.graph);
    let params = ModelParams::init(&arch(3, 2), 5);
    let mut r = rng(99);
    let scores_grad = random_features(&mut r, aug.old_to_new.len(), 3);
    let grad_for = |rows: &[usize]| {
        let mut g = Tensor2::zeros(scores_grad.rows(), scores_grad.cols());
        for &v in rows {
            g.row_mut(v).copy_from_slice(scores_grad.row(v));
        }
        let (_, mut tape) = forward(&shift, &plan, &params, ForwardOptions::inference()).unwrap();
        backward(&mut tape, &readout_node_backward(&g, &aug)).unwrap().params.embedding_table
    };
    let all: Vec<usize> = aug.centrals.clone();
    let total = grad_for(&all);
    let mut summed = Tensor2::zeros(total.rows(), total.cols());
    for &c in &aug.centrals {
        summed.add_assign(&grad_for(&[c]));
    }
    for (a, b) in total.data().iter().zip(summed.data()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(total.data().iter().any(|&x| x != 0.0));
}

#[test]
fn graph_readout_cross_entropy_gradient() {
    let aug = augmented(3, 8, 2, 2, EdgeMode::Undirected);
    let plan = plan_for(&aug, EmbedMode::Add);
    let shift = ShiftOperator::build(&aug.graph);
    let params = ModelParams::init(&arch(3, 2), 8);
    let loss = |p: &ModelParams| {
        let (logits, _) = forward(&shift, &plan, p, ForwardOptions::inference()).unwrap();
        let s = readout_graph(&logits);
        cross_entropy(&Tensor2::from_vec(1, 3, s), &[2], None).unwrap().0
    };
    let (logits, mut tape) = forward(&shift, &plan, &params, ForwardOptions::inference()).unwrap();
    let s = readout_graph(&logits);
    let (_, g) = cross_entropy(&Tensor2::from_vec(1, 3, s), &[2], None).unwrap();
    let grads = backward(&mut tape, &readout_graph_backward(g.row(0), logits.rows())).unwrap();
    let (err, at) = max_grad_rel_error(&params, &grads.params, 1e-5, 1e-6, loss);
    assert!(err < 1e-4, "{err:e} at {at}");
}

#[test]
fn node_readout_gradient() {
    let aug = augmented(4, 8, 2, 3, EdgeMode::Directed);
    let plan = plan_for(&aug, EmbedMode::Replace);
    let shift = ShiftOperator::build(&aug.graph);
    let params = ModelParams::init(&arch(3, 3), 2);
    let labels: Vec<usize> = (0..8).map(|v| v % 3).collect();
    let loss = |p: &ModelParams| {
        let (logits, _) = forward(&shift, &plan, p, ForwardOptions::inference()).unwrap();
        cross_entropy(&readout_node(&logits, &aug), &labels, Some(&[0, 2, 3, 5])).unwrap().0
    };
    let (logits, mut tape) = forward(&shift, &plan, &params, ForwardOptions::inference()).unwrap();
    let (_, g) = cross_entropy(&readout_node(&logits, &aug), &labels, Some(&[0, 2, 3, 5])).unwrap();
    let grads = backward(&mut tape, &readout_node_backward(&g, &aug)).unwrap();
    let (err, at) = max_grad_rel_error(&params, &grads.params, 1e-5, 1e-6, loss);
    assert!(err < 1e-4, "{err:e} at {at}");
}

#[test]
fn inference_is_deterministic_and_dropout_free() {
    let aug = augmented(6, 8, 1, 2, EdgeMode::Undirected);
    let plan = plan_for(&aug, EmbedMode::Add);
    let shift = ShiftOperator::build(&aug.graph);
    let params = ModelParams::init(&arch(3, 2), 1);
    let a = forward(&shift, &plan, &params, ForwardOptions { dropout: 0.9, seed: 1, training: false }).unwrap().0;
    let b = forward(&shift, &plan, &params, ForwardOptions { dropout: 0.1, seed: 2, training: false }).unwrap().0;
    assert_eq!(a, b);
    let t = forward(&shift, &plan, &params, ForwardOptions { dropout: 0.5, seed: 2, training: true }).unwrap().0;
    assert_ne!(a, t);
}

#[test]
fn gradient_accumulates_over_graphs() {
    // the same table used by two graphs receives both contributions
    let a = augmented(21, 8, 1, 2, EdgeMode::Undirected);
    let b = augmented(22, 9, 2, 2, EdgeMode::Undirected);
    let params = ModelParams::init(&arch(3, 2), 4);
    let grad = |aug: &lvn_core::AugmentedGraph| {
        let plan = plan_for(aug, EmbedMode::Replace);
        let shift = ShiftOperator::build(&aug.graph);
        let w = Tensor2::filled(aug.graph.num_nodes(), 3, 1.0);
        weighted_logit_loss(&shift, &plan, &params, &w).1
    };
    let mut sum = grad(&a);
    sum.add_assign(&grad(&b));
    let ga = grad(&a).embedding_table;
    let gb = grad(&b).embedding_table;
    for i in 0..ga.data().len() {
        assert!((sum.embedding_table.data()[i] - ga.data()[i] - gb.data()[i]).abs() < 1e-15);
    }
}
