//! GCN forward pass with a recorded tape and the matching reverse pass.
//!
//! ```text
//! x0  = init_features(...)                         (projection / embeddings)
//! H_l = ReLU(S · H_{l-1} · W_l + b_l)              l = 1..L
//!       inverted dropout between consecutive layers when training
//! out = H_L · w_out + b_out
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::shift::ShiftOperator;
use super::ModelError;
use crate::augment::AugmentedGraph;
use crate::tensor::Tensor2;

/// How the initial representation of a virtual node is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMode {
    /// The shared embedding row alone.
    Replace,
    /// Projected origin features plus the embedding row.
    Add,
}

/// Everything needed to build `x0` for one augmented graph: raw feature rows
/// for every node (virtual rows carry their origin's features) and the
/// embedding slot of each virtual row.
#[derive(Debug, Clone, PartialEq)]
pub struct InitPlan {
    pub raw: Tensor2,
    pub slots: Vec<Option<usize>>,
    pub mode: EmbedMode,
}

impl InitPlan {
    /// `raw_features` must cover the surviving original nodes (extra rows are
    /// ignored). Virtual rows take the registry's stored origin features.
    pub fn from_augmented(
        aug: &AugmentedGraph,
        raw_features: &Tensor2,
        mode: EmbedMode,
    ) -> Result<Self, ModelError> {
        let n_orig = aug.num_original();
        if raw_features.rows() < n_orig {
            return Err(ModelError::Shape(format!(
                "raw features have {} rows but {} original nodes survive",
                raw_features.rows(),
                n_orig
            )));
        }
        let f = raw_features.cols();
        if mode == EmbedMode::Add && f == 0 && !aug.registry.is_empty() {
            return Err(ModelError::FeaturelessAdd);
        }
        let n = aug.graph.num_nodes();
        let mut raw = Tensor2::zeros(n, f);
        for v in 0..n_orig {
            raw.row_mut(v).copy_from_slice(raw_features.row(v));
        }
        let mut slots = vec![None; n];
        for r in &aug.registry {
            if !r.origin_features.is_empty() {
                if r.origin_features.len() != f {
                    return Err(ModelError::Shape(format!(
                        "origin features of node {} have length {}, expected {f}",
                        r.origin_node,
                        r.origin_features.len()
                    )));
                }
                raw.row_mut(r.node).copy_from_slice(&r.origin_features);
            } else if mode == EmbedMode::Add {
                return Err(ModelError::FeaturelessAdd);
            }
            slots[r.node] = Some(r.slot);
        }
        Ok(Self { raw, slots, mode })
    }

    /// Plain graph: every row is projected.
    pub fn plain(raw: Tensor2) -> Self {
        let n = raw.rows();
        Self {
            raw,
            slots: vec![None; n],
            mode: EmbedMode::Replace,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.raw.rows()
    }

    fn projects(&self, row: usize) -> bool {
        self.slots[row].is_none() || self.mode == EmbedMode::Add
    }

    /// Original rows get `W_inᵀx + b_in`; virtual rows get `p_slot` or
    /// `W_inᵀx_origin + b_in + p_slot`.
    pub fn apply(&self, params: &ModelParams) -> Result<Tensor2, ModelError> {
        if self.raw.cols() != params.w_in.rows() {
            return Err(ModelError::Shape(format!(
                "input has {} features but w_in expects {}",
                self.raw.cols(),
                params.w_in.rows()
            )));
        }
        let mut x0 = self.raw.matmul(&params.w_in);
        x0.add_row_vector(params.b_in.row(0));
        for (row, slot) in self.slots.iter().enumerate() {
            if let Some(s) = *slot {
                if s >= params.embedding_table.rows() {
                    return Err(ModelError::Shape(format!(
                        "slot {s} outside embedding table of {} rows",
                        params.embedding_table.rows()
                    )));
                }
                let p = params.embedding_table.row(s);
                let dst = x0.row_mut(row);
                match self.mode {
                    EmbedMode::Replace => dst.copy_from_slice(p),
                    EmbedMode::Add => dst.iter_mut().zip(p).for_each(|(d, e)| *d += e),
                }
            }
        }
        Ok(x0)
    }

    fn backward(&self, grad_x0: &Tensor2, grads: &mut ModelParams) {
        let d = grad_x0.cols();
        for row in 0..self.num_nodes() {
            let g = grad_x0.row(row);
            if self.projects(row) {
                for (b, gi) in grads.b_in.row_mut(0).iter_mut().zip(g) {
                    *b += gi;
                }
                for (k, &x) in self.raw.row(row).iter().enumerate() {
                    if x != 0.0 {
                        let w = &mut grads.w_in.data_mut()[k * d..(k + 1) * d];
                        w.iter_mut().zip(g).for_each(|(w, gi)| *w += x * gi);
                    }
                }
            }
            if let Some(s) = self.slots[row] {
                grads
                    .embedding_table
                    .row_mut(s)
                    .iter_mut()
                    .zip(g)
                    .for_each(|(e, gi)| *e += gi);
            }
        }
    }
}

/// Builds `x0` for an augmented graph.
pub fn init_features(
    aug: &AugmentedGraph,
    params: &ModelParams,
    mode: EmbedMode,
    raw_features: &Tensor2,
) -> Result<Tensor2, ModelError> {
    InitPlan::from_augmented(aug, raw_features, mode)?.apply(params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    pub dropout: f64,
    pub seed: u64,
    pub training: bool,
}

impl ForwardOptions {
    pub fn inference() -> Self {
        Self {
            dropout: 0.0,
            seed: 0,
            training: false,
        }
    }
}

/// Intermediates of one forward pass. Consumed by a single [`backward`].
#[derive(Debug)]
pub struct Tape<'a> {
    shift: &'a ShiftOperator,
    params: &'a ModelParams,
    init: Option<&'a InitPlan>,
    /// `S · H_{l-1}` per layer.
    aggregated: Vec<Tensor2>,
    /// Pre-activations per layer.
    pre: Vec<Tensor2>,
    /// Scaled dropout mask applied to the output of each layer, if any.
    masks: Vec<Option<Tensor2>>,
    last_hidden: Tensor2,
    used: bool,
}

pub struct Gradients {
    pub params: ModelParams,
    /// Gradient with respect to `x0`.
    pub x0: Tensor2,
}

/// Runs the GCN layers and readout projection on a given `x0`.
pub fn gcn_forward<'a>(
    shift: &'a ShiftOperator,
    x0: Tensor2,
    params: &'a ModelParams,
    opts: ForwardOptions,
) -> Result<(Tensor2, Tape<'a>), ModelError> {
    let d = params.hidden_dim();
    if x0.rows() != shift.num_nodes() {
        return Err(ModelError::Shape(format!(
            "x0 has {} rows for a {}-node operator",
            x0.rows(),
            shift.num_nodes()
        )));
    }
    if x0.cols() != d {
        return Err(ModelError::Shape(format!("x0 has {} columns, hidden dim is {d}", x0.cols())));
    }
    let num_layers = params.layer_weights.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let use_dropout = opts.training && opts.dropout > 0.0;
    let keep_scale = 1.0 / (1.0 - opts.dropout);

    let mut h = x0;
    let mut aggregated = Vec::with_capacity(num_layers);
    let mut pre = Vec::with_capacity(num_layers);
    let mut masks = Vec::with_capacity(num_layers);
    for (l, (w, b)) in params.layer_weights.iter().zip(&params.layer_biases).enumerate() {
        if w.shape() != (d, d) || b.shape() != (1, d) {
            return Err(ModelError::Layer {
                layer: l,
                msg: format!("weight {:?} / bias {:?} for hidden dim {d}", w.shape(), b.shape()),
            });
        }
        let agg = shift.apply(&h);
        let mut z = agg.matmul(w);
        z.add_row_vector(b.row(0));
        let mut out = z.clone();
        out.map_inplace(|v| v.max(0.0));
        let mask = if use_dropout && l + 1 < num_layers {
            let mut m = Tensor2::zeros(out.rows(), out.cols());
            for x in m.data_mut() {
                *x = if rng.gen::<f64>() < opts.dropout { 0.0 } else { keep_scale };
            }
            for (o, k) in out.data_mut().iter_mut().zip(m.data()) {
                *o *= k;
            }
            Some(m)
        } else {
            None
        };
        aggregated.push(agg);
        pre.push(z);
        masks.push(mask);
        h = out;
    }
    if params.w_out.rows() != d {
        return Err(ModelError::Shape(format!("w_out has {} rows, hidden dim is {d}", params.w_out.rows())));
    }
    let mut logits = h.matmul(&params.w_out);
    logits.add_row_vector(params.b_out.row(0));
    debug_assert!(logits.is_finite(), "non-finite logits");
    Ok((
        logits,
        Tape {
            shift,
            params,
            init: None,
            aggregated,
            pre,
            masks,
            last_hidden: h,
            used: false,
        },
    ))
}

/// `init_features` followed by [`gcn_forward`]; the tape then also carries
/// gradients into `w_in`, `b_in` and the embedding table.
pub fn forward<'a>(
    shift: &'a ShiftOperator,
    plan: &'a InitPlan,
    params: &'a ModelParams,
    opts: ForwardOptions,
) -> Result<(Tensor2, Tape<'a>), ModelError> {
    let x0 = plan.apply(params)?;
    let (logits, mut tape) = gcn_forward(shift, x0, params, opts)?;
    tape.init = Some(plan);
    Ok((logits, tape))
}

/// Reverse pass. Gradients for parameters the tape never touched stay zero.
pub fn backward(tape: &mut Tape<'_>, grad_logits: &Tensor2) -> Result<Gradients, ModelError> {
    if tape.used {
        return Err(ModelError::TapeReused);
    }
    if grad_logits.shape() != (tape.last_hidden.rows(), tape.params.w_out.cols()) {
        return Err(ModelError::Shape(format!(
            "logit gradient {:?} does not match forward output",
            grad_logits.shape()
        )));
    }
    tape.used = true;
    let params = tape.params;
    let mut grads = ModelParams {
        w_in: Tensor2::zeros(params.w_in.rows(), params.w_in.cols()),
        b_in: Tensor2::zeros(1, params.b_in.cols()),
        layer_weights: params.layer_weights.iter().map(|w| Tensor2::zeros(w.rows(), w.cols())).collect(),
        layer_biases: params.layer_biases.iter().map(|b| Tensor2::zeros(1, b.cols())).collect(),
        w_out: Tensor2::zeros(params.w_out.rows(), params.w_out.cols()),
        b_out: Tensor2::zeros(1, params.b_out.cols()),
        embedding_table: Tensor2::zeros(params.embedding_table.rows(), params.embedding_table.cols()),
    };
    grads.w_out = tape.last_hidden.t_matmul(grad_logits);
    grads.b_out = Tensor2::from_vec(1, grad_logits.cols(), grad_logits.column_sums());
    let mut dh = grad_logits.matmul_t(&params.w_out);
    for l in (0..params.layer_weights.len()).rev() {
        if let Some(m) = &tape.masks[l] {
            for (g, k) in dh.data_mut().iter_mut().zip(m.data()) {
                *g *= k;
            }
        }
        for (g, &z) in dh.data_mut().iter_mut().zip(tape.pre[l].data()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        grads.layer_weights[l] = tape.aggregated[l].t_matmul(&dh);
        grads.layer_biases[l] = Tensor2::from_vec(1, dh.cols(), dh.column_sums());
        let d_agg = dh.matmul_t(&params.layer_weights[l]);
        dh = tape.shift.apply_transpose(&d_agg);
    }
    if let Some(plan) = tape.init {
        plan.backward(&dh, &mut grads);
    }
    Ok(Gradients { params: grads, x0: dh })
}

/// Column-wise mean over all rows, virtual nodes included.
pub fn readout_graph(logits: &Tensor2) -> Vec<f64> {
    logits.column_means()
}

/// Spreads a pooled gradient evenly over `rows` rows.
pub fn readout_graph_backward(grad: &[f64], rows: usize) -> Tensor2 {
    let mut g = Tensor2::zeros(rows, grad.len());
    let inv = 1.0 / rows as f64;
    for r in 0..rows {
        for (o, x) in g.row_mut(r).iter_mut().zip(grad) {
            *o = x * inv;
        }
    }
    g
}

/// Per-original-node scores: surviving nodes keep their row, each removed
/// central node gets the mean of its group's rows.
pub fn readout_node(logits: &Tensor2, aug: &AugmentedGraph) -> Tensor2 {
    let groups = aug.readout_groups();
    let n = aug.old_to_new.len();
    let mut out = Tensor2::zeros(n, logits.cols());
    for v in 0..n {
        match aug.old_to_new[v] {
            Some(r) => out.row_mut(v).copy_from_slice(logits.row(r)),
            None => {
                let k = aug.centrals.iter().position(|&c| c == v).expect("removed node is central");
                let rows = &groups[&k];
                let inv = 1.0 / rows.len() as f64;
                let dst = out.row_mut(v);
                for &r in rows {
                    dst.iter_mut().zip(logits.row(r)).for_each(|(d, x)| *d += x * inv);
                }
            }
        }
    }
    out
}

pub fn readout_node_backward(grad: &Tensor2, aug: &AugmentedGraph) -> Tensor2 {
    let groups = aug.readout_groups();
    let mut out = Tensor2::zeros(aug.graph.num_nodes(), grad.cols());
    for v in 0..aug.old_to_new.len() {
        match aug.old_to_new[v] {
            Some(r) => out.row_mut(r).iter_mut().zip(grad.row(v)).for_each(|(o, g)| *o += g),
            None => {
                let k = aug.centrals.iter().position(|&c| c == v).expect("removed node is central");
                let rows = &groups[&k];
                let inv = 1.0 / rows.len() as f64;
                for &r in rows {
                    out.row_mut(r).iter_mut().zip(grad.row(v)).for_each(|(o, g)| *o += g * inv);
                }
            }
        }
    }
    out
}
