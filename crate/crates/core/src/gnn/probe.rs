use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::tensor::Tensor2;

/// Two-layer per-node MLP with global mean pooling. No adjacency is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub w1: Tensor2,
    pub b1: Tensor2,
    pub w2: Tensor2,
    pub b2: Tensor2,
}

impl ProbeParams {
    pub fn init(in_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |r: usize, c: usize| {
            let a = (6.0 / (r + c).max(1) as f64).sqrt();
            Tensor2::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-a..a)).collect())
        };
        let w1 = glorot(in_dim, hidden);
        let w2 = glorot(hidden, classes);
        Self {
            w1,
            b1: Tensor2::zeros(1, hidden),
            w2,
            b2: Tensor2::zeros(1, classes),
        }
    }
}

impl ParamSet for ProbeParams {
    fn tensors(&self) -> Vec<&Tensor2> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn names(&self) -> Vec<String> {
        ["w1", "b1", "w2", "b2"].map(String::from).to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct ProbeTape {
    input: Tensor2,
    pre: Tensor2,
    hidden: Tensor2,
}

/// `mean_v(ReLU(x_v W1 + b1)) W2 + b2`. Pooling before the linear readout
/// gives the same scores as pooling after it.
pub fn mlp_probe_forward(features: &Tensor2, params: &ProbeParams) -> (Vec<f64>, ProbeTape) {
    let mut pre = features.matmul(&params.w1);
    pre.add_row_vector(params.b1.row(0));
    let mut hidden = pre.clone();
    hidden.map_inplace(|v| v.max(0.0));
    let pooled = Tensor2::from_vec(1, hidden.cols(), hidden.column_means());
    let mut out = pooled.matmul(&params.w2);
    out.add_row_vector(params.b2.row(0));
    (
        out.into_data(),
        ProbeTape {
            input: features.clone(),
            pre,
            hidden,
        },
    )
}

pub fn mlp_probe_backward(tape: &ProbeTape, params: &ProbeParams, grad_scores: &[f64]) -> ProbeParams {
    let n = tape.hidden.rows();
    let pooled = Tensor2::from_vec(1, tape.hidden.cols(), tape.hidden.column_means());
    let g = Tensor2::from_vec(1, grad_scores.len(), grad_scores.to_vec());
    let w2 = pooled.t_matmul(&g);
    let d_pooled = g.matmul_t(&params.w2);
    let mut dz = Tensor2::zeros(n, tape.hidden.cols());
    let inv = 1.0 / n as f64;
    for r in 0..n {
        for ((o, &z), &d) in dz.row_mut(r).iter_mut().zip(tape.pre.row(r)).zip(d_pooled.row(0)) {
            *o = if z > 0.0 { d * inv } else { 0.0 };
        }
    }
    ProbeParams {
        w1: tape.input.t_matmul(&dz),
        b1: Tensor2::from_vec(1, dz.cols(), dz.column_sums()),
        w2,
        b2: g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::loss::cross_entropy;

    #[test]
    fn zero_weights_output_second_bias() {
        let mut p = ProbeParams::init(3, 5, 2, 0);
        p.w1.map_inplace(|_| 0.0);
        p.w2.map_inplace(|_| 0.0);
        p.b2 = Tensor2::from_vec(1, 2, vec![0.25, -1.0]);
        let (out, _) = mlp_probe_forward(&Tensor2::filled(4, 3, 1.0), &p);
        assert_eq!(out, vec![0.25, -1.0]);
    }

    #[test]
    fn row_order_is_irrelevant() {
        let p = ProbeParams::init(2, 6, 3, 4);
        let x = Tensor2::from_vec(3, 2, vec![1.0, 0.0, 0.5, -1.0, 2.0, 3.0]);
        let (a, _) = mlp_probe_forward(&x, &p);
        let (b, _) = mlp_probe_forward(&x.select_rows(&[2, 0, 1]), &p);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ProbeParams::init(3, 4, 2, 9);
        let x = Tensor2::from_vec(5, 3, (0..15).map(|i| (i as f64 * 0.7).sin()).collect());
        let loss = |p: &ProbeParams| {
            let (s, _) = mlp_probe_forward(&x, p);
            cross_entropy(&Tensor2::from_vec(1, 2, s), &[1], None).unwrap().0
        };
        let (s, tape) = mlp_probe_forward(&x, &p);
        let (_, gs) = cross_entropy(&Tensor2::from_vec(1, 2, s), &[1], None).unwrap();
        let grads = mlp_probe_backward(&tape, &p, gs.data());
        let h = 1e-5;
        for (ti, gt) in grads.tensors().iter().enumerate() {
            for i in 0..gt.data().len() {
                let mut a = p.clone();
                a.tensors_mut()[ti].data_mut()[i] += h;
                let mut b = p.clone();
                b.tensors_mut()[ti].data_mut()[i] -= h;
                let fd = (loss(&a) - loss(&b)) / (2.0 * h);
                assert!((fd - gt.data()[i]).abs() < 1e-7, "tensor {ti} entry {i}");
            }
        }
    }
}
