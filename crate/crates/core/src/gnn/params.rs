use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::Tensor2;

/// Shapes of a GCN: input projection `F -> D`, `num_layers` graph
/// convolutions `D -> D`, readout `D -> K`, and an `n_c × D` embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_classes: usize,
    pub n_c: usize,
}

/// A set of named tensors that an optimizer can walk in a fixed order.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&Tensor2>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor2>;
    fn names(&self) -> Vec<String>;

    fn zeros_like(&self) -> Self
    where
        Self: Sized + Clone,
    {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.map_inplace(|_| 0.0);
        }
        z
    }

    fn add_assign(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.scale(s);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub w_in: Tensor2,
    pub b_in: Tensor2,
    pub layer_weights: Vec<Tensor2>,
    pub layer_biases: Vec<Tensor2>,
    pub w_out: Tensor2,
    pub b_out: Tensor2,
    pub embedding_table: Tensor2,
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor2 {
    let a = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)).collect();
    Tensor2::from_vec(fan_in, fan_out, data)
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, and embeddings drawn from
    /// `U(-√(1/D), √(1/D))`.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = arch.hidden_dim;
        let w_in = glorot(&mut rng, arch.in_dim, d);
        let mut layer_weights = Vec::with_capacity(arch.num_layers);
        let mut layer_biases = Vec::with_capacity(arch.num_layers);
        for _ in 0..arch.num_layers {
            layer_weights.push(glorot(&mut rng, d, d));
            layer_biases.push(Tensor2::zeros(1, d));
        }
        let w_out = glorot(&mut rng, d, arch.num_classes);
        let a = (1.0 / d as f64).sqrt();
        let emb = (0..arch.n_c * d).map(|_| rng.gen_range(-a..a)).collect();
        Self {
            w_in,
            b_in: Tensor2::zeros(1, d),
            layer_weights,
            layer_biases,
            w_out,
            b_out: Tensor2::zeros(1, arch.num_classes),
            embedding_table: Tensor2::from_vec(arch.n_c, d, emb),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            in_dim: self.w_in.rows(),
            hidden_dim: self.w_in.cols(),
            num_layers: self.layer_weights.len(),
            num_classes: self.w_out.cols(),
            n_c: self.embedding_table.rows(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_in.cols()
    }
}

impl ParamSet for ModelParams {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut v = vec![&self.w_in, &self.b_in];
        for (w, b) in self.layer_weights.iter().zip(&self.layer_biases) {
            v.push(w);
            v.push(b);
        }
        v.extend([&self.w_out, &self.b_out, &self.embedding_table]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = vec![&mut self.w_in, &mut self.b_in];
        for (w, b) in self.layer_weights.iter_mut().zip(self.layer_biases.iter_mut()) {
            v.push(w);
            v.push(b);
        }
        v.extend([&mut self.w_out, &mut self.b_out, &mut self.embedding_table]);
        v
    }

    fn names(&self) -> Vec<String> {
        let mut v = vec!["w_in".to_string(), "b_in".to_string()];
        for l in 0..self.layer_weights.len() {
            v.push(format!("layer{l}.weight"));
            v.push(format!("layer{l}.bias"));
        }
        v.extend(["w_out", "b_out", "embedding_table"].map(String::from));
        v
    }
}
