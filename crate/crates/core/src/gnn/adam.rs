use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::tensor::Tensor2;

pub const DEFAULT_LR: f64 = 1e-3;

/// Bias-corrected Adam moments for every tensor of a [`ParamSet`], in the
/// set's iteration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<Tensor2>,
    pub v: Vec<Tensor2>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Tensors with their learning rate masked to zero.
    pub frozen: Vec<bool>,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P, lr: f64) -> Self {
        let zeros: Vec<Tensor2> = params.tensors().iter().map(|t| Tensor2::zeros(t.rows(), t.cols())).collect();
        let n = zeros.len();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            frozen: vec![false; n],
        }
    }

    pub fn freeze(&mut self, tensor_index: usize) {
        self.frozen[tensor_index] = true;
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        for (i, (p, g)) in params.tensors_mut().into_iter().zip(grads.tensors()).enumerate() {
            assert_eq!(p.shape(), g.shape(), "gradient shape mismatch at tensor {i}");
            if self.frozen[i] {
                continue;
            }
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

pub fn adam_step<P: ParamSet>(params: &mut P, grads: &P, state: &mut AdamState) {
    state.step(params, grads);
}
