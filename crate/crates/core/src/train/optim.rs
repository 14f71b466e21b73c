use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to every gradient except the curvatures'.
    pub weight_decay: f64,
}

/// Adam over a [`Params`] tree with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    decay: Vec<bool>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &Params<Tensor>) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            decay: params
                .named()
                .iter()
                .map(|(name, _)| !name.starts_with("theta"))
                .collect(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut Params<Tensor>, grads: &Params<Tensor>) {
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (i, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
            let wd = if self.decay[i] { c.weight_decay } else { 0.0 };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.data.len() {
                let gj = g.data[j] + wd * p.data[j];
                m.data[j] = c.beta1 * m.data[j] + (1.0 - c.beta1) * gj;
                v.data[j] = c.beta2 * v.data[j] + (1.0 - c.beta2) * gj * gj;
                let mhat = m.data[j] / bc1;
                let vhat = v.data[j] / bc2;
                p.data[j] -= c.learning_rate * mhat / (vhat.sqrt() + c.eps);
            }
        }
    }
}
