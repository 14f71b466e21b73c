use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, Variant};
use crate::autodiff::{softplus, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams<T> {
    /// `d_k × n` instance transform.
    pub w1: T,
    /// `1 × d_k` bias, mapped into the ball before the Möbius addition.
    pub b1: T,
    /// `1 × d_k` instance-attention vector.
    pub a: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetapathParams<T> {
    pub heads: Vec<HeadParams<T>>,
}

/// Every trainable tensor. `T` is [`Tensor`] for storage and
/// [`Var`](crate::autodiff::Var) while recording a forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params<T> {
    /// `n × n` (or `n × l·n` for `Concat`) encoder transform, shared.
    pub w_t: T,
    pub metapaths: Vec<MetapathParams<T>>,
    /// `d × d` map into the shared semantic space.
    pub w2: T,
    /// `d' × d`.
    pub w3: T,
    /// `1 × d'`.
    pub b3: T,
    /// `1 × d'` metapath-attention vector.
    pub b_att: T,
    /// `d_o × d` output head; absent for link prediction.
    pub w_o: Option<T>,
    /// Curvature pre-parameters: one per metapath, one for `Single`,
    /// none for `Euclid`.
    pub theta: Vec<T>,
}

/// `softplus(θ) + floor`.
pub fn curvature_from_theta(theta: f64, floor: f64) -> f64 {
    softplus(theta) + floor
}

/// Inverse of [`curvature_from_theta`].
pub fn theta_for_curvature(c: f64, floor: f64) -> f64 {
    let s = c - floor;
    assert!(s > 0.0, "curvature must exceed its floor");
    // ln(e^s - 1), stable for large s
    if s > 30.0 {
        s
    } else {
        s.exp_m1().ln()
    }
}

fn glorot(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect(),
    )
}

fn attention(rng: &mut impl Rng, cols: usize) -> Tensor {
    Tensor::row((0..cols).map(|_| rng.gen_range(-0.1..0.1)).collect())
}

impl Params<Tensor> {
    /// Seeded initialisation. Draw order does not depend on the variant's
    /// curvature handling, so `Full` and `Single` start from identical
    /// weights.
    pub fn init(config: &ModelConfig, num_metapaths: usize, with_head: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d, dk, ds) = (
            config.input_dim,
            config.hidden_dim,
            config.head_dim(),
            config.semantic_dim,
        );
        let w_t = glorot(&mut rng, n, config.instance_width());
        let metapaths = (0..num_metapaths)
            .map(|_| MetapathParams {
                heads: (0..config.heads)
                    .map(|_| HeadParams {
                        w1: glorot(&mut rng, dk, n),
                        b1: Tensor::zeros(1, dk),
                        a: attention(&mut rng, dk),
                    })
                    .collect(),
            })
            .collect();
        let w2 = glorot(&mut rng, d, d);
        let w3 = glorot(&mut rng, ds, d);
        let b_att = attention(&mut rng, ds);
        let w_o = with_head.then(|| glorot(&mut rng, config.output_dim, d));
        let theta0 = theta_for_curvature(config.initial_curvature, config.curvature_floor);
        let theta_count = match config.variant {
            Variant::Euclid => 0,
            Variant::Single => 1,
            Variant::Full | Variant::Concat => num_metapaths,
        };
        Params {
            w_t,
            metapaths,
            w2,
            w3,
            b3: Tensor::zeros(1, ds),
            b_att,
            w_o,
            theta: vec![Tensor::scalar(theta0); theta_count],
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.iter().map(Tensor::len).sum()
    }

    /// Curvature of each metapath's ball (empty for `Euclid`).
    pub fn curvatures(&self, config: &ModelConfig) -> Vec<f64> {
        if self.theta.is_empty() {
            return Vec::new();
        }
        (0..self.metapaths.len())
            .map(|k| {
                let t = &self.theta[k.min(self.theta.len() - 1)];
                curvature_from_theta(t.item(), config.curvature_floor)
            })
            .collect()
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|t| Tensor::zeros(t.rows, t.cols))
    }
}

impl<T> Params<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Params<U> {
        Params {
            w_t: f(&self.w_t),
            metapaths: self
                .metapaths
                .iter()
                .map(|m| MetapathParams {
                    heads: m
                        .heads
                        .iter()
                        .map(|h| HeadParams {
                            w1: f(&h.w1),
                            b1: f(&h.b1),
                            a: f(&h.a),
                        })
                        .collect(),
                })
                .collect(),
            w2: f(&self.w2),
            w3: f(&self.w3),
            b3: f(&self.b3),
            b_att: f(&self.b_att),
            w_o: self.w_o.as_ref().map(&mut f),
            theta: self.theta.iter().map(f).collect(),
        }
    }

    /// Every tensor with a stable name, in a fixed order.
    pub fn named(&self) -> Vec<(String, &T)> {
        let mut out = vec![("w_t".to_string(), &self.w_t)];
        for (k, m) in self.metapaths.iter().enumerate() {
            for (h, hp) in m.heads.iter().enumerate() {
                out.push((format!("metapath{k}.head{h}.w1"), &hp.w1));
                out.push((format!("metapath{k}.head{h}.b1"), &hp.b1));
                out.push((format!("metapath{k}.head{h}.a"), &hp.a));
            }
        }
        out.push(("w2".into(), &self.w2));
        out.push(("w3".into(), &self.w3));
        out.push(("b3".into(), &self.b3));
        out.push(("b_att".into(), &self.b_att));
        if let Some(w) = &self.w_o {
            out.push(("w_o".into(), w));
        }
        for (k, t) in self.theta.iter().enumerate() {
            out.push((format!("theta{k}"), t));
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.named().into_iter().map(|(_, t)| t)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        let mut out: Vec<&mut T> = vec![&mut self.w_t];
        for m in &mut self.metapaths {
            for h in &mut m.heads {
                out.push(&mut h.w1);
                out.push(&mut h.b1);
                out.push(&mut h.a);
            }
        }
        out.push(&mut self.w2);
        out.push(&mut self.w3);
        out.push(&mut self.b3);
        out.push(&mut self.b_att);
        if let Some(w) = &mut self.w_o {
            out.push(w);
        }
        out.extend(self.theta.iter_mut());
        out.into_iter()
    }

    /// Builds a structure of the same shape from a flat list in
    /// [`named`](Self::named) order.
    pub fn rebuild<U>(&self, flat: Vec<U>) -> Params<U> {
        let mut it = flat.into_iter();
        let out = self.map(|_| it.next().expect("flat list too short"));
        assert!(it.next().is_none(), "flat list too long");
        out
    }
}
