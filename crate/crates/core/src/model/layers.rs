//! The individual stages of the forward pass, batched over rows.
//!
//! Instance-level tensors have one row per instance; `offsets` (length
//! `nodes + 1`) marks which rows belong to which node.

use super::{HeadParams, Result};
use crate::autodiff::geometry::{apply_activation, Ball};
use crate::autodiff::Var;
use crate::geometry::Activation;

/// The space a metapath's instances live in.
#[derive(Clone, Copy)]
pub enum Geometry<'t> {
    Hyperbolic(Ball<'t>),
    /// Identity maps, plain matvec, plain activation, vector addition.
    Euclidean,
}

impl<'t> Geometry<'t> {
    pub fn exp0(&self, v: &Var<'t>) -> Result<Var<'t>> {
        match self {
            Geometry::Hyperbolic(b) => Ok(b.exp0(v)?),
            Geometry::Euclidean => Ok(*v),
        }
    }

    pub fn log0(&self, y: &Var<'t>) -> Result<Var<'t>> {
        match self {
            Geometry::Hyperbolic(b) => Ok(b.log0(y)?),
            Geometry::Euclidean => Ok(*y),
        }
    }

    pub fn matvec(&self, w: &Var<'t>, y: &Var<'t>) -> Result<Var<'t>> {
        match self {
            Geometry::Hyperbolic(b) => Ok(b.matvec(w, y)?),
            Geometry::Euclidean => Ok(y.linear(w)?),
        }
    }

    pub fn activation(&self, act: Activation, y: &Var<'t>) -> Result<Var<'t>> {
        match self {
            Geometry::Hyperbolic(b) => Ok(b.activation(act, y)?),
            Geometry::Euclidean => Ok(apply_activation(act, y)),
        }
    }

    pub fn add(&self, x: &Var<'t>, y: &Var<'t>) -> Result<Var<'t>> {
        match self {
            Geometry::Hyperbolic(b) => Ok(b.mobius_add(x, y)?),
            Geometry::Euclidean => Ok(x.add(y)?),
        }
    }

    pub fn project(&self, x: &Var<'t>) -> Result<Var<'t>> {
        match self {
            Geometry::Hyperbolic(b) => Ok(b.project(x)?),
            Geometry::Euclidean => Ok(*x),
        }
    }
}

/// `x^H = W_t ⊗ exp_0(x^E)` for every instance row of `x_e`.
pub fn encode_instances<'t>(geo: &Geometry<'t>, w_t: &Var<'t>, x_e: &Var<'t>) -> Result<Var<'t>> {
    geo.matvec(w_t, &geo.exp0(x_e)?)
}

/// `h_p = σ⊗(W_1 ⊗ x^H) ⊕ exp_0(b_1)` for one head, or
/// `σ⊗((W_1 ⊗ x^H) ⊕ exp_0(b_1))` when `activation_last` is set.
pub fn embed_instances<'t>(
    geo: &Geometry<'t>,
    head: &HeadParams<Var<'t>>,
    x_h: &Var<'t>,
    act: Activation,
    activation_last: bool,
) -> Result<Var<'t>> {
    let u = geo.matvec(&head.w1, x_h)?;
    let bias = geo.exp0(&head.b1)?;
    if activation_last {
        geo.activation(act, &geo.add(&u, &bias)?)
    } else {
        geo.add(&geo.activation(act, &u)?, &bias)
    }
}

pub struct HeadAttention<'t> {
    /// Unnormalised score per instance (`instances × 1`).
    pub scores: Var<'t>,
    /// Softmax of `scores` within each node's segment.
    pub alpha: Var<'t>,
    /// Aggregated head output per node (`nodes × d_k`).
    pub output: Var<'t>,
}

/// Scores, normalises and aggregates one head's instance embeddings.
pub fn intra_attention<'t>(
    geo: &Geometry<'t>,
    a: &Var<'t>,
    h_p: &Var<'t>,
    offsets: &[usize],
    act: Activation,
) -> Result<HeadAttention<'t>> {
    let tangent = geo.log0(h_p)?;
    let scores = tangent.linear(a)?;
    let alpha = scores.segment_softmax(offsets)?;
    let pooled = tangent.mul(&alpha)?.segment_sum(offsets)?;
    let output = geo.activation(act, &geo.exp0(&pooled)?)?;
    Ok(HeadAttention { scores, alpha, output })
}

/// Concatenates head outputs coordinate-wise and projects back into the ball.
pub fn combine_heads<'t>(geo: &Geometry<'t>, heads: &[Var<'t>]) -> Result<Var<'t>> {
    geo.project(&Var::concat_cols(heads)?)
}

/// `g = W_2 log_0(h_v)`.
pub fn map_to_semantic<'t>(geo: &Geometry<'t>, w2: &Var<'t>, h_v: &Var<'t>) -> Result<Var<'t>> {
    Ok(geo.log0(h_v)?.linear(w2)?)
}

/// `e_φ = bᵀ tanh(W_3 g + b_3)` per node (`nodes × 1`).
pub fn metapath_score<'t>(g: &Var<'t>, w3: &Var<'t>, b3: &Var<'t>, b_att: &Var<'t>) -> Result<Var<'t>> {
    Ok(g.linear(w3)?.add(b3)?.tanh().linear(b_att)?)
}

pub struct InterAttention<'t> {
    /// `nodes × |Φ|` softmax weights.
    pub beta: Var<'t>,
    pub z: Var<'t>,
}

/// Softmax over the per-metapath scores and the weighted sum of the `g`s.
pub fn inter_attention<'t>(scores: &[Var<'t>], gs: &[Var<'t>]) -> Result<InterAttention<'t>> {
    let beta = Var::concat_cols(scores)?.softmax_rows();
    let mut z: Option<Var<'t>> = None;
    for (k, g) in gs.iter().enumerate() {
        let term = g.mul(&beta.slice_cols(k, 1)?)?;
        z = Some(match z {
            Some(acc) => acc.add(&term)?,
            None => term,
        });
    }
    let z = z.ok_or_else(|| super::ModelError::Config("no metapaths to attend over".into()))?;
    Ok(InterAttention { beta, z })
}

/// `softmax(W_o z)` per node.
pub fn output_head<'t>(w_o: &Var<'t>, z: &Var<'t>) -> Result<Var<'t>> {
    Ok(z.linear(w_o)?.softmax_rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Tape, Tensor};
    use crate::geometry::CurvedSpace;

    fn ball(tape: &Tape, c: f64) -> Geometry<'_> {
        Geometry::Hyperbolic(Ball::new(tape.scalar(c)))
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn encode_two_node_mean() {
        let tape = Tape::new();
        let geo = ball(&tape, 1.0);
        let x = tape.leaf(Tensor::row(vec![0.5, 0.5]));
        let out = encode_instances(&geo, &tape.leaf(Tensor::identity(2)), &x).unwrap();
        let k = 0.5f64.sqrt().tanh() * 0.5 / 0.5f64.sqrt();
        close(&out.value().data, &[k, k], 1e-12);
        assert!((k - 0.430529).abs() < 1e-6);
    }

    #[test]
    fn encode_zero_is_origin() {
        let tape = Tape::new();
        let geo = ball(&tape, 1.3);
        let w = tape.leaf(Tensor::new(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.1, 0.7]));
        let out = encode_instances(&geo, &w, &tape.leaf(Tensor::zeros(4, 3))).unwrap();
        assert!(out.value().data.iter().all(|&v| v == 0.0));
    }

    fn head<'t>(tape: &'t Tape, w1: Tensor, b1: Vec<f64>) -> HeadParams<Var<'t>> {
        let dk = b1.len();
        HeadParams {
            w1: tape.leaf(w1),
            b1: tape.leaf(Tensor::row(b1)),
            a: tape.leaf(Tensor::zeros(1, dk)),
        }
    }

    #[test]
    fn embed_one_dimensional_case() {
        // the activation leaves a positive input alone, then ⊕ tanh(0.1)
        let tape = Tape::new();
        let geo = ball(&tape, 1.0);
        let h = head(&tape, Tensor::identity(1), vec![0.1]);
        let x = tape.leaf(Tensor::row(vec![0.5]));
        let out = embed_instances(&geo, &h, &x, Activation::LeakyRelu, false).unwrap();
        let (x, y) = (0.5f64, 0.1f64.tanh());
        let expected = ((1.0 + 2.0 * x * y + y * y) * x + (1.0 - x * x) * y) / (1.0 + 2.0 * x * y + x * x * y * y);
        close(&out.value().data, &[expected], 1e-12);
    }

    #[test]
    fn embed_identity_and_origin() {
        let tape = Tape::new();
        let geo = ball(&tape, 0.7);
        let h = head(&tape, Tensor::identity(2), vec![0.0, 0.0]);
        let x = tape.leaf(Tensor::from_rows(&[vec![0.3, -0.2], vec![0.0, 0.0]]));
        let out = embed_instances(&geo, &h, &x, Activation::Identity, false).unwrap();
        close(&out.value().data, &x.value().data, 1e-12);
    }

    #[test]
    fn activation_order_flag_matters() {
        let tape = Tape::new();
        let geo = ball(&tape, 1.0);
        let h = head(&tape, Tensor::identity(1), vec![0.3]);
        let x = tape.leaf(Tensor::row(vec![-0.5]));
        let lit = embed_instances(&geo, &h, &x, Activation::LeakyRelu, false).unwrap();
        let conv = embed_instances(&geo, &h, &x, Activation::LeakyRelu, true).unwrap();
        assert!((lit.item() - conv.item()).abs() > 1e-3);
    }

    #[test]
    fn singleton_and_tied_attention() {
        let tape = Tape::new();
        let geo = ball(&tape, 1.0);
        let a = tape.leaf(Tensor::row(vec![0.4, -0.9]));
        // node 0 has one instance, node 1 has two identical ones
        let h = tape.leaf(Tensor::from_rows(&[vec![0.1, 0.2], vec![-0.3, 0.25], vec![-0.3, 0.25]]));
        let out = intra_attention(&geo, &a, &h, &[0, 1, 3], Activation::Identity).unwrap();
        close(&out.alpha.value().data, &[1.0, 0.5, 0.5], 1e-15);
        close(&out.output.value().data, &[0.1, 0.2, -0.3, 0.25], 1e-12);
    }

    #[test]
    fn intra_attention_matches_scalar_oracle() {
        let space = CurvedSpace::new(0.8).unwrap();
        let hs = [vec![0.1, -0.4], vec![0.3, 0.2], vec![-0.5, 0.1]];
        let a = [0.7, -1.3];
        let logs: Vec<Vec<f64>> = hs
            .iter()
            .map(|h| space.log0(&space.point(h).unwrap()).unwrap().coords)
            .collect();
        let e: Vec<f64> = logs.iter().map(|l| l[0] * a[0] + l[1] * a[1]).collect();
        let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = e.iter().map(|v| (v - m).exp()).sum();
        let alpha: Vec<f64> = e.iter().map(|v| (v - m).exp() / z).collect();
        let mut pooled = [0.0; 2];
        for (l, w) in logs.iter().zip(&alpha) {
            pooled[0] += w * l[0];
            pooled[1] += w * l[1];
        }
        let p = space.exp0(&pooled).unwrap();
        let expected = space.activation(|v| Activation::LeakyRelu.apply(v), &p).unwrap();

        let tape = Tape::new();
        let geo = ball(&tape, 0.8);
        let out = intra_attention(
            &geo,
            &tape.leaf(Tensor::row(a.to_vec())),
            &tape.leaf(Tensor::from_rows(&hs)),
            &[0, 3],
            Activation::LeakyRelu,
        )
        .unwrap();
        close(&out.alpha.value().data, &alpha, 1e-12);
        close(&out.output.value().data, expected.coords(), 1e-12);
    }

    #[test]
    fn semantic_map() {
        let tape = Tape::new();
        let geo = ball(&tape, 2.0);
        let w2 = tape.leaf(Tensor::new(2, 2, vec![0.5, -1.0, 2.0, 0.25]));
        let h = tape.leaf(Tensor::from_rows(&[vec![0.0, 0.0], vec![0.2, -0.3]]));
        let g = map_to_semantic(&geo, &w2, &h).unwrap();
        let space = CurvedSpace::new(2.0).unwrap();
        let l = space.log0(&space.point(&[0.2, -0.3]).unwrap()).unwrap().coords;
        let expected = [0.5 * l[0] - l[1], 2.0 * l[0] + 0.25 * l[1]];
        close(&g.value().data, &[0.0, 0.0, expected[0], expected[1]], 1e-12);
        let id = map_to_semantic(&geo, &tape.leaf(Tensor::identity(2)), &h).unwrap();
        close(&id.value().data[2..], &l, 1e-12);
    }

    #[test]
    fn inter_attention_matches_oracle() {
        let tape = Tape::new();
        let w3 = Tensor::new(2, 3, vec![0.3, -0.2, 0.9, -0.4, 0.6, 0.1]);
        let b3 = vec![0.05, -0.1];
        let b = vec![1.2, -0.7];
        let g1 = vec![0.4, -0.5, 0.2];
        let g2 = vec![-0.1, 0.3, 0.8];
        let score = |g: &[f64]| -> f64 {
            (0..2)
                .map(|i| {
                    let pre: f64 = (0..3).map(|j| w3.get(i, j) * g[j]).sum::<f64>() + b3[i];
                    b[i] * pre.tanh()
                })
                .sum()
        };
        let (e1, e2) = (score(&g1), score(&g2));
        let beta1 = 1.0 / (1.0 + (e2 - e1).exp());
        let z: Vec<f64> = (0..3).map(|j| beta1 * g1[j] + (1.0 - beta1) * g2[j]).collect();

        let (w3v, b3v, bv) = (
            tape.leaf(w3.clone()),
            tape.leaf(Tensor::row(b3.clone())),
            tape.leaf(Tensor::row(b.clone())),
        );
        let gv1 = tape.leaf(Tensor::row(g1.clone()));
        let gv2 = tape.leaf(Tensor::row(g2.clone()));
        let s1 = metapath_score(&gv1, &w3v, &b3v, &bv).unwrap();
        let s2 = metapath_score(&gv2, &w3v, &b3v, &bv).unwrap();
        assert!((s1.item() - e1).abs() < 1e-12);
        let out = inter_attention(&[s1, s2], &[gv1, gv2]).unwrap();
        close(&out.beta.value().data, &[beta1, 1.0 - beta1], 1e-12);
        close(&out.z.value().data, &z, 1e-12);

        let single = inter_attention(&[s1], &[gv1]).unwrap();
        close(&single.z.value().data, &g1, 0.0);
        let same = inter_attention(&[s1, s1], &[gv1, gv1]).unwrap();
        close(&same.beta.value().data, &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn output_head_cases() {
        let tape = Tape::new();
        let z = tape.leaf(Tensor::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.5]]));
        let uniform = output_head(&tape.leaf(Tensor::zeros(3, 2)), &z).unwrap();
        close(&uniform.value().data, &[1.0 / 3.0; 6], 1e-15);

        let w = Tensor::new(3, 2, vec![0.2, -0.5, 1.0, 0.3, -0.7, 0.9]);
        let p = output_head(&tape.leaf(w.clone()), &z).unwrap();
        for r in 0..2 {
            let logits: Vec<f64> = (0..3)
                .map(|c| w.get(c, 0) * z.value().get(r, 0) + w.get(c, 1) * z.value().get(r, 1))
                .collect();
            let s: f64 = logits.iter().map(|l| l.exp()).sum();
            let expect: Vec<f64> = logits.iter().map(|l| l.exp() / s).collect();
            close(p.value().row_slice(r), &expect, 1e-12);
            assert!((p.value().row_slice(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn euclidean_geometry_is_flat() {
        let tape = Tape::new();
        let geo = Geometry::Euclidean;
        let x = tape.leaf(Tensor::row(vec![3.0, -4.0]));
        assert_eq!(geo.exp0(&x).unwrap().value().data, vec![3.0, -4.0]);
        let s = geo.add(&x, &x).unwrap();
        assert_eq!(s.value().data, vec![6.0, -8.0]);
    }
}
