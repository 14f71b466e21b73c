use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::layers::{self, Geometry};
use super::{ModelConfig, ModelError, Params, Result, Variant};
use crate::autodiff::geometry::Ball;
use crate::autodiff::{Tape, Tensor, Var};
use crate::geometry::EPS_BOUNDARY;
use crate::graph::{sample_all, HeteroGraph, Metapath, NodeId, SamplerConfig, TypeId};

/// Instances of one metapath for every node of a [`TypeGroup`], flattened
/// into rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetapathInput {
    /// Index into the model's metapath list.
    pub metapath: usize,
    /// Euclidean instance features `x^E`, one row per instance.
    pub features: Tensor,
    /// Rows `offsets[i]..offsets[i + 1]` belong to the group's i-th node.
    pub offsets: Vec<usize>,
    pub instances: Vec<Vec<NodeId>>,
    /// Nodes that had no instance and use the length-1 path to themselves.
    pub fallback: Vec<bool>,
}

/// Batch nodes sharing a type, and therefore a set of metapaths.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeGroup {
    pub node_type: TypeId,
    pub nodes: Vec<NodeId>,
    pub inputs: Vec<MetapathInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedBatch {
    pub groups: Vec<TypeGroup>,
    pub metapath_names: Vec<String>,
    position: HashMap<NodeId, (usize, usize)>,
}

impl PreparedBatch {
    /// `(group, row)` of a batch node.
    pub fn locate(&self, v: NodeId) -> Option<(usize, usize)> {
        self.position.get(&v).copied()
    }

    pub fn node_count(&self) -> usize {
        self.position.len()
    }

    pub fn instance_count(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| &g.inputs)
            .map(|i| i.instances.len())
            .sum()
    }
}

fn instance_features(g: &HeteroGraph, path: &[NodeId], config: &ModelConfig) -> Vec<f64> {
    let n = config.input_dim;
    match config.variant {
        Variant::Concat => {
            let mut out = vec![0.0; config.max_len * n];
            for (i, &u) in path.iter().enumerate() {
                out[i * n..(i + 1) * n].copy_from_slice(g.features(u));
            }
            out
        }
        _ => {
            let mut out = vec![0.0; n];
            for &u in path {
                for (o, f) in out.iter_mut().zip(g.features(u)) {
                    *o += f;
                }
            }
            let k = path.len() as f64;
            out.iter_mut().for_each(|o| *o /= k);
            out
        }
    }
}

/// Samples instances for `nodes` and lays out the encoder inputs.
///
/// Nodes are grouped by type; each group uses the metapaths starting at
/// its type. Duplicate nodes are kept once.
pub fn prepare_batch(
    g: &HeteroGraph,
    nodes: &[NodeId],
    metapaths: &[Metapath],
    config: &ModelConfig,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<PreparedBatch> {
    config.validate()?;
    sampler.validate(metapaths)?;
    if g.feature_dim() != config.input_dim {
        return Err(ModelError::Config(format!(
            "graph features have width {} but input_dim is {}",
            g.feature_dim(),
            config.input_dim
        )));
    }
    if let Some(m) = metapaths.iter().find(|m| m.len() > config.max_len) {
        return Err(ModelError::Config(format!(
            "metapath {} is longer than max_len {}",
            m.name, config.max_len
        )));
    }

    let mut groups: Vec<TypeGroup> = Vec::new();
    let mut position = HashMap::new();
    for &v in nodes {
        if v >= g.node_count() {
            return Err(ModelError::Config(format!("node {v} is not in the graph")));
        }
        if position.contains_key(&v) {
            continue;
        }
        let t = g.node_type(v);
        let gi = match groups.iter().position(|grp| grp.node_type == t) {
            Some(i) => i,
            None => {
                groups.push(TypeGroup {
                    node_type: t,
                    nodes: Vec::new(),
                    inputs: Vec::new(),
                });
                groups.len() - 1
            }
        };
        position.insert(v, (gi, groups[gi].nodes.len()));
        groups[gi].nodes.push(v);
    }

    for group in &mut groups {
        let idx: Vec<usize> = (0..metapaths.len())
            .filter(|&k| metapaths[k].start() == group.node_type)
            .collect();
        if idx.is_empty() {
            return Err(ModelError::Config(format!(
                "no metapath starts at node type {}",
                g.type_name(group.node_type)
            )));
        }
        let subset: Vec<Metapath> = idx.iter().map(|&k| metapaths[k].clone()).collect();
        let sets = sample_all(g, &group.nodes, &subset, sampler, seed)?;
        for (j, &k) in idx.iter().enumerate() {
            let mut offsets = vec![0];
            let mut instances = Vec::new();
            let mut fallback = Vec::with_capacity(group.nodes.len());
            for set in &sets {
                let found = &set.per_metapath[j];
                fallback.push(found.is_empty());
                if found.is_empty() {
                    instances.push(vec![set.node]);
                } else {
                    instances.extend(found.iter().cloned());
                }
                offsets.push(instances.len());
            }
            let rows: Vec<Vec<f64>> = instances.iter().map(|p| instance_features(g, p, config)).collect();
            group.inputs.push(MetapathInput {
                metapath: k,
                features: Tensor::from_rows(&rows),
                offsets,
                instances,
                fallback,
            });
        }
    }
    Ok(PreparedBatch {
        groups,
        metapath_names: metapaths.iter().map(|m| m.name.clone()).collect(),
        position,
    })
}

pub struct HeadOutput<'t> {
    pub h_p: Var<'t>,
    pub scores: Var<'t>,
    pub alpha: Var<'t>,
}

pub struct MetapathOutput<'t> {
    pub metapath: usize,
    pub x_e: Var<'t>,
    pub x_h: Var<'t>,
    pub heads: Vec<HeadOutput<'t>>,
    pub h_v: Var<'t>,
    pub g: Var<'t>,
    pub score: Var<'t>,
}

pub struct GroupOutput<'t> {
    pub metapaths: Vec<MetapathOutput<'t>>,
    pub beta: Var<'t>,
    pub z: Var<'t>,
    pub probs: Option<Var<'t>>,
}

pub struct ForwardOutput<'t> {
    pub groups: Vec<GroupOutput<'t>>,
    /// `c_φ` per metapath; empty for the Euclidean variant.
    pub curvatures: Vec<Var<'t>>,
}

impl<'t> ForwardOutput<'t> {
    /// Rows of `z` for `nodes`, which must all share one group.
    pub fn embeddings(&self, batch: &PreparedBatch, nodes: &[NodeId]) -> Result<Var<'t>> {
        self.rows(batch, nodes, |g| Some(g.z))
    }

    /// Rows of the output-head probabilities for `nodes`.
    pub fn probabilities(&self, batch: &PreparedBatch, nodes: &[NodeId]) -> Result<Var<'t>> {
        self.rows(batch, nodes, |g| g.probs)
    }

    fn rows(
        &self,
        batch: &PreparedBatch,
        nodes: &[NodeId],
        pick: impl Fn(&GroupOutput<'t>) -> Option<Var<'t>>,
    ) -> Result<Var<'t>> {
        let mut group = None;
        let mut rows = Vec::with_capacity(nodes.len());
        for &v in nodes {
            let (gi, r) = batch
                .locate(v)
                .ok_or_else(|| ModelError::Config(format!("node {v} is not in the batch")))?;
            if *group.get_or_insert(gi) != gi {
                return Err(ModelError::Config("nodes span several node types".into()));
            }
            rows.push(r);
        }
        let gi = group.ok_or_else(|| ModelError::Config("no nodes requested".into()))?;
        let src = pick(&self.groups[gi]).ok_or_else(|| ModelError::Config("model has no output head".into()))?;
        Ok(src.gather_rows(&rows)?)
    }
}

/// Records the whole pipeline for `batch` on `params`' tape.
pub fn forward<'t>(params: &Params<Var<'t>>, config: &ModelConfig, batch: &PreparedBatch) -> Result<ForwardOutput<'t>> {
    let tape: &'t Tape = params.w_t.tape();
    let n_mp = batch.metapath_names.len();
    if params.metapaths.len() != n_mp {
        return Err(ModelError::Config(format!(
            "parameters cover {} metapaths but the batch has {n_mp}",
            params.metapaths.len()
        )));
    }
    let expected_theta = match config.variant {
        Variant::Euclid => 0,
        Variant::Single => 1,
        Variant::Full | Variant::Concat => n_mp,
    };
    if params.theta.len() != expected_theta {
        return Err(ModelError::Config(format!(
            "{} expects {expected_theta} curvature parameters, found {}",
            config.variant.name(),
            params.theta.len()
        )));
    }
    let shared: Vec<Var<'t>> = params
        .theta
        .iter()
        .map(|t| t.softplus().add_scalar(config.curvature_floor))
        .collect();
    let curvatures: Vec<Var<'t>> = if shared.is_empty() {
        Vec::new()
    } else {
        (0..n_mp).map(|k| shared[k.min(shared.len() - 1)]).collect()
    };
    let geometry = |k: usize| match curvatures.get(k) {
        Some(&c) => Geometry::Hyperbolic(Ball::new(c)),
        None => Geometry::Euclidean,
    };

    let mut groups = Vec::with_capacity(batch.groups.len());
    for group in &batch.groups {
        let mut outs = Vec::with_capacity(group.inputs.len());
        for input in &group.inputs {
            let k = input.metapath;
            let geo = geometry(k);
            let x_e = tape.leaf(input.features.clone());
            let x_h = layers::encode_instances(&geo, &params.w_t, &x_e)?;
            let mut heads = Vec::with_capacity(config.heads);
            let mut head_vs = Vec::with_capacity(config.heads);
            for hp in &params.metapaths[k].heads {
                let h_p = layers::embed_instances(&geo, hp, &x_h, config.activation, config.activation_last)?;
                let att = layers::intra_attention(&geo, &hp.a, &h_p, &input.offsets, config.activation)?;
                head_vs.push(att.output);
                heads.push(HeadOutput {
                    h_p,
                    scores: att.scores,
                    alpha: att.alpha,
                });
            }
            let h_v = layers::combine_heads(&geo, &head_vs)?;
            let g = layers::map_to_semantic(&geo, &params.w2, &h_v)?;
            let score = layers::metapath_score(&g, &params.w3, &params.b3, &params.b_att)?;
            outs.push(MetapathOutput {
                metapath: k,
                x_e,
                x_h,
                heads,
                h_v,
                g,
                score,
            });
        }
        let scores: Vec<Var<'t>> = outs.iter().map(|o| o.score).collect();
        let gs: Vec<Var<'t>> = outs.iter().map(|o| o.g).collect();
        let inter = layers::inter_attention(&scores, &gs)?;
        let probs = match &params.w_o {
            Some(w_o) => Some(layers::output_head(w_o, &inter.z)?),
            None => None,
        };
        groups.push(GroupOutput {
            metapaths: outs,
            beta: inter.beta,
            z: inter.z,
            probs,
        });
    }
    Ok(ForwardOutput { groups, curvatures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetapathTrace {
    pub metapath: usize,
    pub name: String,
    pub offsets: Vec<usize>,
    pub instances: Vec<Vec<NodeId>>,
    pub fallback: Vec<bool>,
    pub x_e: Tensor,
    pub x_h: Tensor,
    /// Per head.
    pub h_p: Vec<Tensor>,
    pub scores: Vec<Tensor>,
    pub alpha: Vec<Tensor>,
    pub h_v: Tensor,
    pub g: Tensor,
    pub score: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTrace {
    pub node_type: TypeId,
    pub nodes: Vec<NodeId>,
    pub metapaths: Vec<MetapathTrace>,
    /// `nodes × |Φ|`, columns in `metapaths` order.
    pub beta: Tensor,
    pub z: Tensor,
    pub probs: Option<Tensor>,
}

/// Every intermediate value of a forward pass, detached from the tape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    pub variant: Variant,
    pub curvatures: Vec<f64>,
    pub groups: Vec<GroupTrace>,
}

impl ForwardTrace {
    pub fn capture(output: &ForwardOutput<'_>, batch: &PreparedBatch, config: &ModelConfig) -> Self {
        let t = |v: &Var<'_>| v.value().clone();
        let groups = output
            .groups
            .iter()
            .zip(&batch.groups)
            .map(|(out, grp)| GroupTrace {
                node_type: grp.node_type,
                nodes: grp.nodes.clone(),
                metapaths: out
                    .metapaths
                    .iter()
                    .zip(&grp.inputs)
                    .map(|(m, input)| MetapathTrace {
                        metapath: m.metapath,
                        name: batch.metapath_names[m.metapath].clone(),
                        offsets: input.offsets.clone(),
                        instances: input.instances.clone(),
                        fallback: input.fallback.clone(),
                        x_e: t(&m.x_e),
                        x_h: t(&m.x_h),
                        h_p: m.heads.iter().map(|h| t(&h.h_p)).collect(),
                        scores: m.heads.iter().map(|h| t(&h.scores)).collect(),
                        alpha: m.heads.iter().map(|h| t(&h.alpha)).collect(),
                        h_v: t(&m.h_v),
                        g: t(&m.g),
                        score: t(&m.score),
                    })
                    .collect(),
                beta: t(&out.beta),
                z: t(&out.z),
                probs: out.probs.as_ref().map(t),
            })
            .collect();
        ForwardTrace {
            variant: config.variant,
            curvatures: output.curvatures.iter().map(|c| c.item()).collect(),
            groups,
        }
    }

    /// `z_v` for a node in the batch.
    pub fn embedding(&self, v: NodeId) -> Option<&[f64]> {
        self.groups
            .iter()
            .find_map(|g| g.nodes.iter().position(|&u| u == v).map(|r| g.z.row_slice(r)))
    }

    /// Output-head probabilities for a node in the batch.
    pub fn probabilities(&self, v: NodeId) -> Option<&[f64]> {
        self.groups.iter().find_map(|g| {
            let r = g.nodes.iter().position(|&u| u == v)?;
            g.probs.as_ref().map(|p| p.row_slice(r))
        })
    }

    /// Checks attention normalisation, ball containment and curvature
    /// positivity; returns the first violation.
    pub fn check_invariants(&self, curvature_floor: f64, tol: f64) -> std::result::Result<(), String> {
        for &c in &self.curvatures {
            if !(c > curvature_floor) {
                return Err(format!("curvature {c} not above floor {curvature_floor}"));
            }
        }
        for grp in &self.groups {
            for r in 0..grp.beta.rows {
                let s: f64 = grp.beta.row_slice(r).iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(format!("beta row {r} sums to {s}"));
                }
            }
            if let Some(p) = &grp.probs {
                for r in 0..p.rows {
                    let s: f64 = p.row_slice(r).iter().sum();
                    if (s - 1.0).abs() > tol {
                        return Err(format!("probability row {r} sums to {s}"));
                    }
                }
            }
            for m in &grp.metapaths {
                for (h, alpha) in m.alpha.iter().enumerate() {
                    for w in m.offsets.windows(2) {
                        let s: f64 = alpha.data[w[0]..w[1]].iter().sum();
                        if (s - 1.0).abs() > tol {
                            return Err(format!("{} head {h}: alpha sums to {s}", m.name));
                        }
                    }
                }
                let Some(&c) = self.curvatures.get(m.metapath) else {
                    continue;
                };
                let balls = std::iter::once(("x_h", &m.x_h))
                    .chain(m.h_p.iter().map(|t| ("h_p", t)))
                    .chain(std::iter::once(("h_v", &m.h_v)));
                for (what, t) in balls {
                    for r in 0..t.rows {
                        let sq: f64 = t.row_slice(r).iter().map(|x| x * x).sum();
                        if c * sq > 1.0 - EPS_BOUNDARY + 1e-12 {
                            return Err(format!("{} {what} row {r}: c|x|^2 = {}", m.name, c * sq));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Samples, runs and records the model on `nodes` without keeping a tape.
pub fn forward_trace(
    g: &HeteroGraph,
    nodes: &[NodeId],
    params: &Params<Tensor>,
    config: &ModelConfig,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<ForwardTrace> {
    let batch = prepare_batch(g, nodes, g.metapaths(), config, sampler, seed)?;
    let tape = Tape::new();
    let vars = params.map(|t| tape.leaf(t.clone()));
    let out = forward(&vars, config, &batch)?;
    Ok(ForwardTrace::capture(&out, &batch, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::graph::fixtures::dblp_like;
    use crate::graph::GraphBuilder;

    fn sampler() -> SamplerConfig {
        SamplerConfig { max_len: 5, cap: 64 }
    }

    fn config_for(g: &HeteroGraph, variant: Variant) -> ModelConfig {
        ModelConfig {
            input_dim: g.feature_dim(),
            hidden_dim: 4,
            semantic_dim: 3,
            output_dim: 2,
            heads: 2,
            max_len: 5,
            variant,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn single_node_trace_invariants() {
        let g = dblp_like();
        let cfg = config_for(&g, Variant::Full);
        let p = Params::init(&cfg, 2, true, 3);
        let tr = forward_trace(&g, &[1], &p, &cfg, &sampler(), 0).unwrap();
        tr.check_invariants(cfg.curvature_floor, 1e-9).unwrap();
        assert_eq!(tr.groups[0].metapaths.len(), 2);
        assert_eq!(tr.embedding(1).unwrap().len(), 4);
        assert!(tr.curvatures.iter().all(|c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn full_and_single_agree_at_init() {
        let g = dblp_like();
        let nodes: Vec<NodeId> = g.target_nodes().to_vec();
        let full = config_for(&g, Variant::Full);
        let single = config_for(&g, Variant::Single);
        let pf = Params::init(&full, 2, true, 11);
        let ps = Params::init(&single, 2, true, 11);
        let s = sampler();
        let a = forward_trace(&g, &nodes, &pf, &full, &s, 0).unwrap();
        let b = forward_trace(&g, &nodes, &ps, &single, &s, 0).unwrap();
        assert_eq!(a.groups[0].z, b.groups[0].z);
        assert_eq!(a.groups[0].probs, b.groups[0].probs);
    }

    #[test]
    fn tiny_curvature_approaches_euclid() {
        let g = dblp_like();
        let nodes: Vec<NodeId> = g.target_nodes().to_vec();
        let hyp = ModelConfig {
            curvature_floor: 0.0,
            initial_curvature: 1e-6,
            ..config_for(&g, Variant::Full)
        };
        let flat = ModelConfig {
            variant: Variant::Euclid,
            ..hyp.clone()
        };
        let ph = Params::init(&hyp, 2, true, 5);
        let pe = Params::init(&flat, 2, true, 5);
        let s = sampler();
        let a = forward_trace(&g, &nodes, &ph, &hyp, &s, 0).unwrap();
        let b = forward_trace(&g, &nodes, &pe, &flat, &s, 0).unwrap();
        let (za, zb) = (&a.groups[0].z, &b.groups[0].z);
        let scale = zb.max_abs();
        for (x, y) in za.data.iter().zip(&zb.data) {
            assert!((x - y).abs() <= 1e-3 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn instance_order_does_not_matter() {
        let g = dblp_like();
        let cfg = config_for(&g, Variant::Full);
        let p = Params::init(&cfg, 2, true, 2);
        let mut batch = prepare_batch(&g, &[1, 2], g.metapaths(), &cfg, &sampler(), 0).unwrap();
        let run = |b: &PreparedBatch| {
            let tape = Tape::new();
            let vars = p.map(|t| tape.leaf(t.clone()));
            let out = forward(&vars, &cfg, b).unwrap();
            ForwardTrace::capture(&out, b, &cfg)
        };
        let before = run(&batch);
        // reverse the rows of every node's segment
        for input in &mut batch.groups[0].inputs {
            let mut rows = Vec::new();
            for w in input.offsets.windows(2) {
                for r in (w[0]..w[1]).rev() {
                    rows.push(input.features.row_slice(r).to_vec());
                }
            }
            input.features = Tensor::from_rows(&rows);
        }
        let after = run(&batch);
        for (m0, m1) in before.groups[0].metapaths.iter().zip(&after.groups[0].metapaths) {
            for (x, y) in m0.h_v.data.iter().zip(&m1.h_v.data) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn metapath_order_does_not_matter() {
        let g = dblp_like();
        let cfg = config_for(&g, Variant::Full);
        let p = Params::init(&cfg, 2, true, 2);
        let s = sampler();
        let fwd = forward_trace(&g, &[0, 1, 2, 3], &p, &cfg, &s, 0).unwrap();

        let mut swapped_mp: Vec<Metapath> = g.metapaths().to_vec();
        swapped_mp.reverse();
        let mut q = p.clone();
        q.metapaths.reverse();
        q.theta.reverse();
        let batch = prepare_batch(&g, &[0, 1, 2, 3], &swapped_mp, &cfg, &s, 0).unwrap();
        let tape = Tape::new();
        let vars = q.map(|t| tape.leaf(t.clone()));
        let out = forward(&vars, &cfg, &batch).unwrap();
        let z = out.groups[0].z.value().clone();
        for (x, y) in fwd.groups[0].z.data.iter().zip(&z.data) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn isolated_node_falls_back_to_itself() {
        let mut b = GraphBuilder::new();
        b.set_target("A");
        let r = b.add_relation("A-P", "A", "P");
        let a0 = b.add_node("A");
        let lonely = b.add_node("A");
        let a2 = b.add_node("A");
        let p = b.add_node("P");
        b.add_edge(a0, p, r);
        b.add_edge(a2, p, r);
        for v in 0..4 {
            b.set_features(v, vec![v as f64 * 0.1, 0.5]);
        }
        b.add_metapath("A,P,A");
        let g = b.build().unwrap();
        let cfg = ModelConfig {
            input_dim: 2,
            hidden_dim: 2,
            semantic_dim: 2,
            output_dim: 2,
            heads: 1,
            ..ModelConfig::default()
        };
        let batch = prepare_batch(&g, &[a0, lonely], g.metapaths(), &cfg, &sampler(), 0).unwrap();
        let input = &batch.groups[0].inputs[0];
        assert_eq!(input.fallback, vec![false, true]);
        assert_eq!(input.instances[1], vec![lonely]);
        assert_eq!(input.features.row_slice(1), g.features(lonely));
    }

    #[test]
    fn concat_pads_features() {
        let g = dblp_like();
        let cfg = ModelConfig {
            max_len: 5,
            ..config_for(&g, Variant::Concat)
        };
        let batch = prepare_batch(&g, &[0], g.metapaths(), &cfg, &sampler(), 0).unwrap();
        let input = &batch.groups[0].inputs[0];
        assert_eq!(input.features.cols, 10);
        let path = &input.instances[0];
        let row = input.features.row_slice(0);
        assert_eq!(&row[..2], g.features(path[0]));
        assert!(row[6..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_features_rejected() {
        let g = dblp_like();
        let cfg = ModelConfig {
            input_dim: 7,
            ..config_for(&g, Variant::Full)
        };
        assert!(prepare_batch(&g, &[0], g.metapaths(), &cfg, &sampler(), 0).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = dblp_like();
        let cfg = config_for(&g, Variant::Full);
        let p = Params::init(&cfg, 2, true, 9);
        let nodes: Vec<NodeId> = g.target_nodes().to_vec();
        let batch = prepare_batch(&g, &nodes, g.metapaths(), &cfg, &sampler(), 0).unwrap();
        let flat: Vec<Tensor> = p.iter().cloned().collect();
        let check = grad_check(
            |_tape, vars| {
                let pv = p.rebuild(vars.to_vec());
                let out = forward(&pv, &cfg, &batch).unwrap();
                let probs = out.groups[0].probs.unwrap();
                Ok(probs.slice_cols(0, 1)?.log().sum())
            },
            &flat,
            1e-5,
        )
        .unwrap();
        assert!(check.max_rel_error <= 1e-4, "{:?}", check.per_input);
    }
}
