use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GraphError, HeteroGraph, Metapath, NodeId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Longest metapath (in node types) an instance may follow.
    pub max_len: usize,
    /// Instances kept per (node, metapath); larger sets are subsampled.
    pub cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { max_len: 4, cap: 64 }
    }
}

impl SamplerConfig {
    pub fn validate(&self, metapaths: &[Metapath]) -> Result<()> {
        if self.max_len < 2 {
            return Err(GraphError::Schema(format!(
                "max metapath length must be at least 2, got {}",
                self.max_len
            )));
        }
        if self.cap == 0 {
            return Err(GraphError::Schema("instance cap must be positive".into()));
        }
        for m in metapaths {
            if m.len() > self.max_len {
                return Err(GraphError::MetapathTooLong {
                    metapath: m.name.clone(),
                    len: m.len(),
                    max: self.max_len,
                });
            }
        }
        Ok(())
    }
}

/// Instances starting at one node, grouped by metapath (same order as the
/// metapath list they were sampled for).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSet {
    pub node: NodeId,
    pub per_metapath: Vec<Vec<Vec<NodeId>>>,
}

impl InstanceSet {
    pub fn total(&self) -> usize {
        self.per_metapath.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finaliser
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed) ^ a) ^ b)
}

/// Every simple path from `start` following `metapath`, in breadth-first order.
pub(crate) fn enumerate_bfs(g: &HeteroGraph, start: NodeId, metapath: &Metapath) -> Vec<Vec<NodeId>> {
    let mut done = Vec::new();
    if g.node_type(start) != metapath.start() {
        return done;
    }
    let mut queue = VecDeque::from([vec![start]]);
    while let Some(path) = queue.pop_front() {
        if path.len() == metapath.len() {
            done.push(path);
            continue;
        }
        let want = metapath.types[path.len()];
        let last = *path.last().unwrap();
        for &w in g.neighbors(last) {
            if g.node_type(w) == want && !path.contains(&w) {
                let mut next = path.clone();
                next.push(w);
                queue.push_back(next);
            }
        }
    }
    done
}

/// Breadth-first enumeration of the metapath instances starting at `v`.
///
/// Instances are simple paths whose i-th node has the metapath's i-th
/// type. When a metapath yields more than `cfg.cap` instances a uniform
/// subsample of size `cap` is kept, in BFS order. The subsample depends
/// only on `(seed, v, metapath index)`.
pub fn sample_instances(
    g: &HeteroGraph,
    v: NodeId,
    metapaths: &[Metapath],
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<InstanceSet> {
    cfg.validate(metapaths)?;
    let t = g.node_type(v);
    if let Some(m) = metapaths.iter().find(|m| m.start() != t) {
        return Err(GraphError::WrongNodeType {
            node: v,
            found: g.type_name(t).to_string(),
            expected: g.type_name(m.start()).to_string(),
        });
    }
    let per_metapath = metapaths
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let all = enumerate_bfs(g, v, m);
            if all.len() <= cfg.cap {
                return all;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, v as u64, k as u64));
            let mut keep = rand::seq::index::sample(&mut rng, all.len(), cfg.cap).into_vec();
            keep.sort_unstable();
            keep.into_iter().map(|i| all[i].clone()).collect()
        })
        .collect();
    Ok(InstanceSet { node: v, per_metapath })
}

/// [`sample_instances`] for many nodes; runs on the current rayon pool and
/// returns results in input order.
pub fn sample_all(
    g: &HeteroGraph,
    nodes: &[NodeId],
    metapaths: &[Metapath],
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<Vec<InstanceSet>> {
    nodes
        .par_iter()
        .map(|&v| sample_instances(g, v, metapaths, cfg, seed))
        .collect()
}
