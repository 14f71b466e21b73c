use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, TrainError};
use crate::graph::{HeteroGraph, NodeId, RelationId};

/// Node ids of each partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

/// Per-class shuffle; `train_fraction` of each class goes to training and
/// the remainder is halved into validation and test.
pub fn stratified_split(nodes: &[NodeId], labels: &[usize], train_fraction: f64, seed: u64) -> Result<Split> {
    if nodes.len() != labels.len() {
        return Err(TrainError::Data("nodes and labels differ in length".into()));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (&v, &y) in nodes.iter().zip(labels) {
        by_class[y].push(v);
    }
    if by_class.iter().filter(|c| !c.is_empty()).count() < 2 {
        return Err(TrainError::Data("need at least two classes to split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for mut members in by_class {
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n);
        let n_val = (n - n_train) / 2;
        split.train.extend_from_slice(&members[..n_train]);
        split.val.extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkSample {
    pub u: NodeId,
    pub v: NodeId,
    /// 1 for an edge, 0 for a non-edge.
    pub y: u8,
}

/// Uniform non-edges of `relation`, distinct within the call.
pub fn negative_sample(g: &HeteroGraph, relation: RelationId, count: usize, seed: u64) -> Result<Vec<LinkSample>> {
    let rel = g
        .relations()
        .get(relation)
        .ok_or_else(|| TrainError::Data(format!("relation {relation} does not exist")))?;
    let us = g.nodes_of_type(rel.src);
    let vs = g.nodes_of_type(rel.dst);
    let symmetric = rel.src == rel.dst;
    let existing: HashSet<(NodeId, NodeId)> = g
        .edges_of(relation)
        .flat_map(|e| [(e.src, e.dst), (e.dst, e.src)])
        .collect();
    let pairs = if symmetric {
        us.len() * us.len().saturating_sub(1) / 2
    } else {
        us.len() * vs.len()
    };
    let edges = g.edges_of(relation).count();
    if pairs < edges + count {
        return Err(TrainError::Data(format!(
            "relation {} has {} non-edges, {count} requested",
            rel.name,
            pairs.saturating_sub(edges)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let budget = 100 * count + 1000;
    for _ in 0..budget {
        if out.len() == count {
            break;
        }
        let mut u = us[rng.gen_range(0..us.len())];
        let mut v = vs[rng.gen_range(0..vs.len())];
        if symmetric {
            if u == v {
                continue;
            }
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
        }
        if existing.contains(&(u, v)) || !seen.insert((u, v)) {
            continue;
        }
        out.push(LinkSample { u, v, y: 0 });
    }
    if out.len() < count {
        return Err(TrainError::Data(format!(
            "found only {} of {count} non-edges of {} after {budget} draws",
            out.len(),
            rel.name
        )));
    }
    Ok(out)
}

/// Positive edges of the link relation split into train/val/test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSplit {
    pub relation: RelationId,
    pub train: Vec<LinkSample>,
    pub val: Vec<LinkSample>,
    pub test: Vec<LinkSample>,
}

impl LinkSplit {
    pub fn new(g: &HeteroGraph, relation: RelationId, train_fraction: f64, seed: u64) -> Result<Self> {
        let mut pos: Vec<LinkSample> = g
            .edges_of(relation)
            .map(|e| LinkSample {
                u: e.src,
                v: e.dst,
                y: 1,
            })
            .collect();
        if pos.len() < 3 {
            return Err(TrainError::Data("link relation needs at least three edges".into()));
        }
        pos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = pos.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 2);
        let n_val = ((n - n_train) / 2).max(1);
        let test = pos.split_off(n_train + n_val);
        let val = pos.split_off(n_train);
        Ok(Self {
            relation,
            train: pos,
            val,
            test,
        })
    }

    /// Edges hidden from the training graph.
    pub fn held_out(&self) -> Vec<(NodeId, NodeId)> {
        self.val.iter().chain(&self.test).map(|s| (s.u, s.v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn bipartite(n_u: usize, n_v: usize, complete: bool) -> HeteroGraph {
        let mut b = GraphBuilder::new();
        b.set_target("U");
        let r = b.add_relation("U-V", "U", "V");
        let us: Vec<_> = (0..n_u).map(|_| b.add_node("U")).collect();
        let vs: Vec<_> = (0..n_v).map(|_| b.add_node("V")).collect();
        if complete {
            for &u in &us {
                for &v in &vs {
                    b.add_edge(u, v, r);
                }
            }
        }
        for v in 0..n_u + n_v {
            b.set_features(v, vec![0.0]);
        }
        b.build().unwrap()
    }

    #[test]
    fn complete_bipartite_has_no_negatives() {
        let g = bipartite(3, 4, true);
        assert!(negative_sample(&g, 0, 1, 0).is_err());
    }

    #[test]
    fn empty_relation_allows_every_pair() {
        let g = bipartite(3, 4, false);
        let s = negative_sample(&g, 0, 12, 0).unwrap();
        let distinct: HashSet<_> = s.iter().map(|x| (x.u, x.v)).collect();
        assert_eq!(distinct.len(), 12);
        assert!(s.iter().all(|x| x.y == 0 && x.u < 3 && x.v >= 3));
        assert_eq!(
            negative_sample(&g, 0, 5, 9).unwrap(),
            negative_sample(&g, 0, 5, 9).unwrap()
        );
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let nodes: Vec<NodeId> = (0..40).collect();
        let labels: Vec<usize> = (0..40).map(|i| if i < 30 { 0 } else { 1 }).collect();
        let s = stratified_split(&nodes, &labels, 0.2, 1).unwrap();
        assert_eq!(s.train.iter().filter(|&&v| v < 30).count(), 6);
        assert_eq!(s.train.iter().filter(|&&v| v >= 30).count(), 2);
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 40);
        let all: HashSet<_> = s.train.iter().chain(&s.val).chain(&s.test).collect();
        assert_eq!(all.len(), 40);
        assert!(stratified_split(&nodes, &vec![0; 40], 0.5, 0).is_err());
    }
}
