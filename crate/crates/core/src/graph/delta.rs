use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GraphError, HomGraph, Result};

/// Component sizes up to this are evaluated over every quadruple.
pub const EXACT_DELTA_LIMIT: usize = 30;

/// Average four-point δ of a graph's largest connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub metapath: Option<String>,
    pub delta_avg: f64,
    pub delta_max: f64,
    pub quadruples_sampled: usize,
    pub component_size: usize,
    pub exact: bool,
}

impl std::fmt::Display for DeltaReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(m) = &self.metapath {
            writeln!(f, "metapath={m}")?;
        }
        writeln!(f, "delta_avg={}", self.delta_avg)?;
        writeln!(f, "delta_max={}", self.delta_max)?;
        writeln!(f, "quadruples_sampled={}", self.quadruples_sampled)?;
        writeln!(f, "component_size={}", self.component_size)?;
        write!(f, "exact={}", self.exact)
    }
}

fn largest_component(h: &HomGraph) -> Vec<usize> {
    let n = h.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut members = vec![s];
        comp[s] = s;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for &w in &h.adjacency[u] {
                if comp[w] == usize::MAX {
                    comp[w] = s;
                    members.push(w);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}

fn bfs_distances(h: &HomGraph, members: &[usize]) -> Vec<Vec<u32>> {
    let mut local = vec![usize::MAX; h.node_count()];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i;
    }
    members
        .iter()
        .map(|&s| {
            let mut dist = vec![u32::MAX; members.len()];
            dist[local[s]] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                let du = dist[local[u]];
                for &w in &h.adjacency[u] {
                    if dist[local[w]] == u32::MAX {
                        dist[local[w]] = du + 1;
                        q.push_back(w);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Four-point δ: with the three pair sums sorted `S1 ≥ S2 ≥ S3`, `(S1 - S2)/2`.
pub(crate) fn four_point(d: &[Vec<u32>], x: usize, y: usize, z: usize, w: usize) -> f64 {
    let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
    s.sort_unstable_by(|a, b| b.cmp(a));
    (s[0] - s[1]) as f64 / 2.0
}

/// Gromov δ-hyperbolicity of `h`'s largest connected component using
/// shortest-path distances. Components of at most
/// [`EXACT_DELTA_LIMIT`] nodes are enumerated exhaustively; larger ones use
/// `quadruple_budget` uniformly sampled quadruples of distinct nodes.
pub fn delta_hyperbolicity(h: &HomGraph, quadruple_budget: usize, seed: u64) -> Result<DeltaReport> {
    let members = largest_component(h);
    let n = members.len();
    if n < 4 {
        return Err(GraphError::TooFewNodes(n));
    }
    let d = bfs_distances(h, &members);
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    let exact = n <= EXACT_DELTA_LIMIT;
    if exact {
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for e in c + 1..n {
                        let delta = four_point(&d, a, b, c, e);
                        sum += delta;
                        max = max.max(delta);
                        count += 1;
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..quadruple_budget {
            let mut q = [0usize; 4];
            for i in 0..4 {
                q[i] = loop {
                    let c = rng.gen_range(0..n);
                    if !q[..i].contains(&c) {
                        break c;
                    }
                };
            }
            let delta = four_point(&d, q[0], q[1], q[2], q[3]);
            sum += delta;
            max = max.max(delta);
            count += 1;
        }
    }
    Ok(DeltaReport {
        metapath: None,
        delta_avg: if count > 0 { sum / count as f64 } else { 0.0 },
        delta_max: max,
        quadruples_sampled: count,
        component_size: n,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_is_zero_hyperbolic() {
        let h = HomGraph::from_edges(7, (1..7).map(|i| (0, i)));
        let r = delta_hyperbolicity(&h, 100, 0).unwrap();
        assert_eq!(r.delta_avg, 0.0);
        assert!(r.exact);
        assert_eq!(r.quadruples_sampled, 35);
    }

    #[test]
    fn four_cycle() {
        // distances: adjacent 1, opposite 2; pairings give sums 2, 2, 4
        let h = HomGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        let r = delta_hyperbolicity(&h, 100, 0).unwrap();
        assert_eq!(r.quadruples_sampled, 1);
        assert_eq!(r.delta_avg, 1.0);
    }

    #[test]
    fn too_few_nodes() {
        let h = HomGraph::from_edges(5, [(0, 1), (1, 2), (3, 4)]);
        assert!(matches!(
            delta_hyperbolicity(&h, 10, 0),
            Err(GraphError::TooFewNodes(3))
        ));
    }

    #[test]
    fn sampled_mode_on_long_path_is_zero() {
        let h = HomGraph::from_edges(50, (0..49).map(|i| (i, i + 1)));
        let r = delta_hyperbolicity(&h, 500, 3).unwrap();
        assert!(!r.exact);
        assert_eq!(r.quadruples_sampled, 500);
        assert_eq!(r.delta_avg, 0.0);
    }
}
