//! Planted-partition heterogeneous graphs whose metapaths follow different
//! power laws.
//!
//! The target type carries class labels. Each metapath `T,X,T` goes through
//! its own intermediate type `X`; every intermediate node has a home class
//! and a degree drawn from a discrete power law `P(k) ∝ k^-γ`. Its target
//! neighbours come from the home class, except that each slot is replaced
//! by a uniformly random target with probability `noise`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GraphBuilder, GraphError, HeteroGraph, NodeId, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticMetapath {
    /// Intermediate type name.
    pub via: String,
    /// Power-law exponent of the intermediate degree distribution.
    pub gamma: f64,
    /// Number of intermediate nodes.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub target_type: String,
    pub target_count: usize,
    pub classes: usize,
    pub feature_dim: usize,
    pub metapaths: Vec<SyntheticMetapath>,
    /// Probability that an intermediate node links outside its home class.
    pub noise: f64,
    /// Standard deviation of the noise added to target-node features, and
    /// the scale of every class centroid. Keeps mean instance features at
    /// norm ~1 so the origin exponential map does not saturate.
    pub feature_noise: f64,
    /// Scale of the class signal in target-node features.
    pub feature_signal: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    /// Intermediate type whose edges to the target type become the link
    /// relation; also adds the metapath `via,T,via`.
    pub link_via: Option<String>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            target_type: "A".into(),
            target_count: 300,
            classes: 3,
            feature_dim: 16,
            metapaths: vec![
                SyntheticMetapath {
                    via: "P".into(),
                    gamma: 2.1,
                    count: 240,
                },
                SyntheticMetapath {
                    via: "S".into(),
                    gamma: 3.5,
                    count: 240,
                },
            ],
            noise: 0.2,
            feature_noise: 0.25,
            feature_signal: 0.125,
            min_degree: 2,
            max_degree: 60,
            link_via: None,
            seed: 0,
        }
    }
}

const MAX_ATTEMPTS: usize = 100;

fn gaussian_vec(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws `k` distinct targets, each from `home` with probability
/// `1 - noise` and from `all` otherwise.
fn draw_neighbours(rng: &mut impl Rng, k: usize, home: &[NodeId], all: &[NodeId], noise: f64) -> Option<Vec<NodeId>> {
    let mut chosen: Vec<NodeId> = Vec::with_capacity(k);
    let mut tries = 0;
    while chosen.len() < k {
        tries += 1;
        if tries > 50 * k + 100 {
            return None;
        }
        let pool = if rng.gen::<f64>() < noise { all } else { home };
        let v = *pool.choose(rng)?;
        if !chosen.contains(&v) {
            chosen.push(v);
        }
    }
    Some(chosen)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<HeteroGraph> {
    let invalid = |m: &str| Err(GraphError::Invalid(m.to_string()));
    if spec.metapaths.len() < 2 {
        return invalid("need at least two metapaths");
    }
    for (i, a) in spec.metapaths.iter().enumerate() {
        if !(a.gamma.is_finite() && a.gamma > 1.0) {
            return invalid("power-law exponents must exceed 1");
        }
        if spec.metapaths[..i].iter().any(|b| b.gamma == a.gamma) {
            return invalid("metapath exponents must be distinct");
        }
        if spec.metapaths[..i].iter().any(|b| b.via == a.via) || a.via == spec.target_type {
            return invalid("intermediate types must be distinct from each other and the target");
        }
    }
    if spec.classes < 2 || spec.target_count < spec.classes || spec.feature_dim == 0 {
        return invalid("need at least two classes, one target per class and a positive feature dimension");
    }
    if spec.min_degree == 0 || spec.max_degree < spec.min_degree {
        return invalid("degree bounds must satisfy 1 <= min_degree <= max_degree");
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return invalid("noise must lie in [0, 1]");
    }
    if let Some(via) = &spec.link_via {
        if !spec.metapaths.iter().any(|m| &m.via == via) {
            return invalid("link_via must name an intermediate type");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = GraphBuilder::new();
    let t = &spec.target_type;
    b.set_target(t);

    let targets: Vec<NodeId> = (0..spec.target_count).map(|_| b.add_node(t)).collect();
    let mut labels: Vec<usize> = (0..spec.target_count).map(|i| i % spec.classes).collect();
    labels.shuffle(&mut rng);
    let mut by_class = vec![Vec::new(); spec.classes];
    for (&v, &c) in targets.iter().zip(&labels) {
        by_class[c].push(v);
        b.set_label(v, c);
    }

    let centroids: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| gaussian_vec(&mut rng, spec.feature_dim, 1.0))
        .collect();
    for (&v, &c) in targets.iter().zip(&labels) {
        let noise = gaussian_vec(&mut rng, spec.feature_dim, spec.feature_noise);
        let f = centroids[c]
            .iter()
            .zip(noise)
            .map(|(m, e)| spec.feature_signal * m + e)
            .collect();
        b.set_features(v, f);
    }

    for mp in &spec.metapaths {
        let rel = format!("{t}-{}", mp.via);
        let r = b.add_relation(&rel, t, &mp.via);
        b.add_metapath(&format!("{t},{},{t}", mp.via));

        let kmax = spec.max_degree.min(spec.target_count);
        let degrees: Vec<usize> = (spec.min_degree..=kmax).collect();
        if degrees.is_empty() {
            return invalid("max_degree is below min_degree after capping at target_count");
        }
        let weights: Vec<f64> = degrees.iter().map(|&k| (k as f64).powf(-mp.gamma)).collect();
        let dist = WeightedIndex::new(&weights).map_err(|e| GraphError::Invalid(e.to_string()))?;

        let via_centroids: Vec<Vec<f64>> = (0..spec.classes)
            .map(|_| gaussian_vec(&mut rng, spec.feature_dim, spec.feature_noise))
            .collect();
        let mut covered = vec![false; spec.target_count];
        let mut inter_by_class = vec![Vec::new(); spec.classes];
        for i in 0..mp.count {
            let home = i % spec.classes;
            let mut attempts = 0;
            let nbrs = loop {
                attempts += 1;
                if attempts > MAX_ATTEMPTS {
                    return Err(GraphError::InfeasibleDegrees(MAX_ATTEMPTS));
                }
                let k = degrees[dist.sample(&mut rng)];
                if let Some(n) = draw_neighbours(&mut rng, k, &by_class[home], &targets, spec.noise) {
                    break n;
                }
            };
            let x = b.add_node(&mp.via);
            inter_by_class[home].push(x);
            let f = via_centroids[home]
                .iter()
                .zip(gaussian_vec(&mut rng, spec.feature_dim, 0.3 * spec.feature_noise))
                .map(|(m, e)| m + e)
                .collect();
            b.set_features(x, f);
            for v in nbrs {
                covered[v] = true;
                b.add_edge(v, x, r);
            }
        }
        // every target gets at least one instance of every metapath
        for (&v, &c) in targets.iter().zip(&labels) {
            if covered[v] {
                continue;
            }
            let pool = if rng.gen::<f64>() < spec.noise {
                inter_by_class.iter().flatten().copied().collect::<Vec<_>>()
            } else {
                inter_by_class[c].clone()
            };
            if let Some(&x) = pool.choose(&mut rng) {
                b.add_edge(v, x, r);
            }
        }
    }
    if let Some(via) = &spec.link_via {
        b.set_link_relation(&format!("{t}-{via}"));
        b.add_metapath(&format!("{via},{t},{via}"));
    }
    b.build()
}

/// Degree of every node of `type_name` in `g`.
pub fn degrees_of_type(g: &HeteroGraph, type_name: &str) -> Vec<usize> {
    match g.type_id(type_name) {
        Some(t) => g.nodes_of_type(t).iter().map(|&v| g.neighbors(v).len()).collect(),
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Least-squares slope of log frequency against log degree.
    fn loglog_slope(degrees: &[usize]) -> f64 {
        let mut counts = std::collections::BTreeMap::new();
        for &d in degrees {
            *counts.entry(d).or_insert(0usize) += 1;
        }
        let pts: Vec<(f64, f64)> = counts
            .iter()
            .map(|(&k, &c)| ((k as f64).ln(), (c as f64).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn exponents_order_the_slopes() {
        let spec = SyntheticSpec {
            metapaths: vec![
                SyntheticMetapath {
                    via: "P".into(),
                    gamma: 2.1,
                    count: 1500,
                },
                SyntheticMetapath {
                    via: "S".into(),
                    gamma: 3.5,
                    count: 1500,
                },
            ],
            ..SyntheticSpec::default()
        };
        let g = generate_synthetic(&spec).unwrap();
        let shallow = loglog_slope(&degrees_of_type(&g, "P"));
        let steep = loglog_slope(&degrees_of_type(&g, "S"));
        assert!(steep < shallow, "slopes {shallow} vs {steep}");
    }

    #[test]
    fn same_seed_same_graph() {
        let spec = SyntheticSpec::default();
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.edges(), b.edges());
        for v in 0..a.node_count() {
            assert_eq!(a.features(v), b.features(v));
            assert_eq!(a.label(v), b.label(v));
        }
        let other = generate_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.edges(), other.edges());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = SyntheticSpec::default();
        spec.metapaths[1].gamma = spec.metapaths[0].gamma;
        assert!(generate_synthetic(&spec).is_err());
        let mut spec = SyntheticSpec::default();
        spec.metapaths.truncate(1);
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn infeasible_degrees_error() {
        // every degree exceeds the size of a class and noise is zero
        let spec = SyntheticSpec {
            target_count: 30,
            classes: 3,
            min_degree: 20,
            max_degree: 25,
            noise: 0.0,
            ..SyntheticSpec::default()
        };
        assert!(matches!(
            generate_synthetic(&spec),
            Err(GraphError::InfeasibleDegrees(_))
        ));
    }

    #[test]
    fn link_variant_declares_relation_and_reverse_metapath() {
        let spec = SyntheticSpec {
            link_via: Some("P".into()),
            ..SyntheticSpec::default()
        };
        let g = generate_synthetic(&spec).unwrap();
        let r = g.link_relation().unwrap();
        assert_eq!(g.relations()[r].name, "A-P");
        assert_eq!(g.metapaths().last().unwrap().name, "P,A,P");
        let bad = SyntheticSpec {
            link_via: Some("Q".into()),
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }

    #[test]
    fn every_target_covered_by_every_metapath() {
        let g = generate_synthetic(&SyntheticSpec::default()).unwrap();
        for &v in g.target_nodes() {
            for m in g.metapaths() {
                assert!(g.neighbors(v).iter().any(|&w| g.node_type(w) == m.types[1]));
            }
        }
    }
}
