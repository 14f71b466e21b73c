#![allow(dead_code)]

use std::collections::BTreeSet;

use msgat::graph::{GraphBuilder, HeteroGraph, HomGraph, Metapath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four authors, three papers, three venues; metapaths A,P,A and A,S,A.
/// Every author has at least one co-author through each intermediate type.
pub fn ten_node_fixture() -> HeteroGraph {
    let mut b = GraphBuilder::new();
    b.set_target("A");
    let ap = b.add_relation("A-P", "A", "P");
    let as_ = b.add_relation("A-S", "A", "S");
    let a: Vec<_> = (0..4).map(|_| b.add_node("A")).collect();
    let p: Vec<_> = (0..3).map(|_| b.add_node("P")).collect();
    let s: Vec<_> = (0..3).map(|_| b.add_node("S")).collect();
    for (ai, pi) in [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (0, 2)] {
        b.add_edge(a[ai], p[pi], ap);
    }
    for (ai, si) in [(0, 0), (2, 0), (1, 1), (3, 1), (0, 2), (1, 2), (3, 2)] {
        b.add_edge(a[ai], s[si], as_);
    }
    for v in 0..10 {
        let x = v as f64;
        b.set_features(
            v,
            vec![
                0.3 * (x * 0.7).sin(),
                0.2 * (x * 1.3).cos(),
                0.1 * x - 0.4,
                0.25 * (x * 0.4).sin(),
            ],
        );
    }
    for (i, &v) in a.iter().enumerate() {
        b.set_label(v, i % 2);
    }
    b.add_metapath("A,P,A");
    b.add_metapath("A,S,A");
    b.build().unwrap()
}

/// Random graph over types A, B, C with relations A-B, B-C, A-C and A-A.
pub fn random_hetero(seed: u64, max_nodes: usize) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(6..=max_nodes);
    let mut b = GraphBuilder::new();
    b.set_target("A");
    let rel = [
        (b.add_relation("A-B", "A", "B"), 0, 1),
        (b.add_relation("B-C", "B", "C"), 1, 2),
        (b.add_relation("A-C", "A", "C"), 0, 2),
        (b.add_relation("A-A", "A", "A"), 0, 0),
    ];
    let names = ["A", "B", "C"];
    let types: Vec<usize> = (0..n).map(|i| if i < 3 { i } else { rng.gen_range(0..3) }).collect();
    for &t in &types {
        b.add_node(names[t]);
    }
    let density = rng.gen_range(0.05..0.3);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() >= density {
                continue;
            }
            for &(r, s, d) in &rel {
                if (types[u], types[v]) == (s, d) {
                    b.add_edge(u, v, r);
                } else if (types[v], types[u]) == (s, d) {
                    b.add_edge(v, u, r);
                }
            }
        }
    }
    for v in 0..n {
        b.set_features(v, vec![v as f64]);
    }
    b.build().unwrap()
}

/// Every tuple of distinct nodes with the metapath's types in which
/// consecutive nodes are adjacent, found by trying all assignments.
pub fn brute_force_instances(g: &HeteroGraph, start: usize, m: &Metapath) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let candidates: Vec<Vec<usize>> = m.types.iter().map(|&t| g.nodes_of_type(t).to_vec()).collect();
    let mut idx = vec![0usize; m.len()];
    if candidates.iter().any(Vec::is_empty) || g.node_type(start) != m.start() {
        return out;
    }
    loop {
        let tuple: Vec<usize> = idx.iter().zip(&candidates).map(|(&i, c)| c[i]).collect();
        let distinct = tuple.iter().collect::<BTreeSet<_>>().len() == tuple.len();
        if tuple[0] == start && distinct && tuple.windows(2).all(|w| g.has_edge(w[0], w[1])) {
            out.insert(tuple);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < candidates[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn floyd_warshall(h: &HomGraph) -> Vec<Vec<f64>> {
    let n = h.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v) in h.edges() {
        d[u][v] = 1.0;
        d[v][u] = 1.0;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Average and maximum over all 4-subsets of `max(S) - mid(S)` halved.
pub fn exhaustive_delta(d: &[Vec<f64>]) -> (f64, f64) {
    let n = d.len();
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0.0);
    for x in 0..n {
        for y in x + 1..n {
            for z in y + 1..n {
                for w in z + 1..n {
                    let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
                    s.sort_by(|a, b| b.total_cmp(a));
                    let delta = (s[0] - s[1]) / 2.0;
                    sum += delta;
                    max = max.max(delta);
                    count += 1.0;
                }
            }
        }
    }
    (sum / count, max)
}

pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> HomGraph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..extra {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    HomGraph::from_edges(n, edges)
}

pub fn oracle_f1(pred: &[usize], truth: &[usize]) -> (f64, f64) {
    let classes: BTreeSet<usize> = pred.iter().chain(truth).copied().collect();
    let mut f1s = Vec::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0.0, 0.0, 0.0);
    for &c in &classes {
        let tp = pred.iter().zip(truth).filter(|(&p, &t)| p == c && t == c).count() as f64;
        let predicted = pred.iter().filter(|&&p| p == c).count() as f64;
        let actual = truth.iter().filter(|&&t| t == c).count() as f64;
        tp_all += tp;
        fp_all += predicted - tp;
        fn_all += actual - tp;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        f1s.push(if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        });
    }
    let micro = 2.0 * tp_all / (2.0 * tp_all + fp_all + fn_all);
    (f1s.iter().sum::<f64>() / f1s.len() as f64, micro)
}

pub fn oracle_nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ca: BTreeSet<usize> = a.iter().copied().collect();
    let cb: BTreeSet<usize> = b.iter().copied().collect();
    let p = |f: &dyn Fn(usize) -> bool| (0..a.len()).filter(|&i| f(i)).count() as f64 / n;
    let h = |labels: &BTreeSet<usize>, xs: &[usize]| -> f64 {
        labels
            .iter()
            .map(|&x| {
                let px = p(&|i| xs[i] == x);
                -px * px.ln()
            })
            .sum()
    };
    let (ha, hb) = (h(&ca, a), h(&cb, b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for &x in &ca {
        for &y in &cb {
            let pxy = p(&|i| a[i] == x && b[i] == y);
            if pxy > 0.0 {
                mi += pxy * (pxy / (p(&|i| a[i] == x) * p(&|i| b[i] == y))).ln();
            }
        }
    }
    (mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0)
}

/// Hubert–Arabie ARI from the four pair-agreement counts.
pub fn oracle_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut ss, mut sd, mut ds, mut dd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0.0 {
        return 1.0;
    }
    2.0 * (ss * dd - sd * ds) / den
}

pub fn oracle_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
