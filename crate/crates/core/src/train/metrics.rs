//! Classification, clustering and ranking metrics plus the two readouts
//! (a regularised linear probe and k-means) applied to frozen embeddings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Result, TrainError};
use crate::autodiff::{softmax_in_place, Tensor};
use crate::graph::derive_seed;

/// `(macro_f1, micro_f1)` over the classes present in either labelling.
pub fn f1_scores(pred: &[usize], truth: &[usize]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(TrainError::Data("f1 needs equal-length, non-empty labellings".into()));
    }
    let k = pred.iter().chain(truth).copied().max().unwrap() + 1;
    let (mut tp, mut fp, mut fn_) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0;
    for c in 0..k {
        if tp[c] + fp[c] + fn_[c] == 0 {
            continue;
        }
        present += 1;
        sum += 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fn_[c]) as f64;
    }
    let micro = tp.iter().sum::<usize>() as f64 / pred.len() as f64;
    Ok((sum / present as f64, micro))
}

fn contingency(a: &[usize], b: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
    let ka = a.iter().copied().max().map_or(0, |m| m + 1);
    let kb = b.iter().copied().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let rows = table.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    (table, rows, cols)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalised by the arithmetic mean of the entropies.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(TrainError::Data("nmi needs equal-length, non-empty labellings".into()));
    }
    let n = a.len() as f64;
    let (table, rows, cols) = contingency(a, b);
    let (ha, hb) = (entropy(&rows, n), entropy(&cols, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

fn pairs(x: usize) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(TrainError::Data("ari needs equal-length, non-empty labellings".into()));
    }
    let (table, rows, cols) = contingency(a, b);
    let index: f64 = table.iter().flatten().map(|&x| pairs(x)).sum();
    let sa: f64 = rows.iter().map(|&x| pairs(x)).sum();
    let sb: f64 = cols.iter().map(|&x| pairs(x)).sum();
    let expected = sa * sb / pairs(a.len()).max(1.0);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Area under the ROC curve from the Mann-Whitney rank statistic, with
/// tied scores sharing their average rank.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(TrainError::Data("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(TrainError::Data(
            "roc auc needs both positive and negative labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// F1 of the positive class when `score >= threshold` predicts positive.
pub fn binary_f1(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(TrainError::Data(
            "binary f1 needs equal-length, non-empty inputs".into(),
        ));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Tensor,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(x: &Tensor, k: usize, seed: u64) -> KMeans {
    let n = x.rows;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![x.row_slice(rng.gen_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row_slice(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if t < d {
                    pick = i;
                    break;
                }
                t -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(x.row_slice(next).to_vec());
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(x.row_slice(i), centers.last().unwrap()));
        }
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..300 {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(x.row_slice(i), &centers[a]).total_cmp(&sq_dist(x.row_slice(i), &centers[b])))
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; x.cols]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(x.row_slice(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seed an empty cluster at the point farthest from its centre
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(x.row_slice(a), &centers[assign[a]])
                            .total_cmp(&sq_dist(x.row_slice(b), &centers[assign[b]]))
                    })
                    .unwrap();
                centers[c] = x.row_slice(far).to_vec();
            }
        }
    }
    let inertia = (0..n).map(|i| sq_dist(x.row_slice(i), &centers[assign[i]])).sum();
    KMeans {
        assignments: assign,
        centroids: Tensor::from_rows(&centers),
        inertia,
    }
}

/// Lloyd's algorithm with k-means++ seeding; the lowest-inertia restart wins.
pub fn kmeans(x: &Tensor, k: usize, restarts: usize, seed: u64) -> Result<KMeans> {
    if k == 0 || x.rows < k {
        return Err(TrainError::Data(format!(
            "cannot form {k} clusters from {} points",
            x.rows
        )));
    }
    let runs: Vec<KMeans> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| lloyd(x, k, derive_seed(seed, r, 0)))
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .unwrap())
}

/// Multinomial logistic regression on standardised inputs with an L2
/// penalty, fitted by full-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `classes × (dim + 1)`, bias in the last column.
    weights: Tensor,
}

impl LinearProbe {
    pub const L2: f64 = 1e-3;
    const STEPS: usize = 500;
    const STEP_SIZE: f64 = 0.5;

    pub fn fit(x: &Tensor, y: &[usize], classes: usize) -> Result<Self> {
        if x.rows != y.len() || x.rows == 0 {
            return Err(TrainError::Data("probe needs one label per row".into()));
        }
        let distinct: std::collections::BTreeSet<_> = y.iter().collect();
        if distinct.len() < 2 {
            return Err(TrainError::Data("probe training split has a single class".into()));
        }
        let d = x.cols;
        let n = x.rows as f64;
        let mean: Vec<f64> = (0..d)
            .map(|j| (0..x.rows).map(|i| x.get(i, j)).sum::<f64>() / n)
            .collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let var = (0..x.rows).map(|i| (x.get(i, j) - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut probe = Self {
            mean,
            scale,
            weights: Tensor::zeros(classes, d + 1),
        };
        let xs: Vec<Vec<f64>> = (0..x.rows).map(|i| probe.standardise(x.row_slice(i))).collect();
        for _ in 0..Self::STEPS {
            let mut grad = Tensor::zeros(classes, d + 1);
            for (row, &label) in xs.iter().zip(y) {
                let mut p = probe.logits(row);
                softmax_in_place(&mut p);
                p[label] -= 1.0;
                for c in 0..classes {
                    let g = &mut grad.data[c * (d + 1)..(c + 1) * (d + 1)];
                    for j in 0..d {
                        g[j] += p[c] * row[j];
                    }
                    g[d] += p[c];
                }
            }
            for (w, g) in probe.weights.data.iter_mut().zip(&grad.data) {
                *w -= Self::STEP_SIZE * (g / n + Self::L2 * *w);
            }
        }
        Ok(probe)
    }

    fn standardise(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    fn logits(&self, row: &[f64]) -> Vec<f64> {
        let d = row.len();
        (0..self.weights.rows)
            .map(|c| {
                let w = self.weights.row_slice(c);
                w[..d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + w[d]
            })
            .collect()
    }

    pub fn predict(&self, x: &Tensor) -> Vec<usize> {
        (0..x.rows)
            .map(|i| {
                let l = self.logits(&self.standardise(x.row_slice(i)));
                argmax(&l)
            })
            .collect()
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0, 2];
        assert_eq!(f1_scores(&y, &y).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn relabelled_clustering_is_perfect() {
        let a = [0, 0, 1, 1, 2, 2];
        let b = [2, 2, 0, 0, 1, 1];
        assert!((nmi(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!((ari(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ordered_scores_give_unit_auc() {
        let s = [0.1, 0.2, 0.3, 0.8, 0.9];
        let l = [false, false, false, true, true];
        assert_eq!(roc_auc(&s, &l).unwrap(), 1.0);
        assert!(roc_auc(&s, &[true; 5]).is_err());
        assert_eq!(binary_f1(&s, &l, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn tied_scores_count_half() {
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
    }

    #[test]
    fn kmeans_separates_blobs() {
        let mut rows = Vec::new();
        for c in 0..3 {
            for i in 0..10 {
                rows.push(vec![10.0 * c as f64 + 0.01 * i as f64, -5.0 * c as f64]);
            }
        }
        let x = Tensor::from_rows(&rows);
        let km = kmeans(&x, 3, 5, 0).unwrap();
        let truth: Vec<usize> = (0..30).map(|i| i / 10).collect();
        assert!((ari(&km.assignments, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(km, kmeans(&x, 3, 5, 0).unwrap());
    }

    #[test]
    fn probe_fits_separable_data() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 } + 0.01 * i as f64, 0.3])
            .collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let x = Tensor::from_rows(&rows);
        let probe = LinearProbe::fit(&x, &y, 2).unwrap();
        assert_eq!(probe.predict(&x), y);
        assert!(LinearProbe::fit(&x, &[0; 40], 2).is_err());
    }
}
