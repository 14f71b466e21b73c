use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::data::{negative_sample, stratified_split, LinkSample, LinkSplit, Split};
use super::loss::{link_loss, node_loss};
use super::metrics::{argmax, ari, binary_f1, f1_scores, kmeans, nmi, roc_auc, LinearProbe};
use super::optim::Adam;
use super::{streams, Result, Task, TrainConfig, TrainError};
use crate::autodiff::{sigmoid, Tape, Tensor, Var};
use crate::graph::{derive_seed, HeteroGraph, NodeId, SamplerConfig};
use crate::model::{forward, prepare_batch, ForwardOutput, ForwardTrace, ModelConfig, Params, PreparedBatch};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub epoch: usize,
    pub split: String,
    pub metric: String,
    pub value: f64,
}

/// Line-oriented log of per-epoch metrics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricHistory {
    pub records: Vec<MetricRecord>,
}

impl MetricHistory {
    pub fn push(&mut self, epoch: usize, split: &str, metric: &str, value: f64) {
        self.records.push(MetricRecord {
            epoch,
            split: split.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    /// `(epoch, value)` pairs of one series.
    pub fn series(&self, split: &str, metric: &str) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter(|r| r.split == split && r.metric == metric)
            .map(|r| (r.epoch, r.value))
            .collect()
    }

    /// `epoch \t split \t metric \t value` per line. Values use Rust's
    /// shortest round-trip formatting.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", r.epoch, r.split, r.metric, r.value);
        }
        out
    }
}

/// Final node embeddings `z_v` keyed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub nodes: Vec<NodeId>,
    pub z: Tensor,
    position: HashMap<NodeId, usize>,
}

impl Embeddings {
    pub fn new(nodes: Vec<NodeId>, z: Tensor) -> Self {
        assert_eq!(nodes.len(), z.rows, "one embedding row per node");
        let position = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Self { nodes, z, position }
    }

    /// Collects every group of a trace. Groups of different types must
    /// share an embedding width.
    pub fn from_trace(trace: &ForwardTrace) -> Self {
        let mut nodes = Vec::new();
        let mut rows = Vec::new();
        for g in &trace.groups {
            for (r, &v) in g.nodes.iter().enumerate() {
                nodes.push(v);
                rows.push(g.z.row_slice(r).to_vec());
            }
        }
        Self::new(nodes, Tensor::from_rows(&rows))
    }

    pub fn get(&self, v: NodeId) -> Option<&[f64]> {
        self.position.get(&v).map(|&i| self.z.row_slice(i))
    }

    /// Rows for `nodes`, in order.
    pub fn select(&self, nodes: &[NodeId]) -> Result<Tensor> {
        let rows = nodes
            .iter()
            .map(|&v| {
                self.get(v)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| TrainError::Data(format!("no embedding for node {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tensor::from_rows(&rows))
    }

    /// `node_id \t z_1 \t ... \t z_d` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.nodes.iter().enumerate() {
            let _ = write!(out, "{v}");
            for x in self.z.row_slice(i) {
                let _ = write!(out, "\t{x}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMetrics {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub nmi: f64,
    pub ari: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub roc_auc: f64,
    pub f1: f64,
}

fn labels_of(g: &HeteroGraph, nodes: &[NodeId]) -> Result<Vec<usize>> {
    nodes
        .iter()
        .map(|&v| {
            g.label(v)
                .ok_or_else(|| TrainError::Data(format!("node {v} has no label")))
        })
        .collect()
}

/// Linear probe fitted on `split.train` and scored on `split.test`, plus
/// k-means with `k = classes` over every split node.
pub fn evaluate_node(
    emb: &Embeddings,
    g: &HeteroGraph,
    split: &Split,
    kmeans_restarts: usize,
    seed: u64,
) -> Result<NodeMetrics> {
    let classes = g.num_classes();
    let x_train = emb.select(&split.train)?;
    let probe = LinearProbe::fit(&x_train, &labels_of(g, &split.train)?, classes)?;
    let pred = probe.predict(&emb.select(&split.test)?);
    let (macro_f1, micro_f1) = f1_scores(&pred, &labels_of(g, &split.test)?)?;

    let all: Vec<NodeId> = split
        .train
        .iter()
        .chain(&split.val)
        .chain(&split.test)
        .copied()
        .collect();
    let truth = labels_of(g, &all)?;
    let km = kmeans(&emb.select(&all)?, classes, kmeans_restarts, seed)?;
    Ok(NodeMetrics {
        macro_f1,
        micro_f1,
        nmi: nmi(&km.assignments, &truth)?,
        ari: ari(&km.assignments, &truth)?,
    })
}

/// ROC-AUC and F1 at 0.5 of `sigmoid(z_u · z_v)`.
pub fn evaluate_link(emb: &Embeddings, samples: &[LinkSample]) -> Result<LinkMetrics> {
    let mut scores = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        let (zu, zv) = match (emb.get(s.u), emb.get(s.v)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(TrainError::Data(format!("no embedding for pair ({}, {})", s.u, s.v))),
        };
        scores.push(sigmoid(zu.iter().zip(zv).map(|(a, b)| a * b).sum()));
        labels.push(s.y == 1);
    }
    Ok(LinkMetrics {
        roc_auc: roc_auc(&scores, &labels)?,
        f1: binary_f1(&scores, &labels, 0.5)?,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the lowest validation loss.
    pub params: Params<Tensor>,
    pub history: MetricHistory,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub embeddings: Embeddings,
    pub curvatures: Vec<f64>,
    /// Final metrics, printed as a `key=value` block.
    pub results: BTreeMap<String, f64>,
}

impl TrainOutcome {
    pub fn results_block(&self) -> String {
        self.results.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

pub fn train(
    g: &HeteroGraph,
    model: &ModelConfig,
    sampler: &SamplerConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_observer(g, model, sampler, config, |_, _, _| {})
}

/// Task-specific pieces of the training loop.
enum Objective {
    Node {
        split: Split,
        train_labels: Vec<usize>,
        val_labels: Vec<usize>,
    },
    Link {
        split: LinkSplit,
        val: Vec<LinkSample>,
        test: Vec<LinkSample>,
    },
}

fn pair_loss<'t>(out: &ForwardOutput<'t>, batch: &PreparedBatch, samples: &[LinkSample]) -> Result<Var<'t>> {
    let us: Vec<NodeId> = samples.iter().map(|s| s.u).collect();
    let vs: Vec<NodeId> = samples.iter().map(|s| s.v).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.y as f64).collect();
    link_loss(&out.embeddings(batch, &us)?, &out.embeddings(batch, &vs)?, &y)
}

/// Split, negatives and instance batch shared by training and evaluation.
struct Setup {
    objective: Objective,
    batch: PreparedBatch,
    with_head: bool,
}

fn setup(g: &HeteroGraph, model: &ModelConfig, sampler: &SamplerConfig, config: &TrainConfig) -> Result<Setup> {
    config.validate()?;
    model.validate()?;
    let seed = config.seed;
    let (objective, graph_for_sampling, nodes, with_head) = match config.task {
        Task::NodeClassification | Task::NodeClustering => {
            let labeled = g.labeled_nodes();
            if labeled.is_empty() {
                return Err(TrainError::Data("dataset has no labelled nodes".into()));
            }
            if model.output_dim != g.num_classes() {
                return Err(TrainError::Config(format!(
                    "output_dim is {} but the dataset has {} classes",
                    model.output_dim,
                    g.num_classes()
                )));
            }
            let labels = labels_of(g, &labeled)?;
            let split = stratified_split(
                &labeled,
                &labels,
                config.train_fraction,
                streams::seed(seed, streams::SPLIT),
            )?;
            let obj = Objective::Node {
                train_labels: labels_of(g, &split.train)?,
                val_labels: labels_of(g, &split.val)?,
                split,
            };
            (obj, None, labeled, true)
        }
        Task::LinkPrediction => {
            let r = g
                .link_relation()
                .ok_or_else(|| TrainError::Data("dataset declares no link relation".into()))?;
            let split = LinkSplit::new(g, r, config.train_fraction, streams::seed(seed, streams::SPLIT))?;
            let neg_seed = streams::seed(seed, streams::NEGATIVES);
            let mut val = split.val.clone();
            val.extend(negative_sample(
                g,
                r,
                split.val.len(),
                derive_seed(neg_seed, u64::MAX, 0),
            )?);
            let mut test = split.test.clone();
            test.extend(negative_sample(
                g,
                r,
                split.test.len(),
                derive_seed(neg_seed, u64::MAX, 1),
            )?);
            let rel = &g.relations()[r];
            let mut nodes = g.nodes_of_type(rel.src).to_vec();
            if rel.dst != rel.src {
                nodes.extend_from_slice(g.nodes_of_type(rel.dst));
            }
            let train_graph = g.without_edges(&split.held_out());
            (Objective::Link { split, val, test }, Some(train_graph), nodes, false)
        }
    };
    let sample_graph = graph_for_sampling.as_ref().unwrap_or(g);
    let batch = prepare_batch(
        sample_graph,
        &nodes,
        g.metapaths(),
        model,
        sampler,
        streams::seed(seed, streams::SAMPLER),
    )?;
    log::info!(
        "prepared {} nodes with {} instances",
        batch.node_count(),
        batch.instance_count()
    );
    Ok(Setup {
        objective,
        batch,
        with_head,
    })
}

/// Embeddings and task metrics of a fixed parameter set.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub embeddings: Embeddings,
    pub curvatures: Vec<f64>,
    pub results: BTreeMap<String, f64>,
}

fn evaluate_setup(
    g: &HeteroGraph,
    model: &ModelConfig,
    config: &TrainConfig,
    setup: &Setup,
    params: &Params<Tensor>,
) -> Result<Evaluation> {
    let tape = Tape::new();
    let vars = params.map(|t| tape.leaf(t.clone()));
    let out = forward(&vars, model, &setup.batch)?;
    let trace = ForwardTrace::capture(&out, &setup.batch, model);
    let embeddings = Embeddings::from_trace(&trace);
    let eval_seed = streams::seed(config.seed, streams::EVAL);

    let mut results = BTreeMap::new();
    match &setup.objective {
        Objective::Node { split, .. } => {
            let m = evaluate_node(&embeddings, g, split, config.kmeans_restarts, eval_seed)?;
            results.insert("macro_f1".into(), m.macro_f1);
            results.insert("micro_f1".into(), m.micro_f1);
            results.insert("nmi".into(), m.nmi);
            results.insert("ari".into(), m.ari);
            let pred: Vec<usize> = split
                .test
                .iter()
                .map(|&v| argmax(trace.probabilities(v).expect("test node in batch")))
                .collect();
            let (hm, hu) = f1_scores(&pred, &labels_of(g, &split.test)?)?;
            results.insert("head_macro_f1".into(), hm);
            results.insert("head_micro_f1".into(), hu);
        }
        Objective::Link { test, .. } => {
            let m = evaluate_link(&embeddings, test)?;
            results.insert("roc_auc".into(), m.roc_auc);
            results.insert("f1".into(), m.f1);
        }
    }
    for (k, c) in trace.curvatures.iter().enumerate() {
        results.insert(format!("curvature[{}]", setup.batch.metapath_names[k]), *c);
    }
    Ok(Evaluation {
        embeddings,
        curvatures: trace.curvatures,
        results,
    })
}

/// Scores `params` on the test split that [`train`] would hold out under
/// the same configuration and seed. An output head is ignored for link
/// prediction.
pub fn evaluate(
    g: &HeteroGraph,
    model: &ModelConfig,
    sampler: &SamplerConfig,
    config: &TrainConfig,
    params: &Params<Tensor>,
) -> Result<Evaluation> {
    let setup = setup(g, model, sampler, config)?;
    let mut params = params.clone();
    if !setup.with_head {
        params.w_o = None;
    }
    let expected = Params::init(model, g.metapaths().len(), setup.with_head, 0);
    let shapes = |p: &Params<Tensor>| p.iter().map(|t| (t.rows, t.cols)).collect::<Vec<_>>();
    if shapes(&expected) != shapes(&params) {
        return Err(TrainError::Config(
            "parameter shapes do not match the model config, task and dataset".into(),
        ));
    }
    evaluate_setup(g, model, config, &setup, &params)
}

/// [`train`] that hands every epoch's forward pass to `observe` before
/// the parameter update.
pub fn train_with_observer(
    g: &HeteroGraph,
    model: &ModelConfig,
    sampler: &SamplerConfig,
    config: &TrainConfig,
    mut observe: impl FnMut(usize, &ForwardOutput<'_>, &PreparedBatch),
) -> Result<TrainOutcome> {
    let setup = setup(g, model, sampler, config)?;
    let Setup {
        objective,
        batch,
        with_head,
    } = &setup;
    let seed = config.seed;
    let mut params = Params::init(
        model,
        g.metapaths().len(),
        *with_head,
        streams::seed(seed, streams::PARAMS),
    );
    let mut adam = Adam::new(config.adam(), &params);
    let mut history = MetricHistory::default();
    let mut best = (f64::INFINITY, 0usize, params.clone());
    let mut epochs_run = 0;
    let names = &batch.metapath_names;

    for epoch in 1..=config.epochs {
        epochs_run = epoch;
        let tape = Tape::new();
        let vars = params.map(|t| tape.leaf(t.clone()));
        let out = forward(&vars, model, batch)?;
        observe(epoch, &out, batch);

        let (loss, val_loss, val_metric) = match objective {
            Objective::Node {
                split,
                train_labels,
                val_labels,
            } => {
                let loss = node_loss(&out.probabilities(batch, &split.train)?, train_labels)?;
                let (vl, acc) = if split.val.is_empty() {
                    (f64::NAN, None)
                } else {
                    let pv = out.probabilities(batch, &split.val)?;
                    let vl = node_loss(&pv, val_labels)?.item();
                    let pv = pv.value();
                    let hits = (0..pv.rows)
                        .filter(|&i| argmax(pv.row_slice(i)) == val_labels[i])
                        .count();
                    (vl, Some(hits as f64 / pv.rows as f64))
                };
                (loss, vl, acc)
            }
            Objective::Link { split, val, .. } => {
                let negs = negative_sample(
                    g,
                    split.relation,
                    split.train.len(),
                    derive_seed(streams::seed(seed, streams::NEGATIVES), epoch as u64, 0),
                )?;
                let mut samples = split.train.clone();
                samples.extend(negs);
                let loss = pair_loss(&out, batch, &samples)?;
                let vl = pair_loss(&out, batch, val)?.item();
                (loss, vl, None)
            }
        };
        let lv = loss.item();
        if !lv.is_finite() {
            return Err(TrainError::Divergence { epoch, loss: lv });
        }
        history.push(epoch, "train", "loss", lv);
        if !val_loss.is_nan() {
            history.push(epoch, "val", "loss", val_loss);
            if let Some(acc) = val_metric {
                history.push(epoch, "val", "accuracy", acc);
            }
        }
        for (k, c) in out.curvatures.iter().enumerate() {
            history.push(epoch, "train", &format!("curvature[{}]", names[k]), c.item());
        }

        let tracked = if val_loss.is_nan() { lv } else { val_loss };
        if tracked < best.0 {
            best = (tracked, epoch, params.clone());
        }
        let grads = tape.backward(&loss)?;
        let g_params = vars.map(|v| grads.wrt(v));
        if g_params.iter().any(|t| !t.is_finite()) {
            return Err(TrainError::Divergence { epoch, loss: f64::NAN });
        }
        adam.step(&mut params, &g_params);
        if config.patience > 0 && epoch - best.1 >= config.patience {
            log::info!("early stop at epoch {epoch}; best epoch {}", best.1);
            break;
        }
    }

    let (_, best_epoch, best_params) = best;
    let Evaluation {
        embeddings,
        curvatures,
        mut results,
    } = evaluate_setup(g, model, config, &setup, &best_params)?;
    results.insert("best_epoch".to_string(), best_epoch as f64);
    results.insert("epochs_run".to_string(), epochs_run as f64);
    Ok(TrainOutcome {
        curvatures,
        params: best_params,
        history,
        best_epoch,
        epochs_run,
        embeddings,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticSpec};

    fn small() -> (HeteroGraph, ModelConfig, SamplerConfig, TrainConfig) {
        let spec = SyntheticSpec {
            target_count: 60,
            feature_dim: 6,
            ..SyntheticSpec::default()
        };
        let g = generate_synthetic(&spec).unwrap();
        let model = ModelConfig {
            input_dim: 6,
            hidden_dim: 4,
            semantic_dim: 4,
            output_dim: 3,
            heads: 2,
            ..ModelConfig::default()
        };
        let sampler = SamplerConfig { max_len: 4, cap: 8 };
        let tc = TrainConfig {
            epochs: 15,
            patience: 0,
            kmeans_restarts: 3,
            ..TrainConfig::default()
        };
        (g, model, sampler, tc)
    }

    #[test]
    fn loss_decreases_and_history_is_reproducible() {
        let (g, m, s, tc) = small();
        let a = train(&g, &m, &s, &tc).unwrap();
        let b = train(&g, &m, &s, &tc).unwrap();
        assert_eq!(a.history.to_tsv(), b.history.to_tsv());
        let losses = a.history.series("train", "loss");
        assert_eq!(losses.len(), 15);
        assert!(losses.last().unwrap().1 < losses[0].1);
        assert!(a.results.contains_key("macro_f1"));
        let again = evaluate(&g, &m, &s, &tc, &a.params).unwrap();
        for (k, v) in &again.results {
            assert_eq!(a.results[k], *v, "{k}");
        }
    }

    #[test]
    fn zero_learning_rate_keeps_initial_parameters() {
        let (g, m, s, mut tc) = small();
        tc.learning_rate = 0.0;
        tc.epochs = 3;
        let out = train(&g, &m, &s, &tc).unwrap();
        let init = Params::init(&m, 2, true, streams::seed(tc.seed, streams::PARAMS));
        assert_eq!(out.params, init);
    }

    #[test]
    fn output_dim_must_match_classes() {
        let (g, mut m, s, tc) = small();
        m.output_dim = 5;
        assert!(matches!(train(&g, &m, &s, &tc), Err(TrainError::Config(_))));
    }

    #[test]
    fn history_tsv_format() {
        let mut h = MetricHistory::default();
        h.push(1, "train", "loss", 0.5);
        assert_eq!(h.to_tsv(), "1\ttrain\tloss\t0.5\n");
    }
}
