//! Losses, optimisation and the evaluation suite.

mod ablation;
mod data;
mod loss;
pub mod metrics;
mod optim;
mod runner;

pub use ablation::{run_ablation, AblationRow, AblationTable};
pub use data::{negative_sample, stratified_split, LinkSample, LinkSplit, Split};
pub use loss::{link_loss, node_loss};
pub use optim::{Adam, AdamConfig};
pub use runner::{
    evaluate, evaluate_link, evaluate_node, train, train_with_observer, Embeddings, Evaluation, LinkMetrics,
    MetricHistory, MetricRecord, NodeMetrics, TrainOutcome,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::graph::GraphError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("training config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("loss became non-finite at epoch {epoch} ({loss})")]
    Divergence { epoch: usize, loss: f64 },
}

impl TrainError {
    /// True for errors caused by the dataset rather than the configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            TrainError::Graph(_) | TrainError::Data(_) | TrainError::Model(ModelError::Graph(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NodeClassification,
    NodeClustering,
    LinkPrediction,
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "node-classification" => Ok(Task::NodeClassification),
            "node-clustering" => Ok(Task::NodeClustering),
            "link-prediction" => Ok(Task::LinkPrediction),
            _ => Err(format!("unknown task {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub task: Task,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    /// Share of labelled nodes (or link-relation edges) used for training;
    /// the rest is split evenly into validation and test.
    pub train_fraction: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    /// Restarts for k-means clustering of the embeddings.
    pub kmeans_restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            task: Task::NodeClassification,
            epochs: 200,
            learning_rate: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 1e-4,
            train_fraction: 0.6,
            patience: 30,
            seed: 0,
            kmeans_restarts: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0 {
            return err("epochs must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return err("train_fraction must lie strictly between 0 and 1");
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return err("learning_rate and weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return err("adam betas must lie in [0, 1) and eps must be positive");
        }
        if self.kmeans_restarts == 0 {
            return err("kmeans_restarts must be at least 1");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
            weight_decay: self.weight_decay,
        }
    }
}

/// Independent random streams derived from one root seed.
pub(crate) mod streams {
    pub const PARAMS: u64 = 1;
    pub const SAMPLER: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const NEGATIVES: u64 = 4;
    pub const EVAL: u64 = 5;

    pub fn seed(root: u64, stream: u64) -> u64 {
        crate::graph::derive_seed(root, stream, 0)
    }
}
