//! Link prediction on the author-paper relation of a synthetic graph.
//! Held-out edges are removed before instance sampling.
//!
//! ```text
//! cargo run --release --example link_prediction -- [epochs]
//! ```

use msgat::graph::{generate_synthetic, SamplerConfig, SyntheticSpec};
use msgat::model::ModelConfig;
use msgat::train::{train, Task, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(100);
    let spec = SyntheticSpec {
        link_via: Some("P".into()),
        ..SyntheticSpec::default()
    };
    let g = generate_synthetic(&spec)?;
    let r = g.link_relation().expect("link_via declares a relation");
    println!(
        "link relation {} with {} edges; metapaths {:?}",
        g.relations()[r].name,
        g.edges_of(r).count(),
        g.metapaths().iter().map(|m| &m.name).collect::<Vec<_>>()
    );
    let model = ModelConfig {
        input_dim: spec.feature_dim,
        max_len: 3,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig { max_len: 3, cap: 16 };
    let config = TrainConfig {
        task: Task::LinkPrediction,
        epochs,
        ..TrainConfig::default()
    };
    let outcome = train(&g, &model, &sampler, &config)?;
    let losses = outcome.history.series("train", "loss");
    println!(
        "train loss {:.4} -> {:.4}; best epoch {}",
        losses[0].1,
        losses.last().unwrap().1,
        outcome.best_epoch
    );
    print!("{}", outcome.results_block());
    Ok(())
}
