//! Trains briefly, saves a checkpoint, reloads it and re-scores it on the
//! same held-out split.
//!
//! ```text
//! cargo run --release --example checkpoint -- [path]
//! ```

use msgat::graph::{generate_synthetic, SamplerConfig, SyntheticSpec};
use msgat::model::{Checkpoint, ModelConfig};
use msgat::train::{evaluate, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "checkpoint.json".into());
    let g = generate_synthetic(&SyntheticSpec::default())?;
    let model = ModelConfig {
        max_len: 3,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig { max_len: 3, cap: 16 };
    let config = TrainConfig {
        epochs: 40,
        ..TrainConfig::default()
    };
    let outcome = train(&g, &model, &sampler, &config)?;
    let names = g.metapaths().iter().map(|m| m.name.clone()).collect();
    Checkpoint::new(model, sampler, names, outcome.params.clone()).save(&path)?;

    let ck = Checkpoint::load(&path)?;
    assert_eq!(ck.params, outcome.params);
    println!("saved and reloaded {path}; curvatures {:?}", ck.curvatures);
    let ev = evaluate(&g, &ck.model, &ck.sampler, &config, &ck.params)?;
    for (k, v) in &ev.results {
        println!("{k}: trained {} / reloaded {v}", outcome.results[k]);
    }
    Ok(())
}
