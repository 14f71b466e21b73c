//! Trains FULL MSGAT on the synthetic graph for node classification,
//! checking attention normalisation and ball containment every epoch.
//!
//! ```text
//! cargo run --release --example node_classification -- [epochs]
//! ```

use msgat::graph::{generate_synthetic, SamplerConfig, SyntheticSpec};
use msgat::model::{ForwardTrace, ModelConfig};
use msgat::train::{train_with_observer, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(200);
    let spec = SyntheticSpec::default();
    let g = generate_synthetic(&spec)?;
    let model = ModelConfig {
        input_dim: spec.feature_dim,
        output_dim: spec.classes,
        max_len: 3,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig { max_len: 3, cap: 16 };
    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };

    let mut violations = 0;
    let outcome = train_with_observer(&g, &model, &sampler, &config, |epoch, out, batch| {
        let trace = ForwardTrace::capture(out, batch, &model);
        if let Err(e) = trace.check_invariants(model.curvature_floor, 1e-9) {
            eprintln!("epoch {epoch}: {e}");
            violations += 1;
        }
    })?;

    for (epoch, loss) in outcome.history.series("train", "loss").iter().step_by(10) {
        let val = outcome.history.series("val", "accuracy")[epoch - 1].1;
        println!("epoch {epoch:>3}: train loss {loss:.4}, val accuracy {val:.3}");
    }
    println!("best epoch {} of {}", outcome.best_epoch, outcome.epochs_run);
    print!("{}", outcome.results_block());
    println!("invariant violations: {violations}");
    Ok(())
}
