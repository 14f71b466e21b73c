//! Compares FULL, CONCAT, EUCLID and SINGLE on the planted two-exponent
//! synthetic graph.
//!
//! ```text
//! cargo run --release --example ablation -- [epochs] [seeds]
//! ```

use msgat::graph::{generate_synthetic, SamplerConfig, SyntheticSpec};
use msgat::model::{ModelConfig, Variant};
use msgat::train::{run_ablation, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(200);
    let n_seeds: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);

    let spec = SyntheticSpec::default();
    let g = generate_synthetic(&spec)?;
    let model = ModelConfig {
        input_dim: spec.feature_dim,
        output_dim: spec.classes,
        ..ModelConfig::default()
    };
    let sampler = SamplerConfig { max_len: 3, cap: 16 };
    let train = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let start = std::time::Instant::now();
    let table = run_ablation(&g, &model, &sampler, &train, &seeds, &Variant::ALL)?;
    println!("{table}");
    if let Some(full) = table.row(Variant::Full) {
        for (seed, c) in seeds.iter().zip(&full.curvatures) {
            println!("FULL seed {seed} curvatures {c:?}");
        }
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
