//! Loads a dataset directory (or generates the default synthetic graph)
//! and prints the metapath instances of a few target nodes.
//!
//! ```text
//! cargo run --release --example sampling -- [dataset_dir]
//! ```

use msgat::graph::{generate_synthetic, load_dataset, sample_instances, SamplerConfig, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = match std::env::args().nth(1) {
        Some(dir) => load_dataset(dir)?,
        None => generate_synthetic(&SyntheticSpec::default())?,
    };
    println!(
        "{} nodes, {} edges, types {:?}, target {}",
        g.node_count(),
        g.edge_count(),
        g.type_names(),
        g.type_name(g.target_type())
    );
    let cfg = SamplerConfig { max_len: 4, cap: 5 };
    for &v in g.target_nodes().iter().take(3) {
        let set = sample_instances(&g, v, g.metapaths(), &cfg, 0)?;
        println!("node {v} (label {:?}):", g.label(v));
        for (m, instances) in g.metapaths().iter().zip(&set.per_metapath) {
            println!("  {}: {} instance(s) kept", m.name, instances.len());
            for path in instances {
                println!("    {path:?}");
            }
        }
    }
    Ok(())
}
