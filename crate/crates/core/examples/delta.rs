//! Gromov δ-hyperbolicity of a path, a cycle, a grid and the two
//! metapath-induced graphs of the synthetic dataset.
//!
//! ```text
//! cargo run --release --example delta
//! ```

use msgat::graph::{delta_hyperbolicity, generate_synthetic, metapath_subgraph, HomGraph, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = HomGraph::from_edges(12, (0..11).map(|i| (i, i + 1)));
    let cycle = HomGraph::from_edges(12, (0..12).map(|i| (i, (i + 1) % 12)));
    let side = 5;
    let grid = HomGraph::from_edges(
        side * side,
        (0..side * side).flat_map(|i| {
            let mut e = Vec::new();
            if i % side + 1 < side {
                e.push((i, i + 1));
            }
            if i + side < side * side {
                e.push((i, i + side));
            }
            e
        }),
    );
    for (name, h) in [("path", &path), ("cycle", &cycle), ("5x5 grid", &grid)] {
        let r = delta_hyperbolicity(h, 0, 0)?;
        println!("{name:>9}: delta_avg {:.4}, delta_max {}", r.delta_avg, r.delta_max);
    }

    let g = generate_synthetic(&SyntheticSpec::default())?;
    for m in g.metapaths() {
        let h = metapath_subgraph(&g, m)?;
        let mut r = delta_hyperbolicity(&h, 200_000, 0)?;
        r.metapath = Some(m.name.clone());
        println!("\n{} edges in the {} graph\n{r}", h.edge_count(), m.name);
    }
    Ok(())
}
