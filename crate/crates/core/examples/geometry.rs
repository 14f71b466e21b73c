//! Poincaré-ball kernels at three curvatures: the exp/log round trip,
//! Möbius addition and how distances stretch near the boundary.
//!
//! ```text
//! cargo run --release --example geometry
//! ```

use msgat::geometry::{norm, CurvedSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = [0.3, -0.4];
    for c in [0.25, 1.0, 4.0] {
        let ball = CurvedSpace::new(c)?;
        let x = ball.exp0(&v)?;
        let back = ball.log0(&x)?;
        println!("c = {c}: radius {:.4}", 1.0 / c.sqrt());
        println!("  exp0({v:?}) = {:?}", x.coords());
        println!("  log0(exp0(v)) = {:?}", back.coords);

        let y = ball.exp0(&[-0.1, 0.2])?;
        let sum = ball.mobius_add(&x, &y)?;
        let undo = ball.mobius_add(&ball.negate(&x), &sum)?;
        println!("  (-x) ⊕ (x ⊕ y) = {:?}, y = {:?}", undo.coords(), y.coords());

        let origin = ball.origin(2);
        for r in [0.5, 0.9, 0.99, 0.999] {
            let p = ball.project(&[r / c.sqrt(), 0.0])?;
            println!(
                "  d(0, p) at {:.1}% of the radius: {:.4} (‖p‖ = {:.6})",
                100.0 * r,
                ball.distance(&origin, &p)?,
                norm(p.coords())
            );
        }
    }
    Ok(())
}
