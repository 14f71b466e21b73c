//! Checks tape gradients of a small hyperbolic layer against central
//! differences, including the gradient reaching the curvature through
//! `c = softplus(θ) + 0.1`.
//!
//! ```text
//! cargo run --release --example gradcheck
//! ```

use msgat::autodiff::geometry::Ball;
use msgat::autodiff::{grad_check, Tensor};
use msgat::geometry::Activation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = Tensor::from_rows(&[vec![0.2, -0.1, 0.4], vec![-0.3, 0.5, 0.1]]);
    let w = Tensor::from_rows(&[vec![0.5, -0.2, 0.1], vec![0.3, 0.8, -0.6]]);
    let theta = Tensor::scalar(0.4);

    let report = grad_check(
        |tape, v| {
            let c = v[2].softplus().add(&tape.scalar(0.1))?;
            let ball = Ball::new(c);
            let h = ball.exp0(&v[0])?;
            let h = ball.matvec(&v[1], &h)?;
            let h = ball.activation(Activation::Tanh, &h)?;
            let t = ball.log0(&h)?;
            Ok(t.mul(&t)?.sum())
        },
        &[x, w, theta],
        1e-5,
    )?;
    for (name, err) in ["x", "W", "theta"].iter().zip(&report.per_input) {
        println!("{name:>5}: max relative error {err:.2e}");
    }
    println!("worst: {:.2e}", report.max_rel_error);
    Ok(())
}
