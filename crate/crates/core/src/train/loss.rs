use super::{Result, TrainError};
use crate::autodiff::{Tensor, Var};

/// Probabilities below this are raised to it before the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Summed cross-entropy `-Σ_v log f(z_v)[y_v]` over the rows of `probs`.
pub fn node_loss<'t>(probs: &Var<'t>, labels: &[usize]) -> Result<Var<'t>> {
    let (rows, cols) = probs.shape();
    if rows != labels.len() {
        return Err(TrainError::Data(format!(
            "{rows} probability rows but {} labels",
            labels.len()
        )));
    }
    let mut onehot = Tensor::zeros(rows, cols);
    for (r, &y) in labels.iter().enumerate() {
        if y >= cols {
            return Err(TrainError::Data(format!("label {y} out of range for {cols} classes")));
        }
        onehot.data[r * cols + y] = 1.0;
    }
    let mask = probs.tape().leaf(onehot);
    Ok(probs.clamp(LOG_FLOOR, 1.0).log().mul(&mask)?.sum().neg())
}

/// Mean binary cross-entropy of `sigmoid(z_u · z_v)` against `y`, in the
/// overflow-free form `softplus(s) - y s`.
pub fn link_loss<'t>(z_u: &Var<'t>, z_v: &Var<'t>, y: &[f64]) -> Result<Var<'t>> {
    if y.is_empty() {
        return Err(TrainError::Data("empty link sample set".into()));
    }
    let s = z_u.row_dot(z_v)?;
    if s.shape().0 != y.len() {
        return Err(TrainError::Data(format!(
            "{} scored pairs but {} labels",
            s.shape().0,
            y.len()
        )));
    }
    let yv = s.tape().leaf(Tensor::column(y.to_vec()));
    Ok(s.softplus().sub(&s.mul(&yv)?)?.mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    #[test]
    fn perfect_prediction_costs_nothing() {
        let tape = Tape::new();
        let p = tape.leaf(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert_eq!(node_loss(&p, &[0, 1]).unwrap().item(), 0.0);
    }

    #[test]
    fn uniform_prediction() {
        let tape = Tape::new();
        let p = tape.leaf(Tensor::filled(5, 4, 0.25));
        let l = node_loss(&p, &[0, 1, 2, 3, 0]).unwrap().item();
        assert!((l - 5.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn node_loss_formula() {
        let rows: [Vec<f64>; 3] = [vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.0, 0.25, 0.75]];
        let labels = [1, 2, 0];
        let expected: f64 = -rows
            .iter()
            .zip(labels)
            .map(|(r, y)| r[y].max(LOG_FLOOR).ln())
            .sum::<f64>();
        let tape = Tape::new();
        let l = node_loss(&tape.leaf(Tensor::from_rows(&rows)), &labels).unwrap();
        assert!((l.item() - expected).abs() < 1e-12);
        assert!(node_loss(&tape.leaf(Tensor::from_rows(&rows)), &[0, 3, 0]).is_err());
    }

    #[test]
    fn orthogonal_pair_costs_log_two() {
        let tape = Tape::new();
        let u = tape.leaf(Tensor::row(vec![1.0, 0.0]));
        let v = tape.leaf(Tensor::row(vec![0.0, 3.0]));
        let l = link_loss(&u, &v, &[1.0]).unwrap();
        assert!((l.item() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_pair_costs_nearly_nothing() {
        let tape = Tape::new();
        let u = tape.leaf(Tensor::row(vec![40.0]));
        let l = link_loss(&u, &u, &[1.0]).unwrap();
        assert!(l.item() < 1e-12 && l.item() >= 0.0);
    }

    #[test]
    fn link_loss_formula() {
        let zu = [vec![0.3, -0.2], vec![1.0, 0.4], vec![-0.5, 0.9]];
        let zv = [vec![0.1, 0.7], vec![-0.3, 0.2], vec![0.8, 0.8]];
        let y = [1.0, 0.0, 1.0];
        let mut expected = 0.0;
        for i in 0..3 {
            let s: f64 = zu[i][0] * zv[i][0] + zu[i][1] * zv[i][1];
            let p = 1.0 / (1.0 + (-s).exp());
            expected -= y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln();
        }
        expected /= 3.0;
        let tape = Tape::new();
        let l = link_loss(
            &tape.leaf(Tensor::from_rows(&zu)),
            &tape.leaf(Tensor::from_rows(&zv)),
            &y,
        )
        .unwrap();
        assert!((l.item() - expected).abs() < 1e-12);
        assert!(link_loss(&tape.leaf(Tensor::zeros(0, 2)), &tape.leaf(Tensor::zeros(0, 2)), &[]).is_err());
    }
}
