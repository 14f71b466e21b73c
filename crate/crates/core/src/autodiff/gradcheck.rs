use super::{Result, Tape, Tensor, Var};

/// Outcome of comparing tape gradients with central finite differences.
#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Worst error per input tensor, in the order given.
    pub per_input: Vec<f64>,
    pub max_rel_error: f64,
}

/// Compares the analytic gradient of the scalar program `f` with
/// central differences of step `h`, coordinate by coordinate.
///
/// Error per coordinate is `|analytic - fd| / max(1, |fd|)`.
pub fn grad_check<F>(f: F, inputs: &[Tensor], h: f64) -> Result<GradCheck>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = f(&tape, &vars)?;
    let grads = tape.backward(&loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|v| grads.wrt(v)).collect();

    let eval = |xs: &[Tensor]| -> Result<f64> {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = xs.iter().map(|t| tape.leaf(t.clone())).collect();
        Ok(f(&tape, &vars)?.item())
    };

    let mut work = inputs.to_vec();
    let mut per_input = Vec::with_capacity(inputs.len());
    for (k, a) in analytic.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for j in 0..a.len() {
            let orig = work[k].data[j];
            work[k].data[j] = orig + h;
            let up = eval(&work)?;
            work[k].data[j] = orig - h;
            let down = eval(&work)?;
            work[k].data[j] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((a.data[j] - fd).abs() / fd.abs().max(1.0));
        }
        per_input.push(worst);
    }
    let max_rel_error = per_input.iter().copied().fold(0.0, f64::max);
    Ok(GradCheck {
        per_input,
        max_rel_error,
    })
}
