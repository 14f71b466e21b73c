//! Poincaré-ball kernels recorded on a [`Tape`], batched over rows.
//!
//! Every input is an `r × n` matrix whose rows are independent points or
//! tangent vectors. Curvature is a `1 × 1` [`Var`] so gradients reach it
//! through `√c`, the conformal factor and every `tanh`/`artanh` argument.

use super::{Result, Tape, Var};
use crate::geometry::{Activation, ARTANH_CLAMP, EPS_BOUNDARY, LEAKY_SLOPE, MIN_NORM};

#[derive(Clone, Copy)]
pub struct Ball<'t> {
    c: Var<'t>,
    sqrt_c: Var<'t>,
    margin: f64,
}

impl<'t> Ball<'t> {
    /// `c` must be a positive `1 × 1` Var.
    pub fn new(c: Var<'t>) -> Self {
        Self::with_margin(c, EPS_BOUNDARY)
    }

    pub fn with_margin(c: Var<'t>, margin: f64) -> Self {
        Self {
            c,
            sqrt_c: c.sqrt(),
            margin,
        }
    }

    pub fn curvature(&self) -> Var<'t> {
        self.c
    }

    fn tape(&self) -> &'t Tape {
        self.c.tape()
    }

    pub fn project(&self, x: &Var<'t>) -> Result<Var<'t>> {
        x.clip_norm(&self.c, self.margin)
    }

    /// `exp_0(v) = tanh(√c‖v‖) v / (√c‖v‖)`, zero rows map to the origin.
    pub fn exp0(&self, v: &Var<'t>) -> Result<Var<'t>> {
        let arg = v.row_norm(MIN_NORM).mul(&self.sqrt_c)?;
        let factor = arg.tanh().div(&arg)?;
        self.project(&v.mul(&factor)?)
    }

    /// `log_0(y) = artanh(√c‖y‖) y / (√c‖y‖)`.
    pub fn log0(&self, y: &Var<'t>) -> Result<Var<'t>> {
        let arg = y.row_norm(MIN_NORM).mul(&self.sqrt_c)?;
        let at = arg.clamp(-ARTANH_CLAMP, ARTANH_CLAMP).artanh()?;
        y.mul(&at.div(&arg)?)
    }

    /// `W ⊗_c y` for every row of `y`.
    pub fn matvec(&self, w: &Var<'t>, y: &Var<'t>) -> Result<Var<'t>> {
        self.exp0(&self.log0(y)?.linear(w)?)
    }

    pub fn activation(&self, act: Activation, y: &Var<'t>) -> Result<Var<'t>> {
        self.exp0(&apply_activation(act, &self.log0(y)?))
    }

    /// Row-wise `x ⊕_c y`; `y` may be a single row added to every row of `x`.
    pub fn mobius_add(&self, x: &Var<'t>, y: &Var<'t>) -> Result<Var<'t>> {
        let c = self.c;
        let xy = x.row_dot(y)?;
        let x2 = x.row_dot(x)?;
        let y2 = y.row_dot(y)?;
        let cxy2 = xy.mul(&c)?.scale(2.0);
        let a = cxy2.add(&y2.mul(&c)?)?.add_scalar(1.0);
        let b = x2.mul(&c)?.neg().add_scalar(1.0);
        let den = cxy2.add(&x2.mul(&y2)?.mul(&c.mul(&c)?)?)?.add_scalar(1.0);
        let num = x.mul(&a)?.add(&y.mul(&b)?)?;
        self.project(&num.div(&den)?)
    }

    /// Conformal factor `2 / (1 - c‖x‖²)` per row.
    pub fn conformal_factor(&self, x: &Var<'t>) -> Result<Var<'t>> {
        let denom = x.row_dot(x)?.mul(&self.c)?.neg().add_scalar(1.0);
        self.tape().scalar(2.0).div(&denom)
    }

    /// Exponential map at base points `x` (one per row of `v`).
    pub fn exp_map(&self, x: &Var<'t>, v: &Var<'t>) -> Result<Var<'t>> {
        let vn = v.row_norm(MIN_NORM);
        let lambda = self.conformal_factor(x)?;
        let arg = self.sqrt_c.mul(&lambda)?.mul(&vn)?.scale(0.5);
        let factor = arg.tanh().div(&self.sqrt_c.mul(&vn)?)?;
        let step = self.project(&v.mul(&factor)?)?;
        self.mobius_add(x, &step)
    }

    /// Logarithmic map at base points `x`.
    pub fn log_map(&self, x: &Var<'t>, y: &Var<'t>) -> Result<Var<'t>> {
        let diff = self.mobius_add(&x.neg(), y)?;
        let dn = diff.row_norm(MIN_NORM);
        let lambda = self.conformal_factor(x)?;
        let at = self.sqrt_c.mul(&dn)?.clamp(-ARTANH_CLAMP, ARTANH_CLAMP).artanh()?;
        let k = at.scale(2.0).div(&self.sqrt_c.mul(&lambda)?)?.div(&dn)?;
        diff.mul(&k)
    }
}

pub fn apply_activation<'t>(act: Activation, x: &Var<'t>) -> Var<'t> {
    match act {
        Activation::LeakyRelu => x.leaky_relu(LEAKY_SLOPE),
        Activation::Tanh => x.tanh(),
        Activation::Identity => *x,
    }
}
