use std::cell::{Cell, Ref, RefCell};

use super::tensor::Tensor;
use super::{AutodiffError, Result};

/// The closed set of recorded operations.
#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    ScalarMul(usize, f64),
    AddScalar(usize),
    /// Rows of `x` times `wᵀ`.
    Linear {
        x: usize,
        w: usize,
    },
    MatMul(usize, usize),
    RowDot(usize, usize),
    RowNorm {
        x: usize,
        floor: f64,
    },
    Tanh(usize),
    Artanh(usize),
    LeakyRelu {
        x: usize,
        slope: f64,
    },
    Sigmoid(usize),
    Log(usize),
    Exp(usize),
    Sqrt(usize),
    Softplus(usize),
    Clamp {
        x: usize,
        lo: f64,
        hi: f64,
    },
    SoftmaxRows(usize),
    SegmentSoftmax {
        x: usize,
        offsets: Vec<usize>,
    },
    SegmentSum {
        x: usize,
        offsets: Vec<usize>,
    },
    Sum(usize),
    Mean(usize),
    ConcatCols(Vec<usize>),
    SliceCols {
        x: usize,
        start: usize,
    },
    GatherRows {
        x: usize,
        index: Vec<usize>,
    },
    ClipNorm {
        x: usize,
        c: usize,
        margin: f64,
    },
}

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) op: Op,
}

/// Append-only record of a computation. Node order is topological order.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: RefCell<Vec<Node>>,
    backward_done: Cell<bool>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("value", &*self.value())
            .finish()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by node.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// `∂loss/∂var`; zeros if `var` does not influence the loss.
    pub fn wrt(&self, var: &Var<'_>) -> Tensor {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[var.id];
                Tensor::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an input (parameter or constant).
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&self, v: f64) -> Var<'_> {
        self.leaf(Tensor::scalar(v))
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn push(&self, value: Tensor, op: Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// Clears the backward flag so the tape can be differentiated again.
    pub fn reset(&self) {
        self.backward_done.set(false);
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: &Var<'_>) -> Result<Gradients> {
        if !std::ptr::eq(loss.tape, self) {
            return Err(AutodiffError::ForeignVar);
        }
        if self.backward_done.get() {
            return Err(AutodiffError::BackwardTwice);
        }
        let nodes = self.nodes.borrow();
        let shape = nodes[loss.id].value.shape();
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarLoss(shape.0, shape.1));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        grads[loss.id] = Some(Tensor::scalar(1.0));
        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            backprop(&nodes, id, &g, &mut grads);
            grads[id] = Some(g);
        }
        self.backward_done.set(true);
        Ok(Gradients {
            grads,
            shapes: nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value().shape()
    }

    pub fn item(&self) -> f64 {
        self.value().data[0]
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: usize, g: Tensor) {
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Elementwise product with broadcasting of `b` onto `a`'s shape.
fn bcast_zip(a: &Tensor, b: &Tensor, shape: (usize, usize), f: impl Fn(f64, f64) -> f64) -> Tensor {
    let (rows, cols) = shape;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let ai = if a.rows == 1 { 0 } else { i };
        let bi = if b.rows == 1 { 0 } else { i };
        for j in 0..cols {
            let aj = if a.cols == 1 { 0 } else { j };
            let bj = if b.cols == 1 { 0 } else { j };
            out.push(f(a.data[ai * a.cols + aj], b.data[bi * b.cols + bj]));
        }
    }
    Tensor::new(rows, cols, out)
}

pub(crate) fn broadcast_shape(a: (usize, usize), b: (usize, usize)) -> Option<(usize, usize)> {
    let dim = |x: usize, y: usize| match (x, y) {
        _ if x == y => Some(x),
        (1, y) => Some(y),
        (x, 1) => Some(x),
        _ => None,
    };
    Some((dim(a.0, b.0)?, dim(a.1, b.1)?))
}

pub(crate) fn binary(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Option<Tensor> {
    let shape = broadcast_shape(a.shape(), b.shape())?;
    Some(bcast_zip(a, b, shape, f))
}

fn segments(offsets: &[usize]) -> impl Iterator<Item = (usize, std::ops::Range<usize>)> + '_ {
    offsets.windows(2).enumerate().map(|(s, w)| (s, w[0]..w[1]))
}

fn backprop(nodes: &[Node], id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
    let val = |i: usize| &nodes[i].value;
    let out = &nodes[id].value;
    match &nodes[id].op {
        Op::Leaf => {}
        &Op::Add(a, b) => {
            accumulate(grads, a, g.reduce_to(val(a).shape()));
            accumulate(grads, b, g.reduce_to(val(b).shape()));
        }
        &Op::Sub(a, b) => {
            accumulate(grads, a, g.reduce_to(val(a).shape()));
            accumulate(grads, b, g.map(|v| -v).reduce_to(val(b).shape()));
        }
        &Op::Mul(a, b) => {
            let ga = bcast_zip(g, val(b), g.shape(), |g, y| g * y);
            let gb = bcast_zip(g, val(a), g.shape(), |g, x| g * x);
            accumulate(grads, a, ga.reduce_to(val(a).shape()));
            accumulate(grads, b, gb.reduce_to(val(b).shape()));
        }
        &Op::Div(a, b) => {
            let ga = bcast_zip(g, val(b), g.shape(), |g, y| g / y);
            // ∂(a/b)/∂b = -out / b
            let q = bcast_zip(out, val(b), g.shape(), |o, y| -o / y);
            let gb = bcast_zip(g, &q, g.shape(), |g, q| g * q);
            accumulate(grads, a, ga.reduce_to(val(a).shape()));
            accumulate(grads, b, gb.reduce_to(val(b).shape()));
        }
        &Op::ScalarMul(a, k) => accumulate(grads, a, g.map(|v| v * k)),
        &Op::AddScalar(a) => accumulate(grads, a, g.clone()),
        &Op::Linear { x, w } => {
            accumulate(grads, x, g.matmul(val(w)));
            accumulate(grads, w, g.t_matmul(val(x)));
        }
        &Op::MatMul(a, b) => {
            accumulate(grads, a, g.matmul_t(val(b)));
            accumulate(grads, b, val(a).t_matmul(g));
        }
        &Op::RowDot(a, b) => {
            let (va, vb) = (val(a), val(b));
            let ga = bcast_zip(g, vb, va.shape(), |g, y| g * y);
            let gb = bcast_zip(g, va, (va.rows.max(vb.rows), va.cols), |g, x| g * x);
            accumulate(grads, a, ga);
            accumulate(grads, b, gb.reduce_to(vb.shape()));
        }
        &Op::RowNorm { x, floor } => {
            let vx = val(x);
            let mut gx = Tensor::zeros(vx.rows, vx.cols);
            for i in 0..vx.rows {
                let n = out.data[i];
                let raw = vx.row_slice(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                if raw > floor {
                    let k = g.data[i] / n;
                    for j in 0..vx.cols {
                        gx.data[i * vx.cols + j] = k * vx.data[i * vx.cols + j];
                    }
                }
            }
            accumulate(grads, x, gx);
        }
        &Op::Tanh(x) => accumulate(grads, x, zip(g, out, |g, y| g * (1.0 - y * y))),
        &Op::Artanh(x) => accumulate(grads, x, zip(g, val(x), |g, v| g / (1.0 - v * v))),
        &Op::LeakyRelu { x, slope } => {
            accumulate(grads, x, zip(g, val(x), |g, v| if v >= 0.0 { g } else { g * slope }))
        }
        &Op::Sigmoid(x) => accumulate(grads, x, zip(g, out, |g, y| g * y * (1.0 - y))),
        &Op::Log(x) => accumulate(grads, x, zip(g, val(x), |g, v| g / v)),
        &Op::Exp(x) => accumulate(grads, x, zip(g, out, |g, y| g * y)),
        &Op::Sqrt(x) => accumulate(grads, x, zip(g, out, |g, y| g / (2.0 * y))),
        &Op::Softplus(x) => accumulate(grads, x, zip(g, val(x), |g, v| g * sigmoid(v))),
        &Op::Clamp { x, lo, hi } => accumulate(
            grads,
            x,
            zip(g, val(x), |g, v| if (lo..=hi).contains(&v) { g } else { 0.0 }),
        ),
        &Op::SoftmaxRows(x) => {
            let mut gx = Tensor::zeros(out.rows, out.cols);
            for i in 0..out.rows {
                let y = out.row_slice(i);
                let gi = g.row_slice(i);
                let s: f64 = y.iter().zip(gi).map(|(y, g)| y * g).sum();
                for j in 0..out.cols {
                    gx.data[i * out.cols + j] = y[j] * (gi[j] - s);
                }
            }
            accumulate(grads, x, gx);
        }
        Op::SegmentSoftmax { x, offsets } => {
            let mut gx = Tensor::zeros(out.rows, 1);
            for (_, r) in segments(offsets) {
                let s: f64 = r.clone().map(|i| out.data[i] * g.data[i]).sum();
                for i in r {
                    gx.data[i] = out.data[i] * (g.data[i] - s);
                }
            }
            accumulate(grads, *x, gx);
        }
        Op::SegmentSum { x, offsets } => {
            let vx = val(*x);
            let mut gx = Tensor::zeros(vx.rows, vx.cols);
            for (s, r) in segments(offsets) {
                let gs = g.row_slice(s);
                for i in r {
                    gx.data[i * vx.cols..(i + 1) * vx.cols].copy_from_slice(gs);
                }
            }
            accumulate(grads, *x, gx);
        }
        &Op::Sum(x) => {
            let (r, c) = val(x).shape();
            accumulate(grads, x, Tensor::filled(r, c, g.data[0]));
        }
        &Op::Mean(x) => {
            let (r, c) = val(x).shape();
            accumulate(grads, x, Tensor::filled(r, c, g.data[0] / (r * c) as f64));
        }
        Op::ConcatCols(parts) => {
            let mut start = 0;
            for &p in parts {
                let cols = val(p).cols;
                accumulate(grads, p, slice_cols(g, start, cols));
                start += cols;
            }
        }
        &Op::SliceCols { x, start } => {
            let vx = val(x);
            let mut gx = Tensor::zeros(vx.rows, vx.cols);
            for i in 0..vx.rows {
                for j in 0..g.cols {
                    gx.data[i * vx.cols + start + j] = g.data[i * g.cols + j];
                }
            }
            accumulate(grads, x, gx);
        }
        Op::GatherRows { x, index } => {
            let vx = val(*x);
            let mut gx = Tensor::zeros(vx.rows, vx.cols);
            for (k, &i) in index.iter().enumerate() {
                for j in 0..vx.cols {
                    gx.data[i * vx.cols + j] += g.data[k * vx.cols + j];
                }
            }
            accumulate(grads, *x, gx);
        }
        &Op::ClipNorm { x, c, margin } => {
            let vx = val(x);
            let cv = val(c).data[0];
            let max = (1.0 - margin) / cv.sqrt();
            let mut gx = g.clone();
            let mut gc = 0.0;
            for i in 0..vx.rows {
                let row = vx.row_slice(i);
                let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > max {
                    let gi = g.row_slice(i);
                    let proj: f64 = gi.iter().zip(row).map(|(g, x)| g * x).sum::<f64>() / n;
                    for j in 0..vx.cols {
                        let u = row[j] / n;
                        gx.data[i * vx.cols + j] = max / n * (gi[j] - proj * u);
                    }
                    gc += proj * (-max / (2.0 * cv));
                }
            }
            accumulate(grads, x, gx);
            accumulate(grads, c, Tensor::scalar(gc));
        }
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::new(
        a.rows,
        a.cols,
        a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    )
}

pub(crate) fn slice_cols(t: &Tensor, start: usize, len: usize) -> Tensor {
    let mut data = Vec::with_capacity(t.rows * len);
    for i in 0..t.rows {
        data.extend_from_slice(&t.data[i * t.cols + start..i * t.cols + start + len]);
    }
    Tensor::new(t.rows, len, data)
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
