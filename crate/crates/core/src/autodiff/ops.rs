//! Forward rules for every recorded operation.

use super::tape::{binary, sigmoid, slice_cols, Op, Var};
use super::tensor::Tensor;
use super::{AutodiffError, Result};

fn same_tape(a: &Var<'_>, b: &Var<'_>) -> Result<()> {
    if std::ptr::eq(a.tape, b.tape) {
        Ok(())
    } else {
        Err(AutodiffError::ForeignVar)
    }
}

fn mismatch(op: &'static str, a: (usize, usize), b: (usize, usize)) -> AutodiffError {
    AutodiffError::ShapeMismatch { op, left: a, right: b }
}

impl<'t> Var<'t> {
    fn unary(&self, f: impl Fn(f64) -> f64, op: Op) -> Var<'t> {
        let v = self.value().map(f);
        self.tape.push(v, op)
    }

    fn broadcast(&self, other: &Var<'t>, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var<'t>> {
        same_tape(self, other)?;
        let v = {
            let (a, b) = (self.value(), other.value());
            binary(&a, &b, f).ok_or_else(|| mismatch(name, a.shape(), b.shape()))?
        };
        Ok(self.tape.push(v, op))
    }

    /// Elementwise sum; either side may broadcast along a unit dimension.
    pub fn add(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.broadcast(other, "add", |a, b| a + b, Op::Add(self.id, other.id))
    }

    pub fn sub(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.broadcast(other, "sub", |a, b| a - b, Op::Sub(self.id, other.id))
    }

    pub fn mul(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.broadcast(other, "mul", |a, b| a * b, Op::Mul(self.id, other.id))
    }

    pub fn div(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.broadcast(other, "div", |a, b| a / b, Op::Div(self.id, other.id))
    }

    pub fn scale(&self, k: f64) -> Var<'t> {
        self.unary(|v| v * k, Op::ScalarMul(self.id, k))
    }

    pub fn neg(&self) -> Var<'t> {
        self.scale(-1.0)
    }

    pub fn add_scalar(&self, k: f64) -> Var<'t> {
        self.unary(|v| v + k, Op::AddScalar(self.id))
    }

    /// Applies the matrix `w` (`m × n`) to every row of `self` (`r × n`),
    /// giving `r × m`.
    pub fn linear(&self, w: &Var<'t>) -> Result<Var<'t>> {
        same_tape(self, w)?;
        let v = {
            let (x, wv) = (self.value(), w.value());
            if x.cols != wv.cols {
                return Err(mismatch("linear", x.shape(), wv.shape()));
            }
            x.matmul_t(&wv)
        };
        Ok(self.tape.push(v, Op::Linear { x: self.id, w: w.id }))
    }

    pub fn matmul(&self, other: &Var<'t>) -> Result<Var<'t>> {
        same_tape(self, other)?;
        let v = {
            let (a, b) = (self.value(), other.value());
            if a.cols != b.rows {
                return Err(mismatch("matmul", a.shape(), b.shape()));
            }
            a.matmul(&b)
        };
        Ok(self.tape.push(v, Op::MatMul(self.id, other.id)))
    }

    /// Row-wise inner product, `r × 1`. `other` may be a single row.
    pub fn row_dot(&self, other: &Var<'t>) -> Result<Var<'t>> {
        same_tape(self, other)?;
        let v = {
            let (a, b) = (self.value(), other.value());
            if a.cols != b.cols || !(b.rows == a.rows || b.rows == 1) {
                return Err(mismatch("row_dot", a.shape(), b.shape()));
            }
            let data = (0..a.rows)
                .map(|i| {
                    let bi = if b.rows == 1 { 0 } else { i };
                    a.row_slice(i).iter().zip(b.row_slice(bi)).map(|(x, y)| x * y).sum()
                })
                .collect();
            Tensor::column(data)
        };
        Ok(self.tape.push(v, Op::RowDot(self.id, other.id)))
    }

    /// Row-wise Euclidean norm floored at `floor`, `r × 1`.
    pub fn row_norm(&self, floor: f64) -> Var<'t> {
        let v = {
            let x = self.value();
            Tensor::column(
                (0..x.rows)
                    .map(|i| {
                        let n = x.row_slice(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                        n.max(floor)
                    })
                    .collect(),
            )
        };
        self.tape.push(v, Op::RowNorm { x: self.id, floor })
    }

    pub fn tanh(&self) -> Var<'t> {
        self.unary(f64::tanh, Op::Tanh(self.id))
    }

    /// Errors when any entry has magnitude ≥ 1; callers clamp first.
    pub fn artanh(&self) -> Result<Var<'t>> {
        if let Some(&bad) = self.value().data.iter().find(|v| !(v.abs() < 1.0)) {
            return Err(AutodiffError::ArtanhDomain(bad));
        }
        Ok(self.unary(f64::atanh, Op::Artanh(self.id)))
    }

    pub fn leaky_relu(&self, slope: f64) -> Var<'t> {
        self.unary(
            |v| if v >= 0.0 { v } else { slope * v },
            Op::LeakyRelu { x: self.id, slope },
        )
    }

    pub fn sigmoid(&self) -> Var<'t> {
        self.unary(sigmoid, Op::Sigmoid(self.id))
    }

    pub fn log(&self) -> Var<'t> {
        self.unary(f64::ln, Op::Log(self.id))
    }

    pub fn exp(&self) -> Var<'t> {
        self.unary(f64::exp, Op::Exp(self.id))
    }

    pub fn sqrt(&self) -> Var<'t> {
        self.unary(f64::sqrt, Op::Sqrt(self.id))
    }

    /// `ln(1 + eᵛ)`, evaluated without overflow.
    pub fn softplus(&self) -> Var<'t> {
        self.unary(softplus, Op::Softplus(self.id))
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Var<'t> {
        self.unary(|v| v.clamp(lo, hi), Op::Clamp { x: self.id, lo, hi })
    }

    /// Softmax across the columns of each row.
    pub fn softmax_rows(&self) -> Var<'t> {
        let v = {
            let x = self.value();
            let mut out = x.clone();
            for i in 0..x.rows {
                softmax_in_place(&mut out.data[i * x.cols..(i + 1) * x.cols]);
            }
            out
        };
        self.tape.push(v, Op::SoftmaxRows(self.id))
    }

    /// Softmax within each contiguous segment of a column vector.
    /// `offsets` holds segment boundaries, first 0 and last `rows`.
    pub fn segment_softmax(&self, offsets: &[usize]) -> Result<Var<'t>> {
        let v = {
            let x = self.value();
            check_offsets("segment_softmax", &x, offsets)?;
            if x.cols != 1 {
                return Err(mismatch("segment_softmax", x.shape(), (x.rows, 1)));
            }
            let mut out = x.clone();
            for w in offsets.windows(2) {
                softmax_in_place(&mut out.data[w[0]..w[1]]);
            }
            out
        };
        Ok(self.tape.push(
            v,
            Op::SegmentSoftmax {
                x: self.id,
                offsets: offsets.to_vec(),
            },
        ))
    }

    /// Sums the rows of each segment, giving one row per segment.
    pub fn segment_sum(&self, offsets: &[usize]) -> Result<Var<'t>> {
        let v = {
            let x = self.value();
            check_offsets("segment_sum", &x, offsets)?;
            let mut out = Tensor::zeros(offsets.len() - 1, x.cols);
            for (s, w) in offsets.windows(2).enumerate() {
                for i in w[0]..w[1] {
                    for j in 0..x.cols {
                        out.data[s * x.cols + j] += x.data[i * x.cols + j];
                    }
                }
            }
            out
        };
        Ok(self.tape.push(
            v,
            Op::SegmentSum {
                x: self.id,
                offsets: offsets.to_vec(),
            },
        ))
    }

    pub fn sum(&self) -> Var<'t> {
        let v = Tensor::scalar(self.value().sum());
        self.tape.push(v, Op::Sum(self.id))
    }

    pub fn mean(&self) -> Var<'t> {
        let v = {
            let x = self.value();
            Tensor::scalar(x.sum() / x.len() as f64)
        };
        self.tape.push(v, Op::Mean(self.id))
    }

    /// Concatenates along columns; all parts share a row count.
    pub fn concat_cols(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts.first().ok_or(AutodiffError::EmptyConcat)?;
        for p in parts {
            same_tape(first, p)?;
        }
        let v = {
            let vals: Vec<_> = parts.iter().map(|p| p.value()).collect();
            let rows = vals[0].rows;
            if let Some(bad) = vals.iter().find(|v| v.rows != rows) {
                return Err(mismatch("concat_cols", vals[0].shape(), bad.shape()));
            }
            let cols: usize = vals.iter().map(|v| v.cols).sum();
            let mut data = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for v in &vals {
                    data.extend_from_slice(v.row_slice(i));
                }
            }
            Tensor::new(rows, cols, data)
        };
        Ok(first.tape.push(v, Op::ConcatCols(parts.iter().map(|p| p.id).collect())))
    }

    pub fn slice_cols(&self, start: usize, len: usize) -> Result<Var<'t>> {
        let v = {
            let x = self.value();
            if start + len > x.cols {
                return Err(mismatch("slice_cols", x.shape(), (x.rows, start + len)));
            }
            slice_cols(&x, start, len)
        };
        Ok(self.tape.push(v, Op::SliceCols { x: self.id, start }))
    }

    pub fn gather_rows(&self, index: &[usize]) -> Result<Var<'t>> {
        let v = {
            let x = self.value();
            let mut data = Vec::with_capacity(index.len() * x.cols);
            for &i in index {
                if i >= x.rows {
                    return Err(mismatch("gather_rows", x.shape(), (i + 1, x.cols)));
                }
                data.extend_from_slice(x.row_slice(i));
            }
            Tensor::new(index.len(), x.cols, data)
        };
        Ok(self.tape.push(
            v,
            Op::GatherRows {
                x: self.id,
                index: index.to_vec(),
            },
        ))
    }

    /// Rescales rows whose norm exceeds `(1 - margin)/√c` onto that sphere.
    /// `c` is a `1 × 1` curvature Var and receives gradient.
    pub fn clip_norm(&self, c: &Var<'t>, margin: f64) -> Result<Var<'t>> {
        same_tape(self, c)?;
        let v = {
            let (x, cv) = (self.value(), c.value());
            if cv.shape() != (1, 1) {
                return Err(mismatch("clip_norm", x.shape(), cv.shape()));
            }
            let max = (1.0 - margin) / cv.data[0].sqrt();
            let mut out = x.clone();
            for i in 0..x.rows {
                let row = &mut out.data[i * x.cols..(i + 1) * x.cols];
                let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > max {
                    row.iter_mut().for_each(|v| *v *= max / n);
                }
            }
            out
        };
        Ok(self.tape.push(
            v,
            Op::ClipNorm {
                x: self.id,
                c: c.id,
                margin,
            },
        ))
    }
}

fn check_offsets(op: &'static str, x: &Tensor, offsets: &[usize]) -> Result<()> {
    let ok = offsets.len() >= 2
        && offsets[0] == 0
        && *offsets.last().unwrap() == x.rows
        && offsets.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(mismatch(op, x.shape(), (offsets.last().copied().unwrap_or(0), x.cols)))
    }
}

pub(crate) fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

pub(crate) fn softmax_in_place(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    xs.iter_mut().for_each(|x| *x /= s);
}
