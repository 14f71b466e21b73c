//! Poincaré-ball kernels over plain `f64` vectors.
//!
//! The ball of curvature `-c` is the open set `{x : c‖x‖² < 1}`. Every
//! kernel here takes the curvature magnitude explicitly through a
//! [`CurvedSpace`] and projects its output back inside the
//! `eps_boundary` shell, so points never reach the boundary where
//! `artanh` diverges.
//!
//! The tape-recorded counterparts used during training live in
//! [`crate::autodiff::geometry`]; the two implementations are kept
//! independent so each can be checked against the other.

mod vector;

pub use vector::{dot, norm, scale, sub};

use thiserror::Error;

/// Default containment margin.
pub const EPS_BOUNDARY: f64 = 1e-5;
/// Inputs to `artanh` are clamped to `[-ARTANH_CLAMP, ARTANH_CLAMP]`.
pub const ARTANH_CLAMP: f64 = 1.0 - 1e-15;
/// Floor for norms used as divisors.
pub const MIN_NORM: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("curvature must be positive and finite, got {0}")]
    InvalidCurvature(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("points belong to different spaces (c = {left} vs c = {right})")]
    SpaceMismatch { left: f64, right: f64 },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("point lies outside the ball (c·‖y‖² = {0})")]
    OutsideBall(f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// A Poincaré ball with curvature magnitude `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedSpace {
    c: f64,
    eps_boundary: f64,
}

impl CurvedSpace {
    pub fn new(c: f64) -> Result<Self> {
        Self::with_margin(c, EPS_BOUNDARY)
    }

    pub fn with_margin(c: f64, eps_boundary: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(GeometryError::InvalidCurvature(c));
        }
        Ok(Self { c, eps_boundary })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eps_boundary(&self) -> f64 {
        self.eps_boundary
    }

    /// Largest Euclidean norm a point may have: `(1 - eps) / √c`.
    pub fn max_norm(&self) -> f64 {
        (1.0 - self.eps_boundary) / self.c.sqrt()
    }

    /// Conformal factor `λ_x = 2 / (1 - c‖x‖²)`.
    pub fn conformal_factor(&self, x: &BallPoint) -> f64 {
        2.0 / (1.0 - self.c * dot(&x.coords, &x.coords))
    }

    pub fn origin(&self, dim: usize) -> BallPoint {
        BallPoint {
            coords: vec![0.0; dim],
            space: *self,
        }
    }

    /// Wraps `v` as a point, rescaling it onto the containment shell if
    /// it lies outside.
    pub fn project(&self, v: &[f64]) -> Result<BallPoint> {
        check_finite(v)?;
        Ok(BallPoint {
            coords: self.clip(v.to_vec()),
            space: *self,
        })
    }

    /// Accepts `y` as a point only if it is strictly inside the ball.
    pub fn point(&self, y: &[f64]) -> Result<BallPoint> {
        check_finite(y)?;
        let r2 = self.c * dot(y, y);
        if r2 >= 1.0 {
            return Err(GeometryError::OutsideBall(r2));
        }
        Ok(BallPoint {
            coords: self.clip(y.to_vec()),
            space: *self,
        })
    }

    fn clip(&self, mut v: Vec<f64>) -> Vec<f64> {
        let n = norm(&v);
        let max = self.max_norm();
        if n > max {
            let k = max / n;
            v.iter_mut().for_each(|x| *x *= k);
        }
        v
    }

    fn same(&self, other: &CurvedSpace) -> Result<()> {
        if self.c != other.c {
            return Err(GeometryError::SpaceMismatch {
                left: self.c,
                right: other.c,
            });
        }
        Ok(())
    }

    /// Möbius addition `x ⊕_c y`.
    pub fn mobius_add(&self, x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
        self.same(&x.space)?;
        self.same(&y.space)?;
        check_dims(x.dim(), y.dim())?;
        let c = self.c;
        let xy = dot(&x.coords, &y.coords);
        let x2 = dot(&x.coords, &x.coords);
        let y2 = dot(&y.coords, &y.coords);
        let a = 1.0 + 2.0 * c * xy + c * y2;
        let b = 1.0 - c * x2;
        let den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
        let coords: Vec<f64> = x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(xi, yi)| (a * xi + b * yi) / den)
            .collect();
        self.project(&coords)
    }

    /// Gyro-inverse `⊖x = -x`.
    pub fn negate(&self, x: &BallPoint) -> BallPoint {
        BallPoint {
            coords: x.coords.iter().map(|v| -v).collect(),
            space: *self,
        }
    }

    /// Exponential map at base point `x`.
    pub fn exp_map(&self, x: &BallPoint, v: &TangentVector) -> Result<BallPoint> {
        self.same(&x.space)?;
        check_dims(x.dim(), v.coords.len())?;
        check_finite(&v.coords)?;
        let vn = norm(&v.coords);
        if vn == 0.0 {
            return Ok(x.clone());
        }
        let sc = self.c.sqrt();
        let lambda = self.conformal_factor(x);
        let k = (sc * lambda * vn / 2.0).tanh() / (sc * vn.max(MIN_NORM));
        let step = self.project(&scale(&v.coords, k))?;
        self.mobius_add(x, &step)
    }

    /// Logarithmic map at base point `x`; returns the zero vector when
    /// `y == x`.
    pub fn log_map(&self, x: &BallPoint, y: &BallPoint) -> Result<TangentVector> {
        self.same(&x.space)?;
        self.same(&y.space)?;
        check_dims(x.dim(), y.dim())?;
        let r2 = self.c * dot(&y.coords, &y.coords);
        if r2 >= 1.0 {
            return Err(GeometryError::OutsideBall(r2));
        }
        let diff = self.mobius_add(&self.negate(x), y)?;
        let dn = norm(&diff.coords);
        if dn == 0.0 {
            return Ok(TangentVector::zeros(x.dim()));
        }
        let sc = self.c.sqrt();
        let lambda = self.conformal_factor(x);
        let k = 2.0 / (sc * lambda) * artanh_clamped(sc * dn) / dn.max(MIN_NORM);
        Ok(TangentVector {
            coords: scale(&diff.coords, k),
        })
    }

    /// `exp_0(v)` written in its closed form at the origin.
    pub fn exp0(&self, v: &[f64]) -> Result<BallPoint> {
        check_finite(v)?;
        let vn = norm(v);
        if vn == 0.0 {
            return Ok(self.origin(v.len()));
        }
        let sc = self.c.sqrt();
        self.project(&scale(v, (sc * vn).tanh() / (sc * vn.max(MIN_NORM))))
    }

    /// `log_0(y)` written in its closed form at the origin.
    pub fn log0(&self, y: &BallPoint) -> Result<TangentVector> {
        self.same(&y.space)?;
        let yn = norm(&y.coords);
        if yn == 0.0 {
            return Ok(TangentVector::zeros(y.dim()));
        }
        let sc = self.c.sqrt();
        let k = artanh_clamped(sc * yn) / (sc * yn.max(MIN_NORM));
        Ok(TangentVector {
            coords: scale(&y.coords, k),
        })
    }

    /// Hyperbolic matrix-vector product `M ⊗_c x = exp_0(M log_0(x))`.
    /// `m` is row-major with `rows` rows.
    pub fn mobius_matvec(&self, m: &[f64], rows: usize, x: &BallPoint) -> Result<BallPoint> {
        let cols = x.dim();
        if m.len() != rows * cols {
            return Err(GeometryError::DimensionMismatch {
                left: m.len(),
                right: rows * cols,
            });
        }
        let t = self.log0(x)?;
        let mv: Vec<f64> = m.chunks(cols).map(|row| dot(row, &t.coords)).collect();
        self.exp0(&mv)
    }

    /// Hyperbolic activation `σ^{⊗_c}(x) = exp_0(σ(log_0(x)))`.
    pub fn activation(&self, sigma: impl Fn(f64) -> f64, x: &BallPoint) -> Result<BallPoint> {
        let t = self.log0(x)?;
        let s: Vec<f64> = t.coords.iter().map(|&v| sigma(v)).collect();
        self.exp0(&s)
    }

    /// Geodesic distance `(2/√c) artanh(√c ‖(-x) ⊕ y‖)`.
    pub fn distance(&self, x: &BallPoint, y: &BallPoint) -> Result<f64> {
        let diff = self.mobius_add(&self.negate(x), y)?;
        let sc = self.c.sqrt();
        Ok(2.0 / sc * artanh_clamped(sc * norm(&diff.coords)))
    }
}

/// A point strictly inside a [`CurvedSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
    space: CurvedSpace,
}

impl BallPoint {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn space(&self) -> &CurvedSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A tangent vector; every use in this crate is based at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { coords: vec![0.0; dim] }
    }
}

/// The standard activations used by the hyperbolic layers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    LeakyRelu,
    Tanh,
    Identity,
}

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => leaky_relu(x, LEAKY_SLOPE),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn artanh_clamped(x: f64) -> f64 {
    x.clamp(-ARTANH_CLAMP, ARTANH_CLAMP).atanh()
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(GeometryError::DimensionMismatch { left, right });
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}
