//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every operation in the order it runs; [`Tape::backward`]
//! walks that order in reverse, so the graph is acyclic by construction.
//! Tensors are 2-D and binary elementwise ops broadcast along unit
//! dimensions, which lets a whole batch of metapath instances flow through
//! one recorded op.
//!
//! ```
//! use msgat::autodiff::{Tape, Tensor};
//!
//! let tape = Tape::new();
//! let x = tape.leaf(Tensor::scalar(2.0));
//! let y = tape.leaf(Tensor::scalar(3.0));
//! let loss = x.mul(&y).unwrap();
//! let grads = tape.backward(&loss).unwrap();
//! assert_eq!(grads.wrt(&x).item(), 3.0);
//! assert_eq!(grads.wrt(&y).item(), 2.0);
//! ```

pub mod geometry;
mod gradcheck;
mod ops;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheck};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

pub(crate) use ops::{softmax_in_place, softplus};
pub(crate) use tape::sigmoid;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("artanh argument {0} outside (-1, 1); clamp upstream")]
    ArtanhDomain(f64),
    #[error("backward already ran on this tape; call reset() first")]
    BackwardTwice,
    #[error("loss must be 1x1, got {0}x{1}")]
    NonScalarLoss(usize, usize),
    #[error("variables from different tapes")]
    ForeignVar,
    #[error("concat of zero tensors")]
    EmptyConcat,
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
