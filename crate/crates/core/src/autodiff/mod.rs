//! Reverse-mode automatic differentiation over dense 2-D `f64` arrays.
//!
//! A [`Tape`] records one forward pass. [`Tape::backward`] performs the usual
//! reverse sweep from a scalar root. [`Tape::grad_graph`] instead records the
//! input gradient as new nodes, which is what a gradient penalty needs: the
//! penalty is a function of a first-order gradient and must itself be
//! differentiated with respect to the network parameters.

mod tape;
mod tensor;

pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("data length {len} does not match shape ({rows}, {cols})")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("ragged rows: expected width {expected}, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("expected a 1x1 tensor, got shape {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("node {0} is not on this tape")]
    UnknownNode(usize),
    #[error("{op}: input outside the domain at flat index {index}")]
    Domain { op: &'static str, index: usize },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("no recorded derivative rule for `{0}`")]
    Unsupported(&'static str),
}
