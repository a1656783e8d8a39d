//! Minimal reverse-mode automatic differentiation over dense 2-D tensors.
//!
//! A [`Graph`] borrows a [`ParameterStore`], records every operation as a
//! node, and [`Graph::backward`] walks the tape in reverse to produce
//! [`Gradients`]. All arithmetic is `f64`.
//!
//! ```
//! use esnli::autodiff::{Graph, ParameterStore, Tensor};
//!
//! let mut store = ParameterStore::new(0);
//! let x = store.insert("x", Tensor::row(&[1.0, 2.0, 3.0])).unwrap();
//! let mut g = Graph::new(&store);
//! let xn = g.param(x);
//! let sq = g.mul(xn, xn).unwrap();
//! let loss = g.sum(sq);
//! let grads = g.backward(loss).unwrap();
//! assert_eq!(grads.param(x).unwrap().data(), &[2.0, 4.0, 6.0]);
//! ```

mod checkpoint;
mod gradcheck;
mod graph;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, numeric_gradient, GradCheckReport};
pub use graph::{Gradients, Graph, NodeId};
pub use optim::{sgd_step, LrSchedule};
pub use params::{ParamId, ParameterStore};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{0} over an empty axis")]
    EmptyAxis(&'static str),
    #[error("every position of a softmax lane is masked")]
    AllMasked,
    #[error("backward needs a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
    #[error("objective is not finite ({0})")]
    NonFiniteObjective(f64),
    #[error("duplicate parameter name {0}")]
    DuplicateParameter(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
