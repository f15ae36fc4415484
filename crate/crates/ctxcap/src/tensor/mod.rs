//! Minimal dense-tensor engine with reverse-mode differentiation.
//!
//! All model quantities are two-dimensional row-major tensors ([1, n] for row
//! vectors, [n, 1] for columns, [1, 1] for scalars). Forward operations are
//! recorded on a [`Tape`]; [`Tape::backward`] accumulates exact analytic
//! gradients in reverse order. Parameters live outside the tape in a
//! [`ParamStore`] and are injected as leaves per forward pass.
//!
//! Training runs at `f32`; gradient checking runs the same code at `f64`.

mod adam;
mod checkpoint;
mod gradcheck;
mod params;
mod scalar;
mod tape;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheckOptions};
pub use params::{ParamStore, TapeParams};
pub use scalar::Scalar;
pub use tape::{NodeId, Tape};

use thiserror::Error;

/// Errors produced by tensor construction, tape operations and parameter IO.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: left {lhs:?} vs right {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: invalid argument: {message}")]
    InvalidArgument { op: &'static str, message: String },
    #[error("index {index:?} out of bounds for shape {shape:?} in {op}")]
    IndexOutOfBounds {
        op: &'static str,
        index: Vec<usize>,
        shape: Vec<usize>,
    },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{name}` has no gradient slot of matching shape")]
    MissingGradient { name: String },
    #[error("non-finite loss encountered: {0}")]
    NonFiniteLoss(f64),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    CheckpointFormat(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Dense 2-D tensor with a same-shape gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F: Scalar> {
    shape: Vec<usize>,
    values: Vec<F>,
    grad: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            shape: vec![rows, cols],
            values: vec![F::zero(); rows * cols],
            grad: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<F>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(TensorError::InvalidArgument {
                op: "Tensor::from_values",
                message: format!(
                    "{} values do not fill shape [{rows}, {cols}]",
                    values.len()
                ),
            });
        }
        if rows == 0 || cols == 0 {
            return Err(TensorError::InvalidArgument {
                op: "Tensor::from_values",
                message: "dimensions must be positive".into(),
            });
        }
        let n = values.len();
        Ok(Tensor {
            shape: vec![rows, cols],
            values,
            grad: vec![F::zero(); n],
        })
    }

    pub fn scalar(v: F) -> Self {
        Tensor {
            shape: vec![1, 1],
            values: vec![v],
            grad: vec![F::zero()],
        }
    }

    pub fn row(values: Vec<F>) -> Result<Self> {
        let n = values.len();
        Self::from_values(1, n, values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn grad(&self) -> &[F] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [F] {
        &mut self.grad
    }

    /// `grad += src * scale`, used when harvesting per-sample tape gradients.
    pub fn accumulate_grad(&mut self, src: &[F], scale: F) {
        debug_assert_eq!(src.len(), self.grad.len());
        for (g, s) in self.grad.iter_mut().zip(src) {
            *g = *g + *s * scale;
        }
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.iter_mut() {
            *g = F::zero();
        }
    }
}
