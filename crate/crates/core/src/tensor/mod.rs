//! Minimal reverse-mode differentiable tensors.
//!
//! Everything the detector needs is expressible with a handful of fused
//! operations recorded on a [`Tape`]: valid 1-D convolution, the
//! filter-and-sum multichannel convolution, a multi-kernel convolution
//! bank, max-pooling, ReLU, affine layers, an LSTM cell, and weighted
//! softmax cross-entropy. Values are stored flat in row-major `f64`;
//! finite-difference checking lives in [`grad_check`].

mod grad_check;
mod tape;

pub use grad_check::{grad_check, GradCheckReport};
pub use tape::{Tape, Var};

use crate::error::{Error, Result};

/// Dense row-major tensor of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Build a tensor, validating that `data` matches `shape`.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "shape {:?} expects {} values, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// 1-D tensor from a value slice.
    pub fn vector(values: &[f64]) -> Self {
        Tensor {
            shape: vec![values.len()],
            data: values.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Scalar value of a one-element tensor.
    pub fn scalar(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub(crate) fn ensure_finite(&self, context: &str) -> Result<()> {
        ensure_finite(&self.data, context)
    }
}

pub(crate) fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "{context}: non-finite value {} at index {idx}",
            values[idx]
        )));
    }
    Ok(())
}
