use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("signal must have at least one time step and one dimension")]
    Empty,
    #[error("row {row} has {found} values, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-finite value at time {time}, dimension {dim}")]
    NonFinite { time: usize, dim: usize },
}

/// A discrete-time, `dim`-dimensional signal sampled at unit steps.
///
/// Values are stored row-major: `values[t * dim + k]` is dimension `k` at
/// zero-based step `t`. Public time indices elsewhere in the crate are
/// one-based to match the file formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    dim: usize,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self, SignalError> {
        if dim == 0 || values.is_empty() {
            return Err(SignalError::Empty);
        }
        if values.len() % dim != 0 {
            return Err(SignalError::Ragged {
                row: values.len() / dim,
                found: values.len() % dim,
                expected: dim,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite {
                time: i / dim + 1,
                dim: i % dim,
            });
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, SignalError> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(SignalError::Ragged {
                    row,
                    found: r.len(),
                    expected: dim,
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(dim, values)
    }

    /// Constant signal repeating `sample` for `len` steps.
    pub fn constant(sample: &[f64], len: usize) -> Result<Self, SignalError> {
        let mut values = Vec::with_capacity(sample.len() * len);
        for _ in 0..len {
            values.extend_from_slice(sample);
        }
        Self::new(sample.len(), values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample at zero-based step `t`.
    pub fn at(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(Signal::new(0, vec![]), Err(SignalError::Empty));
        assert!(matches!(
            Signal::new(2, vec![1.0, 2.0, 3.0]),
            Err(SignalError::Ragged { .. })
        ));
        assert!(matches!(
            Signal::new(1, vec![1.0, f64::NAN]),
            Err(SignalError::NonFinite { time: 2, dim: 0 })
        ));
    }

    #[test]
    fn row_access() {
        let s = Signal::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.at(1), &[3.0, 4.0]);
    }
}
