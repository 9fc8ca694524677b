use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{dim_err, Error, Result};

/// A pure-state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
}

impl Ket {
    /// Wraps raw amplitudes without normalizing.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Wraps amplitudes and rescales to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(dim_err(format!("basis index {index} >= dimension {dim}")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(dim_err(format!("inner product of dims {} and {}", self.dim(), other.dim())));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |r, c| self.amplitudes[r] * self.amplitudes[c].conj())
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ket { amplitudes }
    }

    pub fn conj(&self) -> Ket {
        Ket {
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Column vector as a `dim x 1` matrix.
    pub fn to_column(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), 1, |r, _| self.amplitudes[r])
    }
}
