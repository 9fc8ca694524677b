use crate::error::{dim_err, Error, Result};
use crate::qmath::{is_psd, ComplexMatrix, Ket};

/// Tolerance for positivity and completeness of measurement operators.
pub const POVM_TOL: f64 = 1e-10;

/// A measurement: positive operators, one per outcome, summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(elements, POVM_TOL)
    }

    pub fn with_tolerance(elements: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidParameter("a POVM needs at least one element".into()))?;
        let dim = first.rows();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (b, e) in elements.iter().enumerate() {
            if e.rows() != dim || e.cols() != dim {
                return Err(dim_err(format!("POVM element {b} is not {dim}x{dim}")));
            }
            if !is_psd(e, tol) {
                return Err(Error::InvalidParameter(format!(
                    "POVM element {b} is not positive semidefinite"
                )));
            }
            total += e;
        }
        let defect = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > tol {
            return Err(Error::InvalidParameter(format!(
                "POVM elements sum to identity only within {defect:.3e}"
            )));
        }
        Ok(Self { dim, elements })
    }

    /// Projective measurement onto an orthonormal basis.
    pub fn from_basis(kets: &[Ket]) -> Result<Self> {
        Self::new(kets.iter().map(Ket::projector).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, b: usize) -> &ComplexMatrix {
        &self.elements[b]
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// Worst outcome-wise deviation `max_b max_ij |E_b - F_b|`.
    pub fn max_abs_diff(&self, other: &Povm) -> f64 {
        if self.outcomes() != other.outcomes() {
            return f64::INFINITY;
        }
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}
