//! Dense complex linear algebra for small quantum systems (side ≤ 16).

mod eigen;
mod ket;
mod matrix;
pub mod random;

pub use eigen::{
    eig_max_hermitian, eig_min_hermitian, hermitian_eigen, hermitian_op_norm, is_psd,
    HermitianEigen, HERMITIAN_TOL,
};
pub use ket::Ket;
pub use matrix::{kron, kron_all, partial_trace, ComplexMatrix, I, ONE, ZERO};
pub use num_complex::Complex64;

/// `e^{iθ}`.
pub fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}
