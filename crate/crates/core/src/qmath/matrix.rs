use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{dim_err, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex matrix stored row-major.
///
/// Composite systems use the index convention `i = i_A * d_B + i_B`
/// throughout the crate, and transposes are taken in the computational basis.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(dim_err(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self {
            rows: n,
            cols: m,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Transpose in the computational basis.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    /// Real part of Tr[self · rhs]; the Hilbert-Schmidt pairing for Hermitian operands.
    pub fn trace_product(&self, rhs: &Self) -> Result<Complex64> {
        if self.cols != rhs.rows || self.rows != rhs.cols {
            return Err(dim_err("trace_product needs A (n x m) and B (m x n)"));
        }
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(r, k)] * rhs[(k, r)];
            }
        }
        Ok(acc)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; infinite for shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        self.zip_with(&adj, |a, b| (a + b) * 0.5)
    }

    /// Largest deviation of `M† M` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.adjoint().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows))
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(dim_err(format!(
                "shape {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

// Operator impls panic on shape mismatch; use the `try_*` methods where shapes
// come from user input.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix add")
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix add");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix sub")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix mul")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Kronecker product of several factors, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

/// Reduced operator on subsystem `keep` of a composite system with local
/// dimensions `dims`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: usize) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(dim_err("partial trace of a non-square matrix"));
    }
    if keep >= dims.len() {
        return Err(dim_err(format!(
            "subsystem {keep} out of range for {} factors",
            dims.len()
        )));
    }
    let total: usize = dims.iter().product();
    if total != m.rows() {
        return Err(dim_err(format!(
            "dims {dims:?} multiply to {total}, matrix side is {}",
            m.rows()
        )));
    }
    let dk = dims[keep];
    // stride of the kept index, and the block structure around it
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for o in 0..outer {
                for n in 0..inner {
                    let r = (o * dk + i) * inner + n;
                    let c = (o * dk + j) * inner + n;
                    acc += m[(r, c)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random::random_hermitian;
    use crate::qmath::Ket;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_basis_projectors() {
        let p0 = Ket::basis(2, 0).unwrap().projector();
        let p1 = Ket::basis(2, 1).unwrap().projector();
        let k = kron(&p0, &p1);
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (1, 1) { ONE } else { ZERO };
                assert_eq!(k[(r, c)], want);
            }
        }
    }

    #[test]
    fn kron_trace_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_hermitian(&mut rng, 3);
            let b = random_hermitian(&mut rng, 3);
            let lhs = kron(&a, &b).trace();
            let rhs = a.trace() * b.trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 3);
        let c = random_hermitian(&mut rng, 2);
        let d = random_hermitian(&mut rng, 3);
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(6);
        assert!(partial_trace(&m, &[2, 2], 0).is_err());
        assert!(partial_trace(&m, &[2, 3], 2).is_err());
        assert!(partial_trace(&ComplexMatrix::zeros(2, 3), &[2], 0).is_err());
    }

    #[test]
    fn partial_trace_three_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 3);
        let c = random_hermitian(&mut rng, 2);
        let m = kron_all(&[&a, &b, &c]);
        let mid = partial_trace(&m, &[2, 3, 2], 1).unwrap();
        let want = b.scale(a.trace() * c.trace());
        assert!(mid.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn matmul_shape_error() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
    }
}
