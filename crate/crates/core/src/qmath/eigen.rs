//! Hermitian eigen-decomposition by cyclic complex Jacobi rotations.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Tolerance on `M - M†` accepted by the eigen routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch("eigen-decomposition of a non-square matrix".into()));
    }
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            return Ok(sorted(a, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    Err(Error::EigenNoConvergence)
}

/// Zeroes `a[p][q]` with the unitary `U = diag(1, e^{-iφ}) · G(θ)` acting on
/// coordinates `(p, q)`, updating `a ← U† a U` and `v ← v U`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let h = g.norm();
    if h == 0.0 {
        return;
    }
    let phase = g / h;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = 0.5 * (2.0 * h).atan2(app - aqq);
    let (s, c) = theta.sin_cos();
    let ph = phase.conj();
    // U = [[c, -s], [ph s, ph c]] on (p, q)
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(-s, 0.0);
    let u_qp = ph * s;
    let u_qq = ph * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

fn sorted(a: ComplexMatrix, v: ComplexMatrix) -> HermitianEigen {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn eig_max_hermitian(h: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigen(h)?;
    eig.values
        .last()
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn eig_min_hermitian(h: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigen(h)?;
    eig.values
        .first()
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))
}

/// True iff the smallest eigenvalue is at least `-tol`. Non-Hermitian input
/// (beyond [`HERMITIAN_TOL`]) is never PSD.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    match eig_min_hermitian(m) {
        Ok(min) => min >= -tol,
        Err(_) => false,
    }
}

/// Largest singular value of a Hermitian matrix, `max |λ|`.
pub fn hermitian_op_norm(h: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigen(h)?;
    Ok(eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}
