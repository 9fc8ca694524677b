//! Random states and operators for sampling-based checks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, Ket};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    loop {
        let amps: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(k) = Ket::normalized(amps) {
            return k;
        }
    }
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    g.hermitian_part()
}

/// Random density matrix `A A† / Tr[A A†]` with Ginibre `A`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let aa = &a * &a.adjoint();
    let tr = aa.trace().re;
    aa.scale_real(1.0 / tr).hermitian_part()
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_fn(dim, dim, |r, c| cols[c][r])
}

/// Random probability vector (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
