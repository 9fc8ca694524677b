//! Wave-plate Jones matrices in the (H, V) basis.
//!
//! Angles are in degrees, measured from H towards V. A plate with its fast
//! axis at θ is `R(θ)·J·R(−θ)` with `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`,
//! `J = diag(1, −1)` for a half-wave plate and `J = diag(1, i)` for a
//! quarter-wave plate. Global phases are dropped.

use std::fmt;

use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, Complex64, I, ONE, ZERO};

use super::lm::minimize;

/// Largest deviation from unitarity accepted for a QHQ target.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaveplateKind {
    Hwp,
    Qwp,
}

impl fmt::Display for WaveplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaveplateKind::Hwp => "hwp",
            WaveplateKind::Qwp => "qwp",
        })
    }
}

/// `R(θ)` for θ in degrees.
pub fn rotation(theta_deg: f64) -> ComplexMatrix {
    let (s, c) = theta_deg.to_radians().sin_cos();
    ComplexMatrix::from_real_rows(&[vec![c, -s], vec![s, c]])
}

pub fn jones(kind: WaveplateKind, theta_deg: f64) -> ComplexMatrix {
    let (s, c) = theta_deg.to_radians().sin_cos();
    match kind {
        WaveplateKind::Hwp => {
            let (s2, c2) = (2.0 * s * c, c * c - s * s);
            ComplexMatrix::from_real_rows(&[vec![c2, s2], vec![s2, -c2]])
        }
        WaveplateKind::Qwp => {
            // R diag(1, i) R^T
            let a = Complex64::new(c * c, s * s);
            let b = Complex64::new(s * c, -s * c);
            let d = Complex64::new(s * s, c * c);
            ComplexMatrix::from_rows(&[vec![a, b], vec![b, d]])
        }
    }
}

/// `min_φ ‖A − e^{iφ} B‖_F`.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(crate::error::dim_err("phase distance needs equal shapes"));
    }
    let overlap: Complex64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| y.conj() * x).sum();
    let ph = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - ph * y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Angles (degrees) of a quarter-, half-, quarter-wave plate sandwich.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QhqAngles {
    pub q1: f64,
    pub h: f64,
    pub q2: f64,
}

impl QhqAngles {
    /// `QWP(q1)·HWP(h)·QWP(q2)`.
    pub fn matrix(&self) -> ComplexMatrix {
        let m = jones(WaveplateKind::Qwp, self.q1)
            .matmul(&jones(WaveplateKind::Hwp, self.h))
            .expect("2x2");
        m.matmul(&jones(WaveplateKind::Qwp, self.q2)).expect("2x2")
    }

    fn from_slice(v: &[f64]) -> Self {
        let wrap = |x: f64| x.rem_euclid(180.0);
        Self {
            q1: wrap(v[0]),
            h: wrap(v[1]),
            q2: wrap(v[2]),
        }
    }
}

/// Real residual `e^{−iφ*} M(angles) − T` with φ* the best global phase.
fn qhq_residual(v: &[f64], target: &ComplexMatrix) -> Vec<f64> {
    let m = QhqAngles {
        q1: v[0],
        h: v[1],
        q2: v[2],
    }
    .matrix();
    let overlap = target.trace_product(&m.adjoint()).expect("2x2");
    let ph = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    m.as_slice()
        .iter()
        .zip(target.as_slice())
        .flat_map(|(x, t)| {
            let diff = x * ph - t;
            [diff.re, diff.im]
        })
        .collect()
}

/// Finds wave-plate angles with `QWP(q1)·HWP(h)·QWP(q2) = target` up to a
/// global phase.
pub fn solve_qhq(target: &ComplexMatrix) -> Result<QhqAngles> {
    if target.rows() != 2 || target.cols() != 2 {
        return Err(crate::error::dim_err("QHQ target must be 2x2"));
    }
    let defect = target.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let steps = 12;
    let grid = 180.0 / steps as f64;
    let mut seeds: Vec<(f64, [f64; 3])> = Vec::with_capacity(steps * steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..steps {
                let v = [i as f64 * grid, j as f64 * grid, k as f64 * grid];
                let cost = qhq_residual(&v, target).iter().map(|x| x * x).sum::<f64>();
                seeds.push((cost, v));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (seeds[0].1.to_vec(), f64::INFINITY);
    for (_, start) in seeds.iter().take(8) {
        let (v, cost) = minimize(|x| qhq_residual(x, target), start, 200);
        if cost < best.1 {
            best = (v, cost);
        }
        if best.1 < 1e-24 {
            break;
        }
    }
    let angles = QhqAngles::from_slice(&best.0);
    let dist = phase_distance(&angles.matrix(), target)?;
    if dist > 1e-6 {
        return Err(Error::Network(format!("QHQ solve stalled at distance {dist:.3e}")));
    }
    Ok(angles)
}

/// `[[1, 1], [1, −1]]/√2`.
pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[vec![s, s], vec![s, -s]])
}

/// `diag(1, i)`.
pub fn phase_gate() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, I]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random::random_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn conj_by_rotation(j: &ComplexMatrix, theta: f64) -> ComplexMatrix {
        rotation(theta).matmul(j).unwrap().matmul(&rotation(-theta)).unwrap()
    }

    #[test]
    fn plates_match_rotated_retarders() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t: f64 = rng.random_range(-180.0..180.0);
            let h = jones(WaveplateKind::Hwp, t);
            let q = jones(WaveplateKind::Qwp, t);
            assert!(h.max_abs_diff(&conj_by_rotation(&ComplexMatrix::diag_real(&[1.0, -1.0]), t)) < 1e-14);
            assert!(q.max_abs_diff(&conj_by_rotation(&phase_gate(), t)) < 1e-14);
            assert!(h.unitarity_defect() < 1e-12 && q.unitarity_defect() < 1e-12);
            assert!(phase_distance(&h.matmul(&h).unwrap(), &ComplexMatrix::identity(2)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn named_angles() {
        let h0 = jones(WaveplateKind::Hwp, 0.0);
        assert!(h0.max_abs_diff(&ComplexMatrix::diag_real(&[1.0, -1.0])) < 1e-15);
        assert!(phase_distance(&jones(WaveplateKind::Hwp, 22.5), &hadamard()).unwrap() < 1e-12);
        let swap = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(phase_distance(&jones(WaveplateKind::Hwp, 45.0), &swap).unwrap() < 1e-12);
        assert!(jones(WaveplateKind::Qwp, 0.0).max_abs_diff(&phase_gate()) < 1e-15);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let h = hadamard();
        let shifted = h.scale(Complex64::from_polar(1.0, 0.7));
        assert!(phase_distance(&h, &shifted).unwrap() < 1e-12);
        assert!(phase_distance(&h, &ComplexMatrix::identity(2)).unwrap() > 0.5);
    }

    #[test]
    fn qhq_reconstructs_named_and_random_unitaries() {
        for t in [ComplexMatrix::identity(2), hadamard(), phase_gate()] {
            let a = solve_qhq(&t).unwrap();
            assert!(phase_distance(&a.matrix(), &t).unwrap() < 1e-6);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..10 {
            let t = random_unitary(&mut rng, 2);
            let a = solve_qhq(&t).unwrap();
            assert!(phase_distance(&a.matrix(), &t).unwrap() < 1e-6);
        }
    }

    #[test]
    fn qhq_rejects_non_unitary() {
        let m = ComplexMatrix::diag_real(&[1.0, 0.5]);
        assert!(matches!(solve_qhq(&m), Err(Error::NotUnitary(_))));
        assert!(solve_qhq(&ComplexMatrix::identity(3)).is_err());
    }
}
