use std::f64::consts::PI;

use super::povm::Povm;
use crate::error::{Error, Result};
use crate::qmath::{phase, ComplexMatrix, Complex64, Ket};

/// `|Φ_d⟩ = (1/√d) Σ_i |ii⟩`.
pub fn max_entangled(d: usize) -> Result<Ket> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        amps[i * d + i] = Complex64::new(amp, 0.0);
    }
    Ok(Ket::from_amplitudes(amps))
}

/// The two measurement bases used by both parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MubSetting {
    /// `|b⟩`, the computational basis.
    Computational,
    /// `|b⟩ = (1/√d) Σ_k e^{2πi bk/d} |k⟩`.
    Fourier,
}

impl MubSetting {
    pub const BOTH: [MubSetting; 2] = [MubSetting::Computational, MubSetting::Fourier];

    /// Position of the setting in the two-setting scenario (0 or 1).
    pub fn index(self) -> usize {
        match self {
            MubSetting::Computational => 0,
            MubSetting::Fourier => 1,
        }
    }
}

/// Basis vectors of a setting, ordered by outcome.
pub fn mub_kets(d: usize, setting: MubSetting) -> Result<Vec<Ket>> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let kets = match setting {
        MubSetting::Computational => (0..d).map(|b| Ket::basis(d, b)).collect::<Result<_>>()?,
        MubSetting::Fourier => {
            let norm = 1.0 / (d as f64).sqrt();
            (0..d)
                .map(|b| {
                    // exponent reduced mod d: e^{i8π/3} is stored as e^{i2π/3}
                    let amps = (0..d)
                        .map(|k| phase(2.0 * PI * ((b * k) % d) as f64 / d as f64) * norm)
                        .collect();
                    Ket::from_amplitudes(amps)
                })
                .collect()
        }
    };
    Ok(kets)
}

/// Projective measurement for one of the two mutually unbiased settings.
pub fn fourier_mub(d: usize, setting: MubSetting) -> Result<Povm> {
    Povm::from_basis(&mub_kets(d, setting)?)
}

/// Both settings, computational first.
pub fn two_mubs(d: usize) -> Result<Vec<Povm>> {
    MubSetting::BOTH.iter().map(|&s| fourier_mub(d, s)).collect()
}

/// `p |Φ_d⟩⟨Φ_d| + (1 - p) I / d²`.
#[derive(Clone, Debug)]
pub struct IsotropicState {
    d: usize,
    p: f64,
    matrix: ComplexMatrix,
}

impl IsotropicState {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn visibility(&self) -> f64 {
        self.p
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

pub fn isotropic(d: usize, p: f64) -> Result<IsotropicState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("visibility {p} outside [0, 1]")));
    }
    let phi = max_entangled(d)?.projector();
    let noise = ComplexMatrix::identity(d * d).scale_real((1.0 - p) / (d * d) as f64);
    let matrix = &phi.scale_real(p) + &noise;
    Ok(IsotropicState { d, p, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{hermitian_eigen, is_psd, partial_trace, ONE};

    #[test]
    fn phi_small_cases() {
        let phi2 = max_entangled(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [h, 0.0, 0.0, h];
        for (a, w) in phi2.amplitudes().iter().zip(want) {
            assert!((a.re - w).abs() < 1e-15 && a.im == 0.0);
        }
        let phi3 = max_entangled(3).unwrap();
        for i in 0..9 {
            let want = if i % 4 == 0 { 1.0 / 3f64.sqrt() } else { 0.0 };
            assert!((phi3.amplitudes()[i].re - want).abs() < 1e-15);
        }
        assert!(max_entangled(1).is_err());
    }

    #[test]
    fn phi_marginals_are_maximally_mixed() {
        for d in 2..=4 {
            let rho = max_entangled(d).unwrap().projector();
            let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
            for keep in 0..2 {
                let r = partial_trace(&rho, &[d, d], keep).unwrap();
                assert!(r.max_abs_diff(&mixed) < 1e-15);
            }
        }
    }

    #[test]
    fn qutrit_fourier_outcome_one() {
        let kets = mub_kets(3, MubSetting::Fourier).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let want = [ONE * s, phase(2.0 * PI / 3.0) * s, phase(4.0 * PI / 3.0) * s];
        for (a, w) in kets[1].amplitudes().iter().zip(want) {
            assert!((a - w).norm() < 1e-15);
        }
        // last component of outcome 2 written as e^{i8π/3} gives the same projector
        let s2 = [ONE * s, phase(4.0 * PI / 3.0) * s, phase(8.0 * PI / 3.0) * s];
        let written = Ket::from_amplitudes(s2.to_vec()).projector();
        assert!(written.max_abs_diff(&kets[2].projector()) < 1e-12);
    }

    #[test]
    fn qubit_bases() {
        let z = fourier_mub(2, MubSetting::Computational).unwrap();
        let x = fourier_mub(2, MubSetting::Fourier).unwrap();
        let half = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let half_minus = ComplexMatrix::from_real_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]);
        assert!(x.element(0).max_abs_diff(&half) < 1e-15);
        assert!(x.element(1).max_abs_diff(&half_minus) < 1e-15);
        assert_eq!(z.element(1), &Ket::basis(2, 1).unwrap().projector());
    }

    #[test]
    fn isotropic_spectrum() {
        let rho = isotropic(3, 0.5).unwrap();
        let eig = hermitian_eigen(rho.matrix()).unwrap();
        let low = 0.5 / 9.0;
        for v in &eig.values[..8] {
            assert!((v - low).abs() < 1e-12);
        }
        assert!((eig.values[8] - (0.5 + low)).abs() < 1e-12);
        assert!(is_psd(rho.matrix(), 1e-12));
    }

    #[test]
    fn isotropic_extremes() {
        let pure = isotropic(3, 1.0).unwrap();
        assert!(pure.matrix().max_abs_diff(&max_entangled(3).unwrap().projector()) < 1e-15);
        let noise = isotropic(3, 0.0).unwrap();
        assert!(noise.matrix().max_abs_diff(&ComplexMatrix::identity(9).scale_real(1.0 / 9.0)) < 1e-15);
        assert!(isotropic(3, 1.01).is_err());
        assert!(isotropic(3, -0.1).is_err());
    }
}
