use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};

use super::povm::Povm;
use super::states::two_mubs;
use crate::error::{dim_err, Error, Result};
use crate::qmath::{phase, ComplexMatrix, Ket, I, ONE, ZERO};

/// Residual accepted when reconstructing measurement operators from question states.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

/// The referee's question states and the linear map from them back to
/// Bob's measurement operators, `E_{b|j} = Σ_k s_{bjk} τ_k`.
///
/// The referee physically sends `τ_k^T = |φ_k⟩⟨φ_k|`; [`Self::sent_ket`]
/// returns `|φ_k⟩` and [`Self::tau`] returns the transposed projector.
#[derive(Clone, Debug)]
pub struct QuestionStateSet {
    dim: usize,
    sent: Vec<Ket>,
    taus: Vec<ComplexMatrix>,
    /// `coeffs[j][b][k]`
    coeffs: Vec<Vec<Vec<f64>>>,
    targets: Vec<Povm>,
}

impl QuestionStateSet {
    /// Assembles a set from sent kets, coefficients `[j][b][k]` and the target
    /// measurements, checking the reconstruction identity.
    pub fn new(sent: Vec<Ket>, coeffs: Vec<Vec<Vec<f64>>>, targets: Vec<Povm>) -> Result<Self> {
        let dim = targets
            .first()
            .map(Povm::dim)
            .ok_or_else(|| Error::InvalidParameter("no target measurements".into()))?;
        if sent.iter().any(|k| k.dim() != dim || !k.is_normalized(1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "question states must be unit vectors of dimension {dim}"
            )));
        }
        if coeffs.len() != targets.len()
            || coeffs
                .iter()
                .zip(&targets)
                .any(|(cj, t)| cj.len() != t.outcomes() || cj.iter().any(|cb| cb.len() != sent.len()))
        {
            return Err(dim_err("coefficient table does not match states and targets"));
        }
        let taus = sent.iter().map(|k| k.projector().transpose()).collect();
        let set = Self {
            dim,
            sent,
            taus,
            coeffs,
            targets,
        };
        let residual = set.reconstruction_residual();
        if residual > RECONSTRUCTION_TOL {
            return Err(Error::InvalidParameter(format!(
                "question states reconstruct the targets only within {residual:.3e}"
            )));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sent.is_empty()
    }

    pub fn settings(&self) -> usize {
        self.targets.len()
    }

    /// `|φ_k⟩`, the ket the referee prepares.
    pub fn sent_ket(&self, k: usize) -> &Ket {
        &self.sent[k]
    }

    /// `τ_k^T`, the density matrix the referee sends.
    pub fn sent_state(&self, k: usize) -> ComplexMatrix {
        self.sent[k].projector()
    }

    pub fn tau(&self, k: usize) -> &ComplexMatrix {
        &self.taus[k]
    }

    pub fn coeff(&self, b: usize, j: usize, k: usize) -> f64 {
        self.coeffs[j][b][k]
    }

    pub fn coeffs_for(&self, b: usize, j: usize) -> &[f64] {
        &self.coeffs[j][b]
    }

    pub fn targets(&self) -> &[Povm] {
        &self.targets
    }

    /// `Σ_k s_{bjk} τ_k`.
    pub fn reconstruct(&self, b: usize, j: usize) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for (s, tau) in self.coeffs[j][b].iter().zip(&self.taus) {
            if *s != 0.0 {
                acc += &tau.scale_real(*s);
            }
        }
        acc
    }

    /// `max_{b,j} ‖Σ_k s_{bjk} τ_k − E_{b|j}‖_∞` (entrywise).
    pub fn reconstruction_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, povm) in self.targets.iter().enumerate() {
            for b in 0..povm.outcomes() {
                worst = worst.max(self.reconstruct(b, j).max_abs_diff(povm.element(b)));
            }
        }
        worst
    }
}

/// The twelve qutrit question states (computational kets and two-level
/// superpositions) with their published decomposition of both MUB settings.
pub fn question_states_qutrit() -> Result<QuestionStateSet> {
    let h = FRAC_1_SQRT_2;
    let two_level = |a: usize, b: usize, theta: f64| {
        let mut amps = vec![ZERO; 3];
        amps[a] = ONE * h;
        amps[b] = phase(theta) * h;
        Ket::from_amplitudes(amps)
    };
    let sent = vec![
        Ket::basis(3, 0)?,
        Ket::basis(3, 1)?,
        Ket::basis(3, 2)?,
        two_level(0, 1, 0.0),
        two_level(0, 2, 0.0),
        two_level(1, 2, 0.0),
        two_level(0, 1, -2.0 * PI / 3.0),
        two_level(0, 1, -4.0 * PI / 3.0),
        two_level(0, 2, -8.0 * PI / 3.0),
        two_level(0, 2, -4.0 * PI / 3.0),
        two_level(1, 2, -2.0 * PI / 3.0),
        two_level(1, 2, -4.0 * PI / 3.0),
    ];

    let unit = |k: usize| {
        let mut c = vec![0.0; 12];
        c[k] = 1.0;
        c
    };
    // 1-based state labels of the "+2/3" terms; every Fourier projector
    // also carries -1/3 on each computational state.
    let fourier = |ks: [usize; 3]| {
        let mut c = vec![0.0; 12];
        c[..3].fill(-1.0 / 3.0);
        for k in ks {
            c[k - 1] = 2.0 / 3.0;
        }
        c
    };
    let coeffs = vec![
        vec![unit(0), unit(1), unit(2)],
        vec![fourier([4, 5, 6]), fourier([7, 10, 11]), fourier([8, 9, 12])],
    ];
    QuestionStateSet::new(sent, coeffs, two_mubs(3)?)
}

/// Informationally complete two-level question states for dimension `d`:
/// `|i⟩`, `(|i⟩+|j⟩)/√2` and `(|i⟩+i|j⟩)/√2` for `i < j`, in that order.
/// The returned kets are the ones sent, i.e. conjugates of the `τ_k` kets.
pub fn two_level_question_kets(d: usize) -> Vec<Ket> {
    let h = FRAC_1_SQRT_2;
    let mut taus_kets = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut amps = vec![ZERO; d];
        amps[i] = ONE;
        taus_kets.push(amps);
    }
    for i in 0..d {
        for j in i + 1..d {
            for w in [ONE, I] {
                let mut amps = vec![ZERO; d];
                amps[i] = ONE * h;
                amps[j] = w * h;
                taus_kets.push(amps);
            }
        }
    }
    taus_kets
        .into_iter()
        .map(|a| Ket::from_amplitudes(a).conj())
        .collect()
}

/// Real coordinates of a Hermitian matrix: diagonal, then `(Re, Im)` of the
/// strict upper triangle.
fn hermitian_coords(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

/// Least-squares (minimum-norm) coefficients `s_k` with `Σ_k s_k τ_k = target`.
pub fn decompose(target: &ComplexMatrix, taus: &[ComplexMatrix]) -> Result<Vec<f64>> {
    let n = target.rows();
    if taus.iter().any(|t| t.rows() != n || t.cols() != n) {
        return Err(dim_err("question states and target differ in dimension"));
    }
    let rows = n * n;
    let cols: Vec<Vec<f64>> = taus.iter().map(hermitian_coords).collect();
    let a = DMatrix::from_fn(rows, taus.len(), |r, c| cols[c][r]);
    let b = DVector::from_vec(hermitian_coords(target));
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidParameter(format!("decomposition failed: {e}")))?;
    Ok(x.iter().copied().collect())
}

/// Question states for arbitrary `d` built from the two-level family, with
/// coefficients obtained by solving the linear reconstruction system.
pub fn question_states_generic(d: usize, targets: Vec<Povm>) -> Result<QuestionStateSet> {
    if targets.iter().any(|t| t.dim() != d) {
        return Err(dim_err("target measurements must act on dimension d"));
    }
    let sent = two_level_question_kets(d);
    let taus: Vec<ComplexMatrix> = sent.iter().map(|k| k.projector().transpose()).collect();
    let coeffs = targets
        .iter()
        .map(|povm| {
            povm.elements()
                .iter()
                .map(|e| decompose(e, &taus))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    QuestionStateSet::new(sent, coeffs, targets)
}

/// The question-state set used for the two-MUB scenario in dimension `d`:
/// the published list for qutrits, the solved two-level family otherwise.
pub fn question_states(d: usize) -> Result<QuestionStateSet> {
    if d == 3 {
        question_states_qutrit()
    } else {
        question_states_generic(d, two_mubs(d)?)
    }
}
