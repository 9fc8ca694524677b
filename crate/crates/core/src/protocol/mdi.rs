use crate::error::{dim_err, Error, Result};
use crate::qmath::{kron, ComplexMatrix};
use crate::scenario::{max_entangled, Povm, QuestionStateSet, SteeringFunctional};

use super::table::measurement_shape;
use super::witness::WitnessReport;

/// Measurement-device-independent data `P(a, Yes | j, τ_k^T)`, indexed by
/// raw questions `k`. The `(b, j)` view is derived through the question
/// set's decomposition coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MdiTable {
    dim: usize,
    alice_outcomes: usize,
    settings: usize,
    questions: usize,
    /// `probs[(j * na + a) * K + k]`
    probs: Vec<f64>,
}

impl MdiTable {
    pub fn new(dim: usize, alice_outcomes: usize, settings: usize, questions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alice_outcomes * settings * questions {
            return Err(dim_err(format!(
                "MDI table needs {} entries, got {}",
                alice_outcomes * settings * questions,
                probs.len()
            )));
        }
        if let Some(v) = probs.iter().find(|&&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::InvalidParameter(format!("invalid probability {v}")));
        }
        Ok(Self {
            dim,
            alice_outcomes,
            settings,
            questions,
            probs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alice_outcomes(&self) -> usize {
        self.alice_outcomes
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    /// `P(a, Yes | j, τ_k^T)`.
    pub fn get(&self, a: usize, j: usize, k: usize) -> f64 {
        self.probs[(j * self.alice_outcomes + a) * self.questions + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// `P(a, Yes | j, τ^T_{b,j}) = Σ_k s_{bjk} P(a, Yes | j, τ_k^T)`.
    pub fn reconstructed(&self, qset: &QuestionStateSet, a: usize, b: usize, j: usize) -> f64 {
        qset.coeffs_for(b, j)
            .iter()
            .enumerate()
            .map(|(k, s)| s * self.get(a, j, k))
            .sum()
    }

    fn check_against(&self, qset: &QuestionStateSet) -> Result<()> {
        if qset.len() != self.questions || qset.settings() != self.settings || qset.dim() != self.dim {
            return Err(dim_err("MDI table does not match the question set"));
        }
        Ok(())
    }
}

/// `P(a, Yes | j, τ_k^T) = Tr[(E^A_{a|j} ⊗ B₁)(ρ^{AB} ⊗ τ_k^T)]` for every
/// question. `bsm_projector` acts on Bob ⊗ Charlie; `None` selects
/// `|Φ_d⟩⟨Φ_d|`.
pub fn mdi_table(
    state: &ComplexMatrix,
    alice: &[Povm],
    qset: &QuestionStateSet,
    bsm_projector: Option<&ComplexMatrix>,
) -> Result<MdiTable> {
    let (k, na, da) = measurement_shape(alice, "Alice")?;
    let d = qset.dim();
    if k != qset.settings() {
        return Err(dim_err(format!(
            "Alice has {k} settings, the question set encodes {}",
            qset.settings()
        )));
    }
    if !state.is_square() || state.rows() != da * d {
        return Err(dim_err(format!(
            "state of side {} does not match local dimensions {da} x {d}",
            state.rows()
        )));
    }
    let default;
    let b1 = match bsm_projector {
        Some(b) => b,
        None => {
            default = max_entangled(d)?.projector();
            &default
        }
    };
    if !b1.is_square() || b1.rows() != d * d {
        return Err(dim_err(format!("BSM projector must act on a {d} x {d} space")));
    }
    let joint: Vec<ComplexMatrix> = (0..qset.len()).map(|q| kron(state, &qset.sent_state(q))).collect();
    let mut probs = Vec::with_capacity(k * na * qset.len());
    for povm in alice {
        for a in 0..na {
            let op = kron(povm.element(a), b1);
            for rho in &joint {
                probs.push(op.trace_product(rho)?.re);
            }
        }
    }
    MdiTable::new(d, na, k, qset.len(), probs)
}

/// QRS witness evaluated purely from MDI data:
/// `W_QRS = Σ_{a,b,j} (w(a,b,j) − S_LHS/k) P(a, Yes | j, τ^T_{b,j})`.
///
/// The reported `S` is the MDI estimate `d · Σ w P`.
pub fn qrs_witness(mdi: &MdiTable, qset: &QuestionStateSet, functional: &SteeringFunctional) -> Result<WitnessReport> {
    mdi.check_against(qset)?;
    let d = functional.dim();
    if mdi.alice_outcomes() != d || mdi.dim() != d || mdi.settings() != functional.settings() {
        return Err(dim_err("MDI table does not match the functional"));
    }
    let shift = functional.lhs_bound() / functional.settings() as f64;
    let mut w_qrs = 0.0;
    let mut s_hat = 0.0;
    for j in 0..functional.settings() {
        for a in 0..d {
            for b in 0..d {
                let p = mdi.reconstructed(qset, a, b, j);
                let w = functional.weight(a, b, j);
                w_qrs += (w - shift) * p;
                s_hat += w * p;
            }
        }
    }
    Ok(WitnessReport::new(d as f64 * s_hat, functional.lhs_bound(), w_qrs))
}
