use crate::error::{dim_err, Error, Result};
use crate::protocol::LhsModel;
use crate::qmath::{is_psd, kron, partial_trace, ComplexMatrix};
use crate::scenario::Povm;

/// Tolerance for PSD, no-signaling and normalization checks.
pub const ASSEMBLAGE_TOL: f64 = 1e-10;

/// Conditional states `σ_{a|x}` prepared for Bob by Alice's measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct Assemblage {
    dim: usize,
    /// `members[x][a]`
    members: Vec<Vec<ComplexMatrix>>,
}

impl Assemblage {
    pub fn new(members: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let first = members
            .first()
            .and_then(|m| m.first())
            .ok_or_else(|| Error::InvalidParameter("empty assemblage".into()))?;
        let dim = first.rows();
        let outcomes = members[0].len();
        if members
            .iter()
            .any(|mx| mx.len() != outcomes || mx.iter().any(|s| s.rows() != dim || s.cols() != dim))
        {
            return Err(dim_err("assemblage members differ in shape"));
        }
        for s in members.iter().flatten() {
            if !is_psd(s, ASSEMBLAGE_TOL) {
                return Err(Error::InvalidParameter("assemblage member is not PSD".into()));
            }
        }
        let asm = Self { dim, members };
        let reduced = asm.reduced_state(0);
        if (reduced.trace().re - 1.0).abs() > ASSEMBLAGE_TOL {
            return Err(Error::InvalidParameter(format!(
                "reduced state has trace {}",
                reduced.trace().re
            )));
        }
        for x in 1..asm.settings() {
            if asm.reduced_state(x).max_abs_diff(&reduced) > ASSEMBLAGE_TOL {
                return Err(Error::InvalidParameter(format!("setting {x} signals to Bob")));
            }
        }
        Ok(asm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.members.len()
    }

    pub fn outcomes(&self) -> usize {
        self.members[0].len()
    }

    /// `σ_{a|x}`.
    pub fn member(&self, a: usize, x: usize) -> &ComplexMatrix {
        &self.members[x][a]
    }

    /// `Σ_a σ_{a|x}`.
    pub fn reduced_state(&self, x: usize) -> ComplexMatrix {
        self.members[x]
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, s| &acc + s)
    }

    /// `p(a|x) = Tr σ_{a|x}`.
    pub fn probability(&self, a: usize, x: usize) -> f64 {
        self.members[x][a].trace().re
    }

    pub fn from_lhs_model(model: &LhsModel) -> Result<Self> {
        Self::new(model.assemblage())
    }
}

/// `σ_{a|x} = Tr_A[(E^A_{a|x} ⊗ I) ρ^{AB}]`.
pub fn assemblage(state: &ComplexMatrix, alice: &[Povm]) -> Result<Assemblage> {
    let first = alice
        .first()
        .ok_or_else(|| Error::InvalidParameter("Alice has no measurement settings".into()))?;
    let da = first.dim();
    if !state.is_square() || da == 0 || !state.rows().is_multiple_of(da) {
        return Err(dim_err(format!(
            "state of side {} is not divisible by Alice's dimension {da}",
            state.rows()
        )));
    }
    let db = state.rows() / da;
    if alice.iter().any(|p| p.dim() != da) {
        return Err(dim_err("Alice's settings differ in dimension"));
    }
    let id = ComplexMatrix::identity(db);
    let members = alice
        .iter()
        .map(|povm| {
            povm.elements()
                .iter()
                .map(|e| partial_trace(&kron(e, &id).matmul(state)?, &[da, db], 1))
                .map(|s| s.map(|m| m.hermitian_part()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random::random_density;
    use crate::scenario::{isotropic, two_mubs};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isotropic_computational_members() {
        let p = 0.6;
        let rho = isotropic(3, p).unwrap().into_matrix();
        let asm = assemblage(&rho, &two_mubs(3).unwrap()).unwrap();
        for a in 0..3 {
            let mut diag = [0.0; 3];
            diag[a] = p / 3.0;
            let want = &ComplexMatrix::diag_real(&diag) + &ComplexMatrix::identity(3).scale_real((1.0 - p) / 9.0);
            assert!(asm.member(a, 0).max_abs_diff(&want) < 1e-14);
        }
    }

    #[test]
    fn reduced_state_is_bob_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&mut rng, 9);
        let asm = assemblage(&rho, &two_mubs(3).unwrap()).unwrap();
        let rb = partial_trace(&rho, &[3, 3], 1).unwrap();
        for x in 0..2 {
            assert!(asm.reduced_state(x).max_abs_diff(&rb) < 1e-13);
        }
    }

    #[test]
    fn product_state_members_factorize() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ra = random_density(&mut rng, 3);
        let rb = random_density(&mut rng, 3);
        let m = two_mubs(3).unwrap();
        let asm = assemblage(&kron(&ra, &rb), &m).unwrap();
        for x in 0..2 {
            for a in 0..3 {
                let pa = m[x].element(a).trace_product(&ra).unwrap().re;
                assert!(asm.member(a, x).max_abs_diff(&rb.scale_real(pa)) < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_signaling_members() {
        let half = ComplexMatrix::diag_real(&[0.5, 0.0]);
        let other = ComplexMatrix::diag_real(&[0.0, 0.5]);
        let members = vec![vec![half.clone(), half.clone()], vec![other.clone(), other]];
        assert!(Assemblage::new(members).is_err());
        assert!(assemblage(&ComplexMatrix::identity(5), &two_mubs(2).unwrap()).is_err());
    }
}
