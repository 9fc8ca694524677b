use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::qmath::random::{random_density, random_ket, random_simplex};
use crate::qmath::{kron, ComplexMatrix};
use crate::scenario::Povm;

use super::table::{correlations, measurement_shape, CorrelationTable};

/// Finite local-hidden-state model
/// `p(a,b|j) = Σ_λ p(λ) p(a|j,λ) Tr[E_{b|j} ρ_λ]`.
#[derive(Clone, Debug)]
pub struct LhsModel {
    dim: usize,
    settings: usize,
    outcomes: usize,
    weights: Vec<f64>,
    /// `responses[λ][j][a]`
    responses: Vec<Vec<Vec<f64>>>,
    hidden: Vec<ComplexMatrix>,
}

impl LhsModel {
    pub fn new(
        weights: Vec<f64>,
        responses: Vec<Vec<Vec<f64>>>,
        hidden: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 || responses.len() != n || hidden.len() != n {
            return Err(dim_err("weights, responses and hidden states must have equal nonzero length"));
        }
        let dim = hidden[0].rows();
        let settings = responses[0].len();
        let outcomes = responses[0].first().map_or(0, Vec::len);
        if settings == 0 || outcomes == 0 {
            return Err(Error::InvalidParameter("empty response function".into()));
        }
        let simplex = |v: &[f64]| v.iter().all(|&x| x >= -1e-12) && (v.iter().sum::<f64>() - 1.0).abs() < 1e-10;
        if !simplex(&weights) {
            return Err(Error::InvalidParameter("hidden-variable weights are not a distribution".into()));
        }
        for r in &responses {
            if r.len() != settings || r.iter().any(|ra| ra.len() != outcomes || !simplex(ra)) {
                return Err(Error::InvalidParameter("response functions are not distributions".into()));
            }
        }
        for rho in &hidden {
            if rho.rows() != dim || !rho.is_square() {
                return Err(dim_err("hidden states differ in dimension"));
            }
        }
        Ok(Self {
            dim,
            settings,
            outcomes,
            weights,
            responses,
            hidden,
        })
    }

    /// Random model with `n_lambda` hidden variables. Response functions are
    /// drawn from the flat simplex and hidden states are Ginibre mixed states.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, settings: usize, outcomes: usize, n_lambda: usize) -> Self {
        let weights = random_simplex(rng, n_lambda);
        let responses = (0..n_lambda)
            .map(|_| (0..settings).map(|_| random_simplex(rng, outcomes)).collect())
            .collect();
        let hidden = (0..n_lambda).map(|_| random_density(rng, dim)).collect();
        Self {
            dim,
            settings,
            outcomes,
            weights,
            responses,
            hidden,
        }
    }

    /// Random model with deterministic responses and pure hidden states,
    /// the extremal points of the LHS set.
    pub fn random_deterministic<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        settings: usize,
        outcomes: usize,
        n_lambda: usize,
    ) -> Self {
        let weights = random_simplex(rng, n_lambda);
        let responses = (0..n_lambda)
            .map(|_| {
                (0..settings)
                    .map(|_| {
                        let mut r = vec![0.0; outcomes];
                        r[rng.random_range(0..outcomes)] = 1.0;
                        r
                    })
                    .collect()
            })
            .collect();
        let hidden = (0..n_lambda).map(|_| random_ket(rng, dim).projector()).collect();
        Self {
            dim,
            settings,
            outcomes,
            weights,
            responses,
            hidden,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn hidden_variables(&self) -> usize {
        self.weights.len()
    }

    /// `σ_{a|j} = Σ_λ p(λ) p(a|j,λ) ρ_λ`, indexed `[j][a]`.
    pub fn assemblage(&self) -> Vec<Vec<ComplexMatrix>> {
        (0..self.settings)
            .map(|j| {
                (0..self.outcomes)
                    .map(|a| {
                        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
                        for (l, rho) in self.hidden.iter().enumerate() {
                            let c = self.weights[l] * self.responses[l][j][a];
                            if c != 0.0 {
                                acc += &rho.scale_real(c);
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Correlations produced with Bob measuring `bob`.
    pub fn table(&self, bob: &[Povm]) -> Result<CorrelationTable> {
        let (k, nb, db) = measurement_shape(bob, "Bob")?;
        if k != self.settings || db != self.dim {
            return Err(dim_err("Bob's measurements do not match the model"));
        }
        let sigma = self.assemblage();
        let mut probs = Vec::with_capacity(k * self.outcomes * nb);
        for (j, povm) in bob.iter().enumerate() {
            for s in &sigma[j] {
                for b in 0..nb {
                    probs.push(povm.element(b).trace_product(s)?.re);
                }
            }
        }
        CorrelationTable::new(self.outcomes, nb, k, probs)
    }

    /// Quantum realization with a classical register for λ:
    /// `ρ = Σ_λ p(λ) |λ⟩⟨λ| ⊗ ρ_λ` and `E_{a|j} = Σ_λ p(a|j,λ) |λ⟩⟨λ|`.
    pub fn to_quantum(&self) -> Result<(ComplexMatrix, Vec<Povm>)> {
        let n = self.hidden_variables();
        let mut state = ComplexMatrix::zeros(n * self.dim, n * self.dim);
        for (l, rho) in self.hidden.iter().enumerate() {
            let mut reg = vec![0.0; n];
            reg[l] = self.weights[l];
            state += &kron(&ComplexMatrix::diag_real(&reg), rho);
        }
        let alice = (0..self.settings)
            .map(|j| {
                let elements = (0..self.outcomes)
                    .map(|a| {
                        let diag: Vec<f64> = (0..n).map(|l| self.responses[l][j][a]).collect();
                        ComplexMatrix::diag_real(&diag)
                    })
                    .collect();
                Povm::new(elements)
            })
            .collect::<Result<_>>()?;
        Ok((state, alice))
    }
}

/// Born-rule check helper: the table of the quantum realization.
pub fn lhs_table_via_quantum(model: &LhsModel, bob: &[Povm]) -> Result<CorrelationTable> {
    let (state, alice) = model.to_quantum()?;
    correlations(&state, &alice, bob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::two_mubs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantum_realization_reproduces_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bob = two_mubs(3).unwrap();
        for n in 1..5 {
            let m = LhsModel::random(&mut rng, 3, 2, 3, n);
            let direct = m.table(&bob).unwrap();
            let via = lhs_table_via_quantum(&m, &bob).unwrap();
            assert!(direct.l1_distance(&via) < 1e-12);
            let m = LhsModel::random_deterministic(&mut rng, 3, 2, 3, n);
            assert!(m.table(&bob).unwrap().l1_distance(&lhs_table_via_quantum(&m, &bob).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn assemblage_is_no_signaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = LhsModel::random(&mut rng, 3, 2, 3, 4);
        let s = m.assemblage();
        let sum = |j: usize| s[j].iter().fold(ComplexMatrix::zeros(3, 3), |acc, x| &acc + x);
        assert!(sum(0).max_abs_diff(&sum(1)) < 1e-14);
        assert!((sum(0).trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_models() {
        let rho = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(LhsModel::new(vec![0.7], vec![vec![vec![1.0, 0.0]]], vec![rho.clone()]).is_err());
        assert!(LhsModel::new(vec![1.0], vec![vec![vec![0.6, 0.6]]], vec![rho.clone()]).is_err());
        assert!(LhsModel::new(vec![1.0], vec![], vec![rho]).is_err());
    }
}
