use crate::error::{dim_err, Error, Result};
use crate::qmath::{kron, ComplexMatrix};
use crate::scenario::Povm;

/// Per-setting normalization tolerance.
pub const TABLE_TOL: f64 = 1e-10;

/// Joint outcome distribution `p(a, b | j)` for matched settings `x = y = j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    alice_outcomes: usize,
    bob_outcomes: usize,
    settings: usize,
    /// `probs[(j * na + a) * nb + b]`
    probs: Vec<f64>,
}

impl CorrelationTable {
    /// Validates normalization and nonnegativity.
    pub fn new(alice_outcomes: usize, bob_outcomes: usize, settings: usize, probs: Vec<f64>) -> Result<Self> {
        let table = Self::unchecked(alice_outcomes, bob_outcomes, settings, probs)?;
        for j in 0..settings {
            let total: f64 = table.setting_slice(j).iter().sum();
            if (total - 1.0).abs() > TABLE_TOL {
                return Err(Error::InvalidParameter(format!(
                    "setting {j} sums to {total}, expected 1"
                )));
            }
        }
        if let Some(v) = table.probs.iter().find(|&&v| v < -1e-12 || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid probability {v}")));
        }
        Ok(table)
    }

    fn unchecked(alice_outcomes: usize, bob_outcomes: usize, settings: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alice_outcomes * bob_outcomes * settings {
            return Err(dim_err(format!(
                "table of shape {alice_outcomes}x{bob_outcomes}x{settings} needs {} entries, got {}",
                alice_outcomes * bob_outcomes * settings,
                probs.len()
            )));
        }
        Ok(Self {
            alice_outcomes,
            bob_outcomes,
            settings,
            probs,
        })
    }

    /// `p(a,b|j) = 1/(na nb)`.
    pub fn uniform(alice_outcomes: usize, bob_outcomes: usize, settings: usize) -> Self {
        let v = 1.0 / (alice_outcomes * bob_outcomes) as f64;
        Self {
            alice_outcomes,
            bob_outcomes,
            settings,
            probs: vec![v; alice_outcomes * bob_outcomes * settings],
        }
    }

    /// Normalizes raw nonnegative weights (e.g. counts) setting by setting.
    pub fn from_counts(alice_outcomes: usize, bob_outcomes: usize, settings: usize, counts: &[f64]) -> Result<Self> {
        let mut table = Self::unchecked(alice_outcomes, bob_outcomes, settings, counts.to_vec())?;
        let block = alice_outcomes * bob_outcomes;
        for j in 0..settings {
            let slice = &mut table.probs[j * block..(j + 1) * block];
            let total: f64 = slice.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidParameter(format!("setting {j} has zero total counts")));
            }
            slice.iter_mut().for_each(|v| *v /= total);
        }
        Ok(table)
    }

    pub fn alice_outcomes(&self) -> usize {
        self.alice_outcomes
    }

    pub fn bob_outcomes(&self) -> usize {
        self.bob_outcomes
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn get(&self, a: usize, b: usize, j: usize) -> f64 {
        self.probs[(j * self.alice_outcomes + a) * self.bob_outcomes + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    fn setting_slice(&self, j: usize) -> &[f64] {
        let block = self.alice_outcomes * self.bob_outcomes;
        &self.probs[j * block..(j + 1) * block]
    }

    /// `p(a|j)`.
    pub fn alice_marginal(&self, a: usize, j: usize) -> f64 {
        (0..self.bob_outcomes).map(|b| self.get(a, b, j)).sum()
    }

    /// `p(b|j)`.
    pub fn bob_marginal(&self, b: usize, j: usize) -> f64 {
        (0..self.alice_outcomes).map(|a| self.get(a, b, j)).sum()
    }

    /// `Σ_{a,b,j} |p - q|`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Entrywise mixture `t·self + (1-t)·other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.probs.len() != other.probs.len() {
            return Err(dim_err("mixing tables of different shape"));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect();
        Ok(Self { probs, ..self.clone() })
    }
}

/// Checks that measurement lists agree in setting count, outcome count and
/// local dimension, returning `(settings, outcomes, dim)`.
pub(crate) fn measurement_shape(povms: &[Povm], who: &str) -> Result<(usize, usize, usize)> {
    let first = povms
        .first()
        .ok_or_else(|| Error::InvalidParameter(format!("{who} has no measurement settings")))?;
    let (n, d) = (first.outcomes(), first.dim());
    if povms.iter().any(|p| p.outcomes() != n || p.dim() != d) {
        return Err(dim_err(format!("{who}'s settings differ in outcome count or dimension")));
    }
    Ok((povms.len(), n, d))
}

/// Born-rule table `p(a,b|j) = Tr[(E^A_{a|j} ⊗ E^B_{b|j}) ρ^{AB}]`.
pub fn correlations(state: &ComplexMatrix, alice: &[Povm], bob: &[Povm]) -> Result<CorrelationTable> {
    let (ka, na, da) = measurement_shape(alice, "Alice")?;
    let (kb, nb, db) = measurement_shape(bob, "Bob")?;
    if ka != kb {
        return Err(dim_err(format!("Alice has {ka} settings, Bob has {kb}")));
    }
    if !state.is_square() || state.rows() != da * db {
        return Err(dim_err(format!(
            "state of side {} does not match local dimensions {da} x {db}",
            state.rows()
        )));
    }
    let mut probs = Vec::with_capacity(ka * na * nb);
    for (ea, eb) in alice.iter().zip(bob) {
        for a in 0..na {
            for b in 0..nb {
                let op = kron(ea.element(a), eb.element(b));
                probs.push(op.trace_product(state)?.re);
            }
        }
    }
    CorrelationTable::new(na, nb, ka, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random::random_density;
    use crate::scenario::{isotropic, max_entangled, two_mubs};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phi3_is_perfectly_correlated() {
        let rho = max_entangled(3).unwrap().projector();
        let m = two_mubs(3).unwrap();
        let t = correlations(&rho, &m, &m).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want1 = if a == b { 1.0 / 3.0 } else { 0.0 };
                let want2 = if (a + b) % 3 == 0 { 1.0 / 3.0 } else { 0.0 };
                assert!((t.get(a, b, 0) - want1).abs() < 1e-14);
                assert!((t.get(a, b, 1) - want2).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn product_states_factorize() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ra = random_density(&mut rng, 3);
        let rb = random_density(&mut rng, 3);
        let rho = kron(&ra, &rb);
        let m = two_mubs(3).unwrap();
        let t = correlations(&rho, &m, &m).unwrap();
        for j in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    let want = t.alice_marginal(a, j) * t.bob_marginal(b, j);
                    assert!((t.get(a, b, j) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn isotropic_is_linear_mixture() {
        let m = two_mubs(3).unwrap();
        let phi = correlations(&max_entangled(3).unwrap().projector(), &m, &m).unwrap();
        let noise = CorrelationTable::uniform(3, 3, 2);
        for p in [0.0, 0.3, 0.77, 1.0] {
            let t = correlations(isotropic(3, p).unwrap().matrix(), &m, &m).unwrap();
            let want = phi.mix(&noise, p).unwrap();
            assert!(t.l1_distance(&want) < 1e-13);
        }
    }

    #[test]
    fn shape_errors() {
        let m3 = two_mubs(3).unwrap();
        let m2 = two_mubs(2).unwrap();
        let rho = ComplexMatrix::identity(9).scale_real(1.0 / 9.0);
        assert!(correlations(&rho, &m3, &m2).is_err());
        assert!(correlations(&rho, &m3, &m3[..1]).is_err());
        assert!(CorrelationTable::new(2, 2, 1, vec![0.5, 0.5, 0.5]).is_err());
        assert!(CorrelationTable::new(2, 2, 1, vec![0.5, 0.5, 0.5, 0.5]).is_err());
        assert!(CorrelationTable::from_counts(2, 2, 1, &[0.0; 4]).is_err());
    }

}
