use crate::error::{dim_err, Error, Result};

/// Linear steering functional `S = Σ_{a,b,j} w(a,b,j) p(a,b|j)` together with
/// its local-hidden-state bound.
///
/// Functionals built from target maps use the indicator weights
/// `w(a,b,j) = [b = f_j(a)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringFunctional {
    dim: usize,
    settings: usize,
    /// `weights[(j * dim + a) * dim + b]`
    weights: Vec<f64>,
    target_maps: Vec<Vec<usize>>,
    lhs_bound: f64,
}

impl SteeringFunctional {
    /// Indicator functional from per-setting maps `f_j : a ↦ b`.
    pub fn from_target_maps(dim: usize, target_maps: Vec<Vec<usize>>, lhs_bound: f64) -> Result<Self> {
        if target_maps.is_empty() {
            return Err(Error::InvalidParameter("functional needs at least one setting".into()));
        }
        if target_maps.iter().any(|f| f.len() != dim || f.iter().any(|&b| b >= dim)) {
            return Err(dim_err(format!("target maps must send 0..{dim} into 0..{dim}")));
        }
        let settings = target_maps.len();
        let mut weights = vec![0.0; settings * dim * dim];
        for (j, f) in target_maps.iter().enumerate() {
            for (a, &b) in f.iter().enumerate() {
                weights[(j * dim + a) * dim + b] = 1.0;
            }
        }
        Ok(Self {
            dim,
            settings,
            weights,
            target_maps,
            lhs_bound,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn weight(&self, a: usize, b: usize, j: usize) -> f64 {
        self.weights[(j * self.dim + a) * self.dim + b]
    }

    /// `f_j(a)`.
    pub fn target(&self, j: usize, a: usize) -> usize {
        self.target_maps[j][a]
    }

    pub fn target_maps(&self) -> &[Vec<usize>] {
        &self.target_maps
    }

    /// `S_LHS`, the largest value reachable by local-hidden-state models.
    pub fn lhs_bound(&self) -> f64 {
        self.lhs_bound
    }

    /// Coefficients `g_{b,j}` of Bob's operator `B̂_j = Σ_b g_{b,j} E_{b|j}`
    /// paired with Alice's outcome `a`.
    pub fn bob_coefficients(&self, a: usize, j: usize) -> &[f64] {
        let start = (j * self.dim + a) * self.dim;
        &self.weights[start..start + self.dim]
    }

    /// `Σ w(a,b,j) p(a,b,j)` for any probability lookup.
    pub fn evaluate(&self, mut prob: impl FnMut(usize, usize, usize) -> f64) -> f64 {
        let mut s = 0.0;
        for j in 0..self.settings {
            for a in 0..self.dim {
                for b in 0..self.dim {
                    let w = self.weight(a, b, j);
                    if w != 0.0 {
                        s += w * prob(a, b, j);
                    }
                }
            }
        }
        s
    }
}

/// `S = Σ_{a=b} p(a,b|1) + Σ_{a+b≡0} p(a,b|2)` with bound `1 + 1/√d`.
pub fn steering_functional_two_mubs(d: usize) -> Result<SteeringFunctional> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let same = (0..d).collect();
    let opposite = (0..d).map(|a| (d - a) % d).collect();
    SteeringFunctional::from_target_maps(d, vec![same, opposite], 1.0 + 1.0 / (d as f64).sqrt())
}
