use std::ops::Range;

use super::assemblage::Assemblage;
use super::problem::{solve_sdp, BlockKind, MatrixTerm, SdpProblem, SdpSolution, SdpStatus, Sense};
use crate::error::{Error, Result};
use crate::qmath::{eig_max_hermitian, ComplexMatrix};
use crate::scenario::{Povm, SteeringFunctional};

/// Largest number of deterministic strategies enumerated.
pub const MAX_STRATEGIES: usize = 256;

/// Outcome of the LHS membership test.
#[derive(Clone, Debug)]
pub enum LhsDecision {
    /// `σ_{a|x} = Σ_λ D_λ(a|x) σ_λ`; each entry pairs a deterministic strategy
    /// (outcome per setting) with its hidden state.
    Lhs {
        robustness: f64,
        hidden: Vec<(Vec<usize>, ComplexMatrix)>,
    },
    /// Witness `F_{a|x}` with `Σ_{a,x} D_λ(a|x) F_{a|x} ⪯ 0` for every strategy
    /// and `Σ Tr[F_{a|x} σ_{a|x}] = robustness > 0`.
    Steerable {
        robustness: f64,
        witness: Vec<Vec<ComplexMatrix>>,
    },
}

impl LhsDecision {
    pub fn is_lhs(&self) -> bool {
        matches!(self, LhsDecision::Lhs { .. })
    }

    /// White-noise robustness `s*`.
    pub fn robustness(&self) -> f64 {
        match self {
            LhsDecision::Lhs { robustness, .. } | LhsDecision::Steerable { robustness, .. } => *robustness,
        }
    }
}

/// All maps from settings to outcomes, in lexicographic order.
pub fn deterministic_strategies(settings: usize, outcomes: usize) -> Result<Vec<Vec<usize>>> {
    let count = (outcomes as u128).checked_pow(settings as u32).unwrap_or(u128::MAX);
    if count > MAX_STRATEGIES as u128 {
        return Err(Error::InvalidParameter(format!(
            "{count} deterministic strategies exceed the limit of {MAX_STRATEGIES}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    for mut idx in 0..count as usize {
        let mut s = vec![0; settings];
        for slot in s.iter_mut().rev() {
            *slot = idx % outcomes;
            idx /= outcomes;
        }
        out.push(s);
    }
    Ok(out)
}

/// The problem, its strategies and the constraint range of each `(x, a)` equality.
type Robustness = (SdpProblem, Vec<Vec<usize>>, Vec<Vec<Range<usize>>>);

/// Builds `min s` s.t. `Σ_λ D_λ(a|x) σ_λ − s·I/(d·n_a) = σ_{a|x}`, `σ_λ ⪰ 0`, `s ≥ 0`.
fn robustness_problem(asm: &Assemblage) -> Result<Robustness> {
    let d = asm.dim();
    let na = asm.outcomes();
    let strategies = deterministic_strategies(asm.settings(), na)?;
    let mut p = SdpProblem::new(Sense::Minimize);
    let hidden: Vec<usize> = (0..strategies.len())
        .map(|l| p.add_block(format!("sigma_{l}"), BlockKind::Hermitian, d))
        .collect();
    let s = p.add_block("s", BlockKind::Real, 1);
    p.add_objective_term(s, ComplexMatrix::identity(1));
    let noise = ComplexMatrix::identity(d).scale_real(-1.0 / (d * na) as f64);
    let mut groups = Vec::with_capacity(asm.settings());
    for x in 0..asm.settings() {
        let mut row = Vec::with_capacity(na);
        for a in 0..na {
            let mut terms: Vec<MatrixTerm> = strategies
                .iter()
                .zip(&hidden)
                .filter(|(strat, _)| strat[x] == a)
                .map(|(_, &blk)| MatrixTerm::Scaled(blk, 1.0))
                .collect();
            terms.push(MatrixTerm::ScalarTimes(s, noise.clone()));
            row.push(p.add_matrix_equality(&terms, asm.member(a, x)));
        }
        groups.push(row);
    }
    Ok((p, strategies, groups))
}

fn require_optimal(sol: &SdpSolution, what: &str) -> Result<()> {
    match sol.status {
        SdpStatus::Optimal => Ok(()),
        SdpStatus::Infeasible => Err(Error::Infeasible(what.into())),
        SdpStatus::MaxIter => Err(Error::SolverFailure(format!(
            "{what}: no convergence after {} iterations",
            sol.iterations
        ))),
    }
}

/// Decides whether an assemblage admits a local-hidden-state model by
/// enumerating deterministic strategies. The assemblage is LHS when the white
/// noise needed to make it so is at most `tol`.
pub fn lhs_membership(asm: &Assemblage, tol: f64) -> Result<LhsDecision> {
    let (problem, strategies, groups) = robustness_problem(asm)?;
    let sol = solve_sdp(&problem, (tol * 1e-2).min(1e-7))?;
    require_optimal(&sol, "LHS membership")?;
    let robustness = sol.primal_value.max(0.0);
    if robustness <= tol {
        let hidden = strategies
            .into_iter()
            .zip(sol.blocks)
            .map(|(strat, sigma)| (strat, sigma.hermitian_part()))
            .collect();
        Ok(LhsDecision::Lhs { robustness, hidden })
    } else {
        let witness = groups
            .iter()
            .map(|row| row.iter().map(|r| problem.dual_matrix(&sol, r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(LhsDecision::Steerable { robustness, witness })
    }
}

/// `Σ_{a,x} Tr[F_{a|x} σ_{a|x}]`.
pub fn witness_value(witness: &[Vec<ComplexMatrix>], asm: &Assemblage) -> Result<f64> {
    let mut v = 0.0;
    for (x, row) in witness.iter().enumerate() {
        for (a, f) in row.iter().enumerate() {
            v += f.trace_product(asm.member(a, x))?.re;
        }
    }
    Ok(v)
}

/// Largest LHS value of a functional: the maximum over deterministic outcome
/// assignments `(a_1, …, a_k)` of `λ_max(Σ_j Σ_b w(a_j, b, j) E_{b|j})`.
pub fn lhs_bound_bruteforce(bob: &[Povm], functional: &SteeringFunctional) -> Result<f64> {
    let d = functional.dim();
    if bob.len() != functional.settings() || bob.iter().any(|p| p.outcomes() != d) {
        return Err(crate::error::dim_err("Bob's measurements do not match the functional"));
    }
    let dim = bob[0].dim();
    let mut best = f64::NEG_INFINITY;
    for strat in deterministic_strategies(bob.len(), d)? {
        let mut op = ComplexMatrix::zeros(dim, dim);
        for (j, &a) in strat.iter().enumerate() {
            for (b, &w) in functional.bob_coefficients(a, j).iter().enumerate() {
                if w != 0.0 {
                    op += &bob[j].element(b).scale_real(w);
                }
            }
        }
        best = best.max(eig_max_hermitian(&op)?);
    }
    Ok(best)
}
