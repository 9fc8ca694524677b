use super::assemblage::Assemblage;
use super::problem::{compress, solve_sdp, BlockKind, LinearFunctional, MatrixTerm, SdpProblem, SdpSolution, SdpStatus, Sense};
use crate::error::{dim_err, Error, Result};
use crate::protocol::CorrelationTable;
use crate::qmath::{hermitian_eigen, ComplexMatrix};
use crate::scenario::{Povm, SteeringFunctional};

/// How much of the observed data constrains Eve's branch assemblages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintMode {
    /// `Σ_e σ^e_{a|x} = σ_{a|x}`.
    FullAssemblage,
    /// `Σ_e Tr[E_{b|x} σ^e_{a|x}] = p(a,b|x)` for every cell.
    FullTable,
    /// Only the value of the steering functional, plus normalization.
    ViolationOnly,
}

/// Data the guessing-probability SDP is consistent with.
#[derive(Clone, Copy, Debug)]
pub enum GuessData<'a> {
    Assemblage(&'a Assemblage),
    FullTable {
        table: &'a CorrelationTable,
        bob: &'a [Povm],
    },
    ViolationOnly {
        s_value: f64,
        functional: &'a SteeringFunctional,
        bob: &'a [Povm],
    },
}

impl GuessData<'_> {
    pub fn mode(&self) -> ConstraintMode {
        match self {
            GuessData::Assemblage(_) => ConstraintMode::FullAssemblage,
            GuessData::FullTable { .. } => ConstraintMode::FullTable,
            GuessData::ViolationOnly { .. } => ConstraintMode::ViolationOnly,
        }
    }

    /// `(Bob's dimension, settings, Alice's outcomes)`.
    fn shape(&self) -> Result<(usize, usize, usize)> {
        let bob_shape = |bob: &[Povm], outcomes: usize| -> Result<(usize, usize, usize)> {
            let first = bob.first().ok_or_else(|| dim_err("Bob has no measurement settings"))?;
            if bob.iter().any(|p| p.dim() != first.dim()) {
                return Err(dim_err("Bob's settings differ in dimension"));
            }
            Ok((first.dim(), bob.len(), outcomes))
        };
        match self {
            GuessData::Assemblage(a) => Ok((a.dim(), a.settings(), a.outcomes())),
            GuessData::FullTable { table, bob } => {
                if table.settings() != bob.len() || bob.iter().any(|p| p.outcomes() != table.bob_outcomes()) {
                    return Err(dim_err("table does not match Bob's measurements"));
                }
                bob_shape(bob, table.alice_outcomes())
            }
            GuessData::ViolationOnly { functional, bob, .. } => {
                if functional.settings() != bob.len() || bob.iter().any(|p| p.outcomes() != functional.dim()) {
                    return Err(dim_err("functional does not match Bob's measurements"));
                }
                bob_shape(bob, functional.dim())
            }
        }
    }
}

/// Table entries and eigenvalues at or below this value are treated as exact zeros.
pub const ZERO_CELL: f64 = 1e-12;

/// Certified randomness of Alice's outcome for setting `x*`.
#[derive(Clone, Debug)]
pub struct RandomnessResult {
    pub p_guess: f64,
    /// `−log₂ P_guess`.
    pub h_min: f64,
    pub x_star: usize,
    pub mode: ConstraintMode,
    /// Optimal branch assemblages `σ^e_{a|x}`, indexed `[e][x][a]`.
    pub branches: Vec<Vec<Vec<ComplexMatrix>>>,
    /// Raw solver output, including the dual multipliers certifying the bound.
    pub certificate: SdpSolution,
    pub problem: SdpProblem,
}

/// `[e][x][a]` → block index and isometry, `None` when forced to zero.
type Layout = Vec<Vec<Vec<Option<(usize, ComplexMatrix)>>>>;

/// The guessing SDP together with the isometries `V` writing each branch
/// member as `σ^e_{a|x} = V Y V†` for its block `Y`.
#[derive(Clone, Debug)]
pub struct GuessingProgram {
    pub problem: SdpProblem,
    dim: usize,
    layout: Layout,
}

impl GuessingProgram {
    /// Rebuilds `σ^e_{a|x}` from solved block values.
    pub fn branches(&self, blocks: &[ComplexMatrix]) -> Vec<Vec<Vec<ComplexMatrix>>> {
        self.layout
            .iter()
            .map(|le| {
                le.iter()
                    .map(|lx| {
                        lx.iter()
                            .map(|slot| match slot {
                                Some((k, v)) => v
                                    .matmul(&blocks[*k])
                                    .and_then(|t| t.matmul(&v.adjoint()))
                                    .expect("isometry matches block")
                                    .hermitian_part(),
                                None => ComplexMatrix::zeros(self.dim, self.dim),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Columns spanning the eigenspaces of `h` selected by `keep(λ)`.
fn eigenspace(h: &ComplexMatrix, keep: impl Fn(f64) -> bool) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(h)?;
    let cols: Vec<usize> = (0..eig.values.len()).filter(|&i| keep(eig.values[i])).collect();
    Ok(ComplexMatrix::from_fn(h.rows(), cols.len(), |r, c| eig.vectors[(r, cols[c])]))
}

/// Subspace every branch member `σ^e_{a|x}` must live in, given the data.
/// Exact zeros in the data force it: `σ^e_{a|x} ⪯ σ_{a|x}` in the assemblage
/// case, and `Tr[E_{b|x} σ^e_{a|x}] = 0` whenever `p(a,b|x) = 0`.
fn support(data: &GuessData, d: usize, a: usize, x: usize) -> Result<ComplexMatrix> {
    match data {
        GuessData::Assemblage(asm) => {
            let s = asm.member(a, x);
            let scale = s.trace().re.abs().max(1.0);
            eigenspace(s, |l| l > ZERO_CELL * scale)
        }
        GuessData::FullTable { table, bob } => {
            let mut excluded = ComplexMatrix::zeros(d, d);
            for b in 0..bob[x].outcomes() {
                if table.get(a, b, x) <= ZERO_CELL {
                    excluded += bob[x].element(b);
                }
            }
            eigenspace(&excluded, |l| l <= 1e-9)
        }
        GuessData::ViolationOnly {
            s_value,
            functional,
            bob,
        } => {
            // With projector-valued B_{a,j} = Σ_b w(a,b,j) E_{b|j}, S is at most the
            // number of settings, and saturating it pins σ^e_{a|j} to range(B_{a,j}).
            let op = bob_operator(functional, bob, a, x);
            let projector = op.matmul(&op)?.max_abs_diff(&op) <= ZERO_CELL;
            if projector && *s_value >= functional.settings() as f64 - ZERO_CELL {
                eigenspace(&op, |l| l > 0.5)
            } else {
                Ok(ComplexMatrix::identity(d))
            }
        }
    }
}

/// `B_{a,x} = Σ_b w(a,b,x) E_{b|x}`.
fn bob_operator(functional: &SteeringFunctional, bob: &[Povm], a: usize, x: usize) -> ComplexMatrix {
    let d = bob[x].dim();
    let mut op = ComplexMatrix::zeros(d, d);
    for (b, &w) in functional.bob_coefficients(a, x).iter().enumerate() {
        if w != 0.0 {
            op += &bob[x].element(b).scale_real(w);
        }
    }
    op
}

/// Builds `max Σ_e Tr σ^e_{e|x*}` over branch assemblages that are PSD,
/// no-signaling per branch and consistent with `data`.
pub fn guessing_problem(data: &GuessData, x_star: usize) -> Result<GuessingProgram> {
    let (d, k, na) = data.shape()?;
    if x_star >= k {
        return Err(Error::InvalidParameter(format!("setting {x_star} out of range for {k} settings")));
    }
    let supports: Vec<Vec<ComplexMatrix>> = (0..k)
        .map(|x| (0..na).map(|a| support(data, d, a, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut p = SdpProblem::new(Sense::Maximize);
    let layout: Layout = (0..na)
        .map(|e| {
            (0..k)
                .map(|x| {
                    (0..na)
                        .map(|a| {
                            let v = &supports[x][a];
                            (v.cols() > 0).then(|| {
                                let blk = p.add_block(format!("sigma^{e}_{a}|{x}"), BlockKind::Hermitian, v.cols());
                                (blk, v.clone())
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let id = ComplexMatrix::identity(d);
    let slots = |e: usize, x: usize| layout[e][x].iter().enumerate().filter_map(|(a, s)| s.as_ref().map(|s| (a, s)));

    for e in 0..na {
        if let Some((blk, v)) = &layout[e][x_star][e] {
            p.add_objective_term(*blk, compress(v, &id));
        }
    }
    let zero = ComplexMatrix::zeros(d, d);
    for e in 0..na {
        for x in 1..k {
            let mut terms: Vec<MatrixTerm> = slots(e, x)
                .map(|(_, (blk, v))| MatrixTerm::Congruence(*blk, v.clone(), 1.0))
                .collect();
            terms.extend(slots(e, 0).map(|(_, (blk, v))| MatrixTerm::Congruence(*blk, v.clone(), -1.0)));
            p.add_matrix_equality(&terms, &zero);
        }
    }
    match data {
        GuessData::Assemblage(asm) => {
            for x in 0..k {
                for a in 0..na {
                    let terms: Vec<MatrixTerm> = (0..na)
                        .filter_map(|e| layout[e][x][a].as_ref())
                        .map(|(blk, v)| MatrixTerm::Congruence(*blk, v.clone(), 1.0))
                        .collect();
                    p.add_matrix_equality(&terms, asm.member(a, x));
                }
            }
        }
        GuessData::FullTable { table, bob } => {
            for (x, povm) in bob.iter().enumerate() {
                for a in 0..na {
                    for b in 0..povm.outcomes() {
                        let mut f = LinearFunctional::new();
                        for le in &layout {
                            if let Some((blk, v)) = &le[x][a] {
                                f.push(*blk, compress(v, povm.element(b)));
                            }
                        }
                        p.add_constraint(f, table.get(a, b, x));
                    }
                }
            }
        }
        GuessData::ViolationOnly {
            s_value,
            functional,
            bob,
        } => {
            let mut norm = LinearFunctional::new();
            for e in 0..na {
                for (_, (blk, v)) in slots(e, 0) {
                    norm.push(*blk, compress(v, &id));
                }
            }
            p.add_constraint(norm, 1.0);
            let mut s = LinearFunctional::new();
            for x in 0..k {
                for a in 0..na {
                    let op = bob_operator(functional, bob, a, x);
                    for le in &layout {
                        if let Some((blk, v)) = &le[x][a] {
                            s.push(*blk, compress(v, &op));
                        }
                    }
                }
            }
            p.add_constraint(s, *s_value);
        }
    }
    Ok(GuessingProgram {
        problem: p,
        dim: d,
        layout,
    })
}

/// Optimal probability that Eve guesses Alice's outcome for setting `x_star`,
/// and the min-entropy `H_min = −log₂ P_guess`.
pub fn guessing_probability(data: &GuessData, x_star: usize, tol: f64) -> Result<RandomnessResult> {
    let program = guessing_problem(data, x_star)?;
    let sol = solve_sdp(&program.problem, tol)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Err(Error::Infeasible("no branch assemblage reproduces the data".into()))
        }
        SdpStatus::MaxIter => {
            return Err(Error::SolverFailure(format!(
                "guessing probability: no convergence after {} iterations",
                sol.iterations
            )))
        }
    }
    let p_guess = sol.primal_value.min(1.0);
    let branches = program.branches(&sol.blocks);
    Ok(RandomnessResult {
        p_guess,
        h_min: -p_guess.log2(),
        x_star,
        mode: data.mode(),
        branches,
        certificate: sol,
        problem: program.problem,
    })
}
