use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::DMatrix;

use super::ipm::{self, IpmStatus, RealConstraint, RealSdp};
use crate::error::{dim_err, Error, Result};
use crate::qmath::{ComplexMatrix, Complex64, ONE, ZERO};

/// Default duality-gap tolerance.
pub const SDP_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Complex Hermitian PSD block.
    Hermitian,
    /// Real symmetric PSD block; a 1×1 block is a nonnegative scalar.
    Real,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub label: String,
    pub kind: BlockKind,
    pub size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `Σ_t Re Tr[G_t X_{block_t}]`. Only the Hermitian part of each `G_t`
/// contributes, so the functional is real on the PSD cone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearFunctional {
    pub terms: Vec<(usize, ComplexMatrix)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, block: usize, coeff: ComplexMatrix) -> Self {
        self.terms.push((block, coeff));
        self
    }

    pub fn push(&mut self, block: usize, coeff: ComplexMatrix) {
        self.terms.push((block, coeff));
    }
}

/// Linear map from a block into a matrix equality.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixTerm {
    /// `c · X_block`, block of the same side as the target.
    Scaled(usize, f64),
    /// `x · M` for a 1×1 block `x`.
    ScalarTimes(usize, ComplexMatrix),
    /// `c · V X_block V†`, with `V` of shape `target side × block side`.
    Congruence(usize, ComplexMatrix, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    sense: Sense,
    blocks: Vec<Block>,
    objective: LinearFunctional,
    constraints: Vec<(LinearFunctional, f64)>,
    /// `(constraint range, side)` of each matrix equality, for dual recovery.
    matrix_groups: Vec<(Range<usize>, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective value in the problem's own sense.
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub blocks: Vec<ComplexMatrix>,
    /// One multiplier per constraint (zero for constraints dropped as redundant).
    pub dual: Vec<f64>,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Orthonormal Hermitian basis of `n × n` matrices under `Re Tr[A B]`:
/// `E_ii`, then `(E_ij + E_ji)/√2` and `i(E_ij − E_ji)/√2` for `i < j`.
pub fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = ComplexMatrix::zeros(n, n);
        e[(i, i)] = ONE;
        out.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut s = ComplexMatrix::zeros(n, n);
            s[(i, j)] = Complex64::new(h, 0.0);
            s[(j, i)] = Complex64::new(h, 0.0);
            out.push(s);
            let mut a = ComplexMatrix::zeros(n, n);
            a[(i, j)] = Complex64::new(0.0, h);
            a[(j, i)] = Complex64::new(0.0, -h);
            out.push(a);
        }
    }
    out
}

/// `V† G V`, the coefficient of `Y` in `Re Tr[G V Y V†]`.
pub fn compress(v: &ComplexMatrix, g: &ComplexMatrix) -> ComplexMatrix {
    v.adjoint()
        .matmul(g)
        .and_then(|t| t.matmul(v))
        .expect("isometry shape matches coefficient")
}

fn re_tr(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            blocks: Vec::new(),
            objective: LinearFunctional::new(),
            constraints: Vec::new(),
            matrix_groups: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[(LinearFunctional, f64)] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinearFunctional {
        &self.objective
    }

    pub fn add_block(&mut self, label: impl Into<String>, kind: BlockKind, size: usize) -> usize {
        self.blocks.push(Block {
            label: label.into(),
            kind,
            size,
        });
        self.blocks.len() - 1
    }

    pub fn add_objective_term(&mut self, block: usize, coeff: ComplexMatrix) {
        self.objective.push(block, coeff);
    }

    pub fn set_objective(&mut self, f: LinearFunctional) {
        self.objective = f;
    }

    /// `f(X) = rhs`; returns the constraint index.
    pub fn add_constraint(&mut self, f: LinearFunctional, rhs: f64) -> usize {
        self.constraints.push((f, rhs));
        self.constraints.len() - 1
    }

    /// `Σ_t term_t = target` for a Hermitian `target`, expanded into one real
    /// constraint per element of [`hermitian_basis`].
    pub fn add_matrix_equality(&mut self, terms: &[MatrixTerm], target: &ComplexMatrix) -> Range<usize> {
        let n = target.rows();
        let start = self.constraints.len();
        for g in hermitian_basis(n) {
            let mut f = LinearFunctional::new();
            for t in terms {
                match t {
                    MatrixTerm::Scaled(block, c) => f.push(*block, g.scale_real(*c)),
                    MatrixTerm::ScalarTimes(block, m) => {
                        f.push(*block, ComplexMatrix::from_fn(1, 1, |_, _| Complex64::new(re_tr(&g, m), 0.0)))
                    }
                    MatrixTerm::Congruence(block, v, c) => f.push(*block, compress(v, &g).scale_real(*c)),
                }
            }
            let rhs = re_tr(&g, target);
            self.constraints.push((f, rhs));
        }
        let range = start..self.constraints.len();
        self.matrix_groups.push((range.clone(), n));
        range
    }

    /// Multiplier matrix `Σ_k y_k G_k` of a matrix equality added with
    /// [`Self::add_matrix_equality`].
    pub fn dual_matrix(&self, solution: &SdpSolution, range: &Range<usize>) -> Result<ComplexMatrix> {
        let (_, n) = self
            .matrix_groups
            .iter()
            .find(|(r, _)| r == range)
            .ok_or_else(|| Error::InvalidParameter("range is not a matrix equality".into()))?;
        let mut acc = ComplexMatrix::zeros(*n, *n);
        for (g, k) in hermitian_basis(*n).into_iter().zip(range.clone()) {
            acc += &g.scale_real(solution.dual[k]);
        }
        Ok(acc)
    }

    /// Evaluates a functional on complex block values.
    pub fn evaluate(f: &LinearFunctional, blocks: &[ComplexMatrix]) -> f64 {
        f.terms.iter().map(|(k, g)| re_tr(g, &blocks[*k])).sum()
    }

    fn validate(&self) -> Result<()> {
        let check = |f: &LinearFunctional| -> Result<()> {
            for (k, g) in &f.terms {
                let block = self
                    .blocks
                    .get(*k)
                    .ok_or_else(|| dim_err(format!("functional references undeclared block {k}")))?;
                if g.rows() != block.size || g.cols() != block.size {
                    return Err(dim_err(format!(
                        "coefficient of side {}x{} on block '{}' of side {}",
                        g.rows(),
                        g.cols(),
                        block.label,
                        block.size
                    )));
                }
            }
            Ok(())
        };
        if self.blocks.is_empty() || self.blocks.iter().any(|b| b.size == 0) {
            return Err(Error::InvalidParameter("SDP needs nonempty blocks".into()));
        }
        check(&self.objective)?;
        for (f, rhs) in &self.constraints {
            check(f)?;
            if !rhs.is_finite() {
                return Err(Error::InvalidParameter("non-finite constraint target".into()));
            }
        }
        Ok(())
    }

    fn real_size(&self, k: usize) -> usize {
        match self.blocks[k].kind {
            BlockKind::Hermitian => 2 * self.blocks[k].size,
            BlockKind::Real => self.blocks[k].size,
        }
    }

    /// Real symmetric coefficient with `⟨embed(G), Y⟩ = Re Tr[G X]`.
    fn embed_coeff(&self, k: usize, g: &ComplexMatrix) -> DMatrix<f64> {
        let h = g.hermitian_part();
        let n = self.blocks[k].size;
        match self.blocks[k].kind {
            BlockKind::Real => DMatrix::from_fn(n, n, |i, j| h[(i, j)].re),
            BlockKind::Hermitian => DMatrix::from_fn(2 * n, 2 * n, |i, j| {
                let (bi, ri) = (i / n, i % n);
                let (bj, rj) = (j / n, j % n);
                let v = h[(ri, rj)];
                0.5 * match (bi, bj) {
                    (0, 0) | (1, 1) => v.re,
                    (0, 1) => -v.im,
                    _ => v.im,
                }
            }),
        }
    }

    fn recover(&self, k: usize, y: &DMatrix<f64>) -> ComplexMatrix {
        let n = self.blocks[k].size;
        match self.blocks[k].kind {
            BlockKind::Real => ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(y[(i, j)], 0.0)),
            BlockKind::Hermitian => ComplexMatrix::from_fn(n, n, |i, j| {
                Complex64::new(
                    0.5 * (y[(i, j)] + y[(n + i, n + j)]),
                    0.5 * (y[(n + i, j)] - y[(i, n + j)]),
                )
            }),
        }
    }

    fn to_real(&self) -> RealSdp {
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let sizes: Vec<usize> = (0..self.blocks.len()).map(|k| self.real_size(k)).collect();
        let mut c: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (k, g) in &self.objective.terms {
            c[*k] += self.embed_coeff(*k, g) * sign;
        }
        let constraints = self
            .constraints
            .iter()
            .map(|(f, rhs)| {
                let mut terms: Vec<(usize, DMatrix<f64>)> = Vec::new();
                for (k, g) in &f.terms {
                    let e = self.embed_coeff(*k, g);
                    match terms.iter_mut().find(|(kk, _)| kk == k) {
                        Some((_, acc)) => *acc += e,
                        None => terms.push((*k, e)),
                    }
                }
                RealConstraint { terms, rhs: *rhs }
            })
            .collect();
        RealSdp { sizes, c, constraints }
    }

    /// Plain-text sparse dump.
    ///
    /// ```text
    /// sense max|min
    /// block <index> <hermitian|real> <side> <label>
    /// objective
    /// <block> <row> <col> <re> <im>
    /// constraint <index> <rhs>
    /// <block> <row> <col> <re> <im>
    /// end
    /// ```
    ///
    /// Triplets list the Hermitian part of each coefficient with `row ≤ col`;
    /// the functional is `Σ Re Tr[G X]` with `G` rebuilt by Hermitian symmetry.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        let _ = writeln!(s, "sense {sense}");
        for (k, b) in self.blocks.iter().enumerate() {
            let kind = match b.kind {
                BlockKind::Hermitian => "hermitian",
                BlockKind::Real => "real",
            };
            let _ = writeln!(s, "block {k} {kind} {} {}", b.size, b.label);
        }
        let triplets = |s: &mut String, f: &LinearFunctional| {
            for (k, g) in &f.terms {
                let h = g.hermitian_part();
                for i in 0..h.rows() {
                    for j in i..h.cols() {
                        let v = h[(i, j)];
                        if v != ZERO {
                            let _ = writeln!(s, "{k} {i} {j} {:e} {:e}", v.re, v.im);
                        }
                    }
                }
            }
        };
        let _ = writeln!(s, "objective");
        triplets(&mut s, &self.objective);
        for (i, (f, rhs)) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "constraint {i} {rhs:e}");
            triplets(&mut s, f);
        }
        s.push_str("end\n");
        s
    }

    /// Parses the format written by [`Self::to_dump`].
    pub fn from_dump(text: &str) -> Result<Self> {
        let perr = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut problem: Option<SdpProblem> = None;
        let mut current: Option<LinearFunctional> = None;
        let mut current_rhs: Option<f64> = None;
        let mut finished = false;
        let flush = |p: &mut SdpProblem, f: Option<LinearFunctional>, rhs: Option<f64>| {
            if let Some(f) = f {
                match rhs {
                    None => p.objective = f,
                    Some(r) => {
                        p.constraints.push((f, r));
                    }
                }
            }
        };
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            match fields[0] {
                "sense" => {
                    let sense = match fields.get(1) {
                        Some(&"max") => Sense::Maximize,
                        Some(&"min") => Sense::Minimize,
                        _ => return Err(perr(line, "sense must be max or min")),
                    };
                    problem = Some(SdpProblem::new(sense));
                }
                "block" => {
                    let p = problem.as_mut().ok_or_else(|| perr(line, "block before sense"))?;
                    if fields.len() < 4 {
                        return Err(perr(line, "block needs index, kind and side"));
                    }
                    let kind = match fields[2] {
                        "hermitian" => BlockKind::Hermitian,
                        "real" => BlockKind::Real,
                        _ => return Err(perr(line, "unknown block kind")),
                    };
                    let size = fields[3].parse().map_err(|_| perr(line, "bad block side"))?;
                    p.add_block(fields[4..].join(" "), kind, size);
                }
                "objective" | "constraint" | "end" => {
                    let p = problem.as_mut().ok_or_else(|| perr(line, "section before sense"))?;
                    flush(p, current.take(), current_rhs.take());
                    match fields[0] {
                        "objective" => current = Some(LinearFunctional::new()),
                        "constraint" => {
                            let rhs = fields
                                .get(2)
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| perr(line, "constraint needs a target"))?;
                            current = Some(LinearFunctional::new());
                            current_rhs = Some(rhs);
                        }
                        _ => finished = true,
                    }
                }
                _ => {
                    let p = problem.as_ref().ok_or_else(|| perr(line, "entry before sense"))?;
                    let f = current.as_mut().ok_or_else(|| perr(line, "entry outside a section"))?;
                    if fields.len() != 5 {
                        return Err(perr(line, "entry needs block row col re im"));
                    }
                    let k: usize = fields[0].parse().map_err(|_| perr(line, "bad block index"))?;
                    let i: usize = fields[1].parse().map_err(|_| perr(line, "bad row"))?;
                    let j: usize = fields[2].parse().map_err(|_| perr(line, "bad column"))?;
                    let re: f64 = fields[3].parse().map_err(|_| perr(line, "bad real part"))?;
                    let im: f64 = fields[4].parse().map_err(|_| perr(line, "bad imaginary part"))?;
                    let n = p
                        .blocks
                        .get(k)
                        .ok_or_else(|| perr(line, "undeclared block"))?
                        .size;
                    if i > j || j >= n {
                        return Err(perr(line, "entry outside the upper triangle"));
                    }
                    let mut g = ComplexMatrix::zeros(n, n);
                    g[(i, j)] = Complex64::new(re, im);
                    if i != j {
                        g[(j, i)] = Complex64::new(re, -im);
                    }
                    match f.terms.iter_mut().find(|(kk, _)| *kk == k) {
                        Some((_, acc)) => *acc += &g,
                        None => f.push(k, g),
                    }
                }
            }
        }
        if !finished {
            return Err(perr(text.lines().count().max(1), "missing end marker"));
        }
        problem.ok_or_else(|| perr(1, "empty dump"))
    }
}

/// Solves the problem. Redundant constraints are dropped first; a right-hand
/// side contradicting the others, or a positive phase-I optimum after a
/// failed solve, yields [`SdpStatus::Infeasible`].
pub fn solve_sdp(problem: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    problem.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let full = problem.to_real();
    let infeasible = |iterations| SdpSolution {
        status: SdpStatus::Infeasible,
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        gap: f64::NAN,
        blocks: Vec::new(),
        dual: vec![0.0; problem.constraints.len()],
        iterations,
    };
    let keep = match ipm::independent_constraints(&full) {
        Ok(k) => k,
        Err(_) => return Ok(infeasible(0)),
    };
    let reduced = RealSdp {
        sizes: full.sizes.clone(),
        c: full.c.clone(),
        constraints: keep.iter().map(|&i| full.constraints[i].clone()).collect(),
    };
    let res = ipm::solve(&reduced, tol);
    if res.status != IpmStatus::Optimal && phase_one_infeasible(&reduced, tol) {
        return Ok(infeasible(res.iterations));
    }
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut dual = vec![0.0; problem.constraints.len()];
    for (pos, &i) in keep.iter().enumerate() {
        dual[i] = sign * res.y[pos];
    }
    let blocks = res.x.iter().enumerate().map(|(k, y)| problem.recover(k, y)).collect();
    Ok(SdpSolution {
        status: if res.status == IpmStatus::Optimal {
            SdpStatus::Optimal
        } else {
            SdpStatus::MaxIter
        },
        primal_value: sign * res.primal,
        dual_value: sign * res.dual,
        gap: (res.primal - res.dual).abs(),
        blocks,
        dual,
        iterations: res.iterations,
    })
}

/// `min Σ (u_i + v_i)` s.t. `⟨A_i, X⟩ + u_i − v_i = b_i`; a positive optimum
/// proves the original constraints infeasible.
fn phase_one_infeasible(p: &RealSdp, tol: f64) -> bool {
    let nb = p.sizes.len();
    let m = p.constraints.len();
    let mut sizes = p.sizes.clone();
    sizes.extend(std::iter::repeat_n(1, 2 * m));
    let mut c: Vec<DMatrix<f64>> = p.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    c.extend(std::iter::repeat_n(DMatrix::from_element(1, 1, 1.0), 2 * m));
    let constraints = p
        .constraints
        .iter()
        .enumerate()
        .map(|(i, con)| {
            let mut terms = con.terms.clone();
            terms.push((nb + 2 * i, DMatrix::from_element(1, 1, 1.0)));
            terms.push((nb + 2 * i + 1, DMatrix::from_element(1, 1, -1.0)));
            RealConstraint { terms, rhs: con.rhs }
        })
        .collect();
    let aux = RealSdp { sizes, c, constraints };
    let res = ipm::solve(&aux, tol);
    let scale = 1.0 + p.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    res.primal.max(res.dual) > 1e3 * tol * scale
}
