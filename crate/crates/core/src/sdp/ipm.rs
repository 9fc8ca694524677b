//! Primal-dual interior-point method for real block-diagonal SDPs in the form
//!
//! ```text
//! min ⟨C, X⟩  s.t.  ⟨A_i, X⟩ = b_i,  X ⪰ 0
//! max b·y     s.t.  Z = C − Σ y_i A_i ⪰ 0
//! ```
//!
//! Infeasible start, HKM search direction, Mehrotra predictor-corrector.

use nalgebra::{DMatrix, DVector};

pub(crate) type Blocks = Vec<DMatrix<f64>>;

/// One constraint, stored densely on the blocks it touches.
#[derive(Clone, Debug)]
pub(crate) struct RealConstraint {
    pub terms: Vec<(usize, DMatrix<f64>)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct RealSdp {
    pub sizes: Vec<usize>,
    pub c: Blocks,
    pub constraints: Vec<RealConstraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    MaxIter,
    Diverged,
}

#[derive(Clone, Debug)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: Blocks,
    pub y: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
}

pub(crate) const MAX_ITER: usize = 150;
const STEP_FRACTION: f64 = 0.95;
const DIVERGENCE: f64 = 1e12;

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &Blocks) -> f64 {
    inner(a, a).sqrt()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

impl RealSdp {
    fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn apply(&self, x: &Blocks) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|con| con.terms.iter().map(|(k, a)| a.dot(&x[*k])).sum::<f64>()),
        )
    }

    fn adjoint(&self, y: &[f64]) -> Blocks {
        let mut out: Blocks = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (con, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                for (k, a) in &con.terms {
                    out[*k] += a * yi;
                }
            }
        }
        out
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.constraints.len(), self.constraints.iter().map(|c| c.rhs))
    }

    /// For each block, the constraints with a term on it and the term index.
    fn block_index(&self) -> Vec<Vec<(usize, usize)>> {
        let mut idx = vec![Vec::new(); self.sizes.len()];
        for (i, con) in self.constraints.iter().enumerate() {
            for (t, (k, _)) in con.terms.iter().enumerate() {
                idx[*k].push((i, t));
            }
        }
        idx
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0`, or infinity.
fn max_step(chol_l: &[DMatrix<f64>], dx: &Blocks) -> f64 {
    let mut alpha = f64::INFINITY;
    for (l, d) in chol_l.iter().zip(dx) {
        let t = l.solve_lower_triangular(d).expect("triangular factor is nonsingular");
        let mut w = l
            .solve_lower_triangular(&t.transpose())
            .expect("triangular factor is nonsingular");
        symmetrize(&mut w);
        let lmin = w.symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

fn cholesky_lower(blocks: &Blocks) -> Option<Vec<DMatrix<f64>>> {
    blocks
        .iter()
        .map(|m| m.clone().cholesky().map(|c| c.l()))
        .collect()
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = m.clone();
    for i in 0..m.nrows() {
        reg[(i, i)] += 1e-13 * scale;
    }
    if let Some(ch) = reg.cholesky() {
        return Some(ch.solve(rhs));
    }
    m.clone().lu().solve(rhs)
}

pub(crate) fn solve(p: &RealSdp, tol: f64) -> IpmResult {
    let n_total = p.total_size().max(1) as f64;
    let m = p.constraints.len();
    let b = p.rhs();
    let b_norm = b.norm();
    let c_norm = norm(&p.c);
    let index = p.block_index();
    // stop an order of magnitude inside the requested tolerance
    let target = 0.1 * tol;

    let a_max = p
        .constraints
        .iter()
        .map(|con| con.terms.iter().map(|(_, a)| a.norm_squared()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let xi_p = p
        .constraints
        .iter()
        .map(|con| {
            let an = con.terms.iter().map(|(_, a)| a.norm_squared()).sum::<f64>().sqrt();
            (1.0 + con.rhs.abs()) / (1.0 + an)
        })
        .fold(10.0_f64, f64::max)
        * n_total.sqrt();
    let xi_d = 10.0_f64.max(n_total.sqrt()).max(c_norm).max(a_max);

    let mut x: Blocks = p.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi_p).collect();
    let mut z: Blocks = p.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi_d).collect();
    let mut y = vec![0.0; m];
    let mut status = IpmStatus::MaxIter;
    let mut iterations = 0;
    // most accurate iterate so far, by its worst relative residual
    let mut best: Option<(f64, Blocks, Vec<f64>)> = None;

    for iter in 0..MAX_ITER {
        iterations = iter;
        let rp = &b - p.apply(&x);
        let aty = p.adjoint(&y);
        let rd: Blocks = p
            .c
            .iter()
            .zip(&aty)
            .zip(&z)
            .map(|((c, a), z)| c - a - z)
            .collect();
        let primal = inner(&p.c, &x);
        let dual = b.dot(&DVector::from_column_slice(&y));
        let xz = inner(&x, &z);
        let mu = xz / n_total;

        let rel_p = rp.norm() / (1.0 + b_norm);
        let rel_d = norm(&rd) / (1.0 + c_norm);
        let rel_gap = (primal - dual).abs().max(xz.abs()) / (1.0 + primal.abs() + dual.abs());
        if rel_p < target && rel_d < target && rel_gap < target {
            status = IpmStatus::Optimal;
            best = None;
            break;
        }
        let merit = rel_p.max(rel_d).max(rel_gap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone()));
        }
        if norm(&x) > DIVERGENCE || norm(&z) > DIVERGENCE {
            status = IpmStatus::Diverged;
            break;
        }

        let (lx, lz) = match (cholesky_lower(&x), cholesky_lower(&z)) {
            (Some(lx), Some(lz)) => (lx, lz),
            _ => {
                status = IpmStatus::Diverged;
                break;
            }
        };
        let zinv: Blocks = z
            .iter()
            .map(|zk| zk.clone().cholesky().expect("Z factored above").inverse())
            .collect();

        // Schur complement M_ji = ⟨A_j, X A_i Z⁻¹⟩
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (k, touching) in index.iter().enumerate() {
            for &(i, ti) in touching {
                let ai = &p.constraints[i].terms[ti].1;
                let g = &x[k] * ai * &zinv[k];
                for &(j, tj) in touching {
                    if j < i {
                        continue;
                    }
                    let v = p.constraints[j].terms[tj].1.dot(&g);
                    schur[(j, i)] += v;
                    if j != i {
                        schur[(i, j)] += v;
                    }
                }
            }
        }

        let x_rd_zinv: Blocks = x
            .iter()
            .zip(&rd)
            .zip(&zinv)
            .map(|((xk, rk), zi)| xk * rk * zi)
            .collect();

        let direction = |rc: &Blocks| -> Option<(Blocks, Vec<f64>, Blocks)> {
            let t: Blocks = rc.iter().zip(&x_rd_zinv).map(|(r, q)| r - q).collect();
            let rhs = &rp - p.apply(&t);
            let dy = solve_spd(&schur, &rhs)?;
            let dy: Vec<f64> = dy.iter().copied().collect();
            let atdy = p.adjoint(&dy);
            let dz: Blocks = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dx: Blocks = rc
                .iter()
                .zip(&x)
                .zip(&dz)
                .zip(&zinv)
                .map(|(((r, xk), dzk), zi)| {
                    let mut s = xk * dzk * zi;
                    symmetrize(&mut s);
                    r - s
                })
                .collect();
            Some((dx, dy, dz))
        };

        // predictor
        let rc_aff: Blocks = x.iter().map(|xk| -xk).collect();
        let Some((dx_a, _, dz_a)) = direction(&rc_aff) else {
            status = IpmStatus::Diverged;
            break;
        };
        let ap = (STEP_FRACTION * max_step(&lx, &dx_a)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&lz, &dz_a)).min(1.0);
        let mut xz_aff = 0.0;
        for k in 0..x.len() {
            let xa = &x[k] + &dx_a[k] * ap;
            let za = &z[k] + &dz_a[k] * ad;
            xz_aff += xa.dot(&za);
        }
        let sigma = if mu > 0.0 {
            ((xz_aff / n_total) / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // corrector
        let rc: Blocks = (0..x.len())
            .map(|k| {
                let mut corr = &dx_a[k] * &dz_a[k] * &zinv[k];
                symmetrize(&mut corr);
                &zinv[k] * (sigma * mu) - &x[k] - corr
            })
            .collect();
        let Some((dx, dy, dz)) = direction(&rc) else {
            status = IpmStatus::Diverged;
            break;
        };
        let ap = (STEP_FRACTION * max_step(&lx, &dx)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&lz, &dz)).min(1.0);
        for k in 0..x.len() {
            x[k] += &dx[k] * ap;
            symmetrize(&mut x[k]);
            z[k] += &dz[k] * ad;
            symmetrize(&mut z[k]);
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        iterations = iter + 1;
    }

    // Near degenerate optima the iterates can stall or lose definiteness
    // before reaching the inner target; the requested tolerance still decides.
    if let Some((merit, bx, by)) = best {
        if status != IpmStatus::Optimal && merit < tol {
            status = IpmStatus::Optimal;
            x = bx;
            y = by;
        }
    }
    let primal = inner(&p.c, &x);
    let dual = b.dot(&DVector::from_column_slice(&y));
    IpmResult {
        status,
        x,
        y,
        primal,
        dual,
        iterations,
    }
}

/// Greedy rank-revealing selection of constraints by modified Gram-Schmidt.
/// Returns the kept indices, or the index of a constraint whose right-hand
/// side contradicts the ones before it.
pub(crate) fn independent_constraints(p: &RealSdp) -> std::result::Result<Vec<usize>, usize> {
    let offsets: Vec<usize> = p
        .sizes
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n * n;
            Some(o)
        })
        .collect();
    let len: usize = p.sizes.iter().map(|n| n * n).sum();
    let flatten = |con: &RealConstraint| {
        let mut v = vec![0.0; len];
        for (k, a) in &con.terms {
            for (t, x) in a.iter().enumerate() {
                v[offsets[*k] + t] += x;
            }
        }
        v
    };
    let rows: Vec<Vec<f64>> = p.constraints.iter().map(flatten).collect();
    let row_norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = rows.iter().map(|v| row_norm(v)).fold(0.0, f64::max);
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut keep = Vec::new();
    for (i, (con, mut v)) in p.constraints.iter().zip(rows).enumerate() {
        let mut r = con.rhs;
        let norm0 = row_norm(&v);
        for _ in 0..2 {
            for (q, beta) in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                if c != 0.0 {
                    v.iter_mut().zip(q).for_each(|(x, qq)| *x -= c * qq);
                    r -= c * beta;
                }
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv <= 1e-10 * norm0 || norm0 <= 1e-12 * scale {
            if r.abs() > 1e-8 * (1.0 + con.rhs.abs()) {
                return Err(i);
            }
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push((v, r / nv));
        keep.push(i);
    }
    Ok(keep)
}
