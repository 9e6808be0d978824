//! Homogeneous self-dual interior-point method for real block SDPs.
//!
//! Embedding: find `(X, x_f, y, Z, τ, κ)` with `X, Z ⪰ 0`, `τ, κ ≥ 0` and
//!
//! ```text
//! A(X) + F x_f - b τ            = 0
//! Aᵀy + Z - C τ                 = 0
//! Fᵀy - c_f τ                   = 0
//! bᵀy - <C, X> - c_fᵀx_f - κ    = 0
//! ```
//!
//! Steps use the HKM direction with a Mehrotra predictor-corrector. Free
//! variables stay in the Newton system as a saddle-point block.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::embed::{RealProblem, RealRow};
use super::{SolveOptions, SolveStatus};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

const STEP_FRACTION: f64 = 0.98;
const MIN_STEP: f64 = 1e-12;
const INFEASIBILITY_TOLERANCE: f64 = 1e-8;
const DEPENDENCY_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Debug)]
pub(crate) struct RawSolution {
    pub status: SolveStatus,
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<DMatrix<f64>>,
    pub x_free: DVector<f64>,
    pub y: DVector<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Constraint data restricted to linearly independent rows.
struct Model<'a> {
    dims: &'a [usize],
    rows: Vec<&'a RealRow>,
    b: DVector<f64>,
    c: Vec<DMatrix<f64>>,
    c_free: DVector<f64>,
    f: DMatrix<f64>,
    /// For every block, the rows touching it and the position of that block in the row.
    block_rows: Vec<Vec<(usize, usize)>>,
    execution: Execution,
}

fn dense(n: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &(p, q, v) in entries {
        m[(p, q)] += v;
    }
    m
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `Tr[A M]` for sparse symmetric `A`.
fn sparse_inner(a: &[(usize, usize, f64)], m: &DMatrix<f64>) -> f64 {
    a.iter().map(|&(p, q, v)| v * m[(q, p)]).sum()
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn max_abs_blocks(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().flat_map(|m| m.iter()).fold(0.0, |a, x| a.max(x.abs()))
}

fn blocks_dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

impl<'a> Model<'a> {
    fn new(p: &'a RealProblem, keep: &[usize], execution: Execution) -> Self {
        let rows: Vec<&RealRow> = keep.iter().map(|&i| &p.rows[i]).collect();
        let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| p.rhs[i]));
        let mut c: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (k, entries) in &p.objective.blocks {
            c[*k] += dense(p.dims[*k], entries);
        }
        let mut c_free = DVector::zeros(p.free_vars);
        for &(i, v) in &p.objective.free {
            c_free[i] += v;
        }
        let mut f = DMatrix::zeros(rows.len(), p.free_vars);
        let mut block_rows = vec![Vec::new(); p.dims.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in &row.free {
                f[(i, j)] += v;
            }
            for (pos, (k, _)) in row.blocks.iter().enumerate() {
                block_rows[*k].push((i, pos));
            }
        }
        Model { dims: &p.dims, rows, b, c, c_free, f, block_rows, execution }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn a_apply(&self, ms: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| row.blocks.iter().map(|(k, a)| sparse_inner(a, &ms[*k])).sum::<f64>()),
        )
    }

    fn at_apply(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for (k, a) in &row.blocks {
                for &(p, q, v) in a {
                    out[*k][(p, q)] += yi * v;
                }
            }
        }
        out
    }

    fn c_inner(&self, ms: &[DMatrix<f64>], x_free: &DVector<f64>) -> f64 {
        blocks_dot(&self.c, ms) + self.c_free.dot(x_free)
    }

    /// Schur complement `H_ij = Tr[A_i Z⁻¹ A_j X]`.
    fn schur(&self, zinv: &[DMatrix<f64>], x: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.m();
        let columns = exec::map_range(self.execution, m, |j| self.schur_column(j, zinv, x));
        let mut h = DMatrix::zeros(m, m);
        for (j, col) in columns.into_iter().enumerate() {
            h.set_column(j, &col);
        }
        sym(&h)
    }

    fn schur_column(&self, j: usize, zinv: &[DMatrix<f64>], x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut col = DVector::zeros(self.m());
        for (k, aj) in &self.rows[j].blocks {
            let n = self.dims[*k];
            let mut slot = vec![usize::MAX; n];
            let mut qs = Vec::new();
            for &(_, q, _) in aj {
                if slot[q] == usize::MAX {
                    slot[q] = qs.len();
                    qs.push(q);
                }
            }
            // T = (Z⁻¹ A_j)[:, qs], G = T X[qs, :] = Z⁻¹ A_j X.
            let mut t = DMatrix::zeros(n, qs.len());
            for &(p, q, v) in aj {
                let mut dst = t.column_mut(slot[q]);
                dst.axpy(v, &zinv[*k].column(p), 1.0);
            }
            let xq = x[*k].select_rows(qs.iter());
            let g = t * xq;
            for &(i, pos) in &self.block_rows[*k] {
                col[i] += sparse_inner(&self.rows[i].blocks[pos].1, &g);
            }
        }
        col
    }
}

const REFINEMENT_ROUNDS: usize = 2;

/// Factorisation of the saddle system `[[H, F], [Fᵀ, 0]]`.
struct Saddle {
    h_dense: DMatrix<f64>,
    h: Cholesky<f64, Dyn>,
    hinv_f: DMatrix<f64>,
    s: Option<Cholesky<f64, Dyn>>,
    f: DMatrix<f64>,
}

fn regularized_cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut delta = 1e-14 * scale;
    while delta <= 1e-6 * scale {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += delta;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}

impl Saddle {
    fn new(h: &DMatrix<f64>, f: &DMatrix<f64>) -> Option<Self> {
        let hc = regularized_cholesky(h)?;
        let hinv_f = hc.solve(f);
        let s = if f.ncols() > 0 { Some(regularized_cholesky(&(f.transpose() * &hinv_f))?) } else { None };
        Some(Saddle { h_dense: h.clone(), h: hc, hinv_f, s, f: f.clone() })
    }

    /// Solves the saddle system with a few rounds of iterative refinement,
    /// which recovers the accuracy lost to ill-conditioning of `H` (and to
    /// any diagonal shift) near the optimum.
    fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut y, mut x) = self.solve_once(r1, r2);
        for _ in 0..REFINEMENT_ROUNDS {
            let e1 = r1 - &self.h_dense * &y - &self.f * &x;
            let e2 = r2 - self.f.transpose() * &y;
            let (cy, cx) = self.solve_once(&e1, &e2);
            y += cy;
            x += cx;
        }
        (y, x)
    }

    fn solve_once(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let w = self.h.solve(r1);
        match &self.s {
            None => (w, DVector::zeros(0)),
            Some(s) => {
                let dx = s.solve(&(self.f.transpose() * &w - r2));
                let dy = w - &self.hinv_f * &dx;
                (dy, dx)
            }
        }
    }
}

/// Largest `α` with `M + α ΔM ⪰ 0`, given the Cholesky factor of `M ≻ 0`.
fn max_step(chol: &Cholesky<f64, Dyn>, dm: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let Some(t) = l.solve_lower_triangular(dm) else {
        return 0.0;
    };
    let Some(s) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lmin = sym(&s).symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn scalar_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

/// Rows to keep after removing linear dependencies, plus any row whose
/// right-hand side is inconsistent with the rows it depends on.
struct Presolve {
    keep: Vec<usize>,
    /// `(row, multipliers over kept rows, residual)`.
    inconsistent: Option<(usize, Vec<f64>, f64)>,
}

fn presolve(p: &RealProblem) -> Presolve {
    let m = p.rows.len();
    // Gram matrix of the constraint functionals.
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut index: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (i, row) in p.rows.iter().enumerate() {
        for (k, a) in &row.blocks {
            for &(r, c, v) in a {
                index.entry((*k, r, c)).or_default().push((i, v));
            }
        }
        for &(j, v) in &row.free {
            index.entry((usize::MAX, j, 0)).or_default().push((i, v));
        }
    }
    for list in index.values() {
        for &(i, vi) in list {
            for &(j, vj) in list {
                gram[(i, j)] += vi * vj;
            }
        }
    }

    // Pivoted Cholesky: L[:, k] for pivot order perm[k].
    let mut diag: Vec<f64> = (0..m).map(|i| gram[(i, i)]).collect();
    let scale = diag.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut l = DMatrix::<f64>::zeros(m, m);
    let mut perm = Vec::new();
    let mut used = vec![false; m];
    for k in 0..m {
        let (piv, dmax) = (0..m)
            .filter(|&i| !used[i])
            .map(|i| (i, diag[i]))
            .fold((usize::MAX, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if piv == usize::MAX || dmax <= DEPENDENCY_TOLERANCE * scale.max(1e-300) {
            break;
        }
        used[piv] = true;
        perm.push(piv);
        let root = dmax.sqrt();
        for i in 0..m {
            if used[i] && i != piv {
                continue;
            }
            let mut v = gram[(i, piv)];
            for j in 0..k {
                v -= l[(i, j)] * l[(piv, j)];
            }
            l[(i, k)] = v / root;
        }
        for i in 0..m {
            if !used[i] {
                diag[i] -= l[(i, k)] * l[(i, k)];
            }
        }
    }
    let r = perm.len();
    let mut keep = perm.clone();
    keep.sort_unstable();
    if r == m {
        return Presolve { keep, inconsistent: None };
    }

    // For a dropped row i: G_KK λ = G_Ki, with G_KK = L_K L_Kᵀ and G_Ki = L_K l_i.
    let lk = DMatrix::from_fn(r, r, |a, b| l[(perm[a], b)]);
    let bnorm = max_abs(&p.rhs);
    for i in (0..m).filter(|i| !used[*i]) {
        let li = DVector::from_fn(r, |b, _| l[(i, b)]);
        let lambda = lk.transpose().solve_upper_triangular(&li).unwrap_or_else(|| DVector::zeros(r));
        let predicted: f64 = (0..r).map(|a| lambda[a] * p.rhs[perm[a]]).sum();
        let residual = p.rhs[i] - predicted;
        if residual.abs() > 1e-8 * (1.0 + bnorm) {
            let mut mult = vec![0.0; m];
            for a in 0..r {
                mult[perm[a]] = lambda[a];
            }
            return Presolve { keep, inconsistent: Some((i, mult, residual)) };
        }
    }
    Presolve { keep, inconsistent: None }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    xf: DVector<f64>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    xf: DVector<f64>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

#[derive(Clone)]
struct Residuals {
    p: DVector<f64>,
    d: Vec<DMatrix<f64>>,
    f: DVector<f64>,
    g: f64,
}

pub(crate) fn solve(p: &RealProblem, opts: &SolveOptions) -> Result<RawSolution> {
    if !(opts.gap_tolerance > 0.0 && opts.feasibility_tolerance > 0.0) {
        return Err(Error::MalformedProblem("tolerances must be positive".into()));
    }
    let pre = presolve(p);
    let m_full = p.rows.len();
    if let Some((row, mult, residual)) = pre.inconsistent {
        // y = (e_row - Σ λ_k e_k) / residual has bᵀy = 1 and Aᵀy = 0.
        let mut y = DVector::from_iterator(m_full, mult.iter().map(|v| -v / residual));
        y[row] = 1.0 / residual;
        return Ok(RawSolution {
            status: SolveStatus::PrimalInfeasible,
            x: p.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            z: p.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            x_free: DVector::zeros(p.free_vars),
            y,
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations: 0,
        });
    }
    let model = Model::new(p, &pre.keep, opts.execution);
    let mut raw = hsd(&model, opts);
    let mut y_full = DVector::zeros(m_full);
    for (a, &i) in pre.keep.iter().enumerate() {
        y_full[i] = raw.y[a];
    }
    raw.y = y_full;
    Ok(raw)
}

fn residuals(model: &Model, it: &Iterate) -> Residuals {
    let ax = model.a_apply(&it.x) + &model.f * &it.xf;
    let p = &model.b * it.tau - ax;
    let aty = model.at_apply(&it.y);
    let d = (0..model.dims.len()).map(|k| &model.c[k] * it.tau - &aty[k] - &it.z[k]).collect();
    let f = &model.c_free * it.tau - model.f.transpose() * &it.y;
    let g = it.kappa - model.b.dot(&it.y) + model.c_inner(&it.x, &it.xf);
    Residuals { p, d, f, g }
}

fn finish(model: &Model, it: &Iterate, status: SolveStatus, iterations: usize, res: &Residuals) -> RawSolution {
    let (x, z, xf, y, pv, dv, pr, dr) = match status {
        SolveStatus::PrimalInfeasible => {
            let by = model.b.dot(&it.y);
            let y = &it.y / by;
            (
                it.x.iter().map(|m| m * 0.0).collect(),
                it.z.iter().map(|m| m / by).collect(),
                &it.xf * 0.0,
                y,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
            )
        }
        SolveStatus::DualInfeasible => {
            let cx = -model.c_inner(&it.x, &it.xf);
            (
                it.x.iter().map(|m| m / cx).collect(),
                it.z.iter().map(|m| m * 0.0).collect(),
                &it.xf / cx,
                &it.y * 0.0,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
            )
        }
        _ => {
            let t = it.tau;
            let pv = model.c_inner(&it.x, &it.xf) / t;
            let dv = model.b.dot(&it.y) / t;
            let pr = max_abs(&res.p) / t;
            let dr = max_abs_blocks(&res.d).max(max_abs(&res.f)) / t;
            (
                it.x.iter().map(|m| m / t).collect(),
                it.z.iter().map(|m| m / t).collect(),
                &it.xf / t,
                &it.y / t,
                pv,
                dv,
                pr,
                dr,
            )
        }
    };
    RawSolution {
        status,
        x,
        z,
        x_free: xf,
        y,
        primal_value: pv,
        dual_value: dv,
        primal_residual: pr,
        dual_residual: dr,
        iterations,
    }
}

/// Absolute primal residual below which a stalled solve still counts as
/// optimal, provided the gap criterion holds.
const ACCEPT_FEASIBILITY: f64 = 1e-8;

fn stalled(
    model: &Model,
    it: &Iterate,
    res: &Residuals,
    fallback: Option<(Iterate, Residuals)>,
    iterations: usize,
) -> RawSolution {
    match fallback {
        Some((best, best_res)) => finish(model, &best, SolveStatus::Optimal, iterations, &best_res),
        None => finish(model, it, SolveStatus::NumericalFailure, iterations, res),
    }
}

fn hsd(model: &Model, opts: &SolveOptions) -> RawSolution {
    let nb = model.dims.len();
    let nu = model.dims.iter().sum::<usize>() as f64 + 1.0;
    let mut it = Iterate {
        x: model.dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        z: model.dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        xf: DVector::zeros(model.f.ncols()),
        y: DVector::zeros(model.m()),
        tau: 1.0,
        kappa: 1.0,
    };
    let b_scale = 1.0 + max_abs(&model.b);
    let c_scale = 1.0 + max_abs_blocks(&model.c).max(max_abs(&model.c_free));

    let mut iterations = 0;
    let mut fallback: Option<(Iterate, Residuals)> = None;
    loop {
        let res = residuals(model, &it);
        let t = it.tau;
        let pres = max_abs(&res.p) / t;
        let dres = max_abs_blocks(&res.d).max(max_abs(&res.f)) / t;
        let pobj = model.c_inner(&it.x, &it.xf) / t;
        let dobj = model.b.dot(&it.y) / t;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        if pres <= opts.feasibility_tolerance * b_scale
            && dres <= opts.feasibility_tolerance * c_scale
            && rel_gap <= opts.gap_tolerance
        {
            return finish(model, &it, SolveStatus::Optimal, iterations, &res);
        }
        // Remember the last iterate that already meets the absolute
        // acceptance level, in case the end game stalls.
        if pres <= ACCEPT_FEASIBILITY && dres <= ACCEPT_FEASIBILITY * c_scale && rel_gap <= opts.gap_tolerance {
            fallback = Some((it.clone(), res.clone()));
        }

        // Infeasibility certificates.
        let by = model.b.dot(&it.y);
        if by > 0.0 {
            let aty = model.at_apply(&it.y);
            let ray: Vec<DMatrix<f64>> = (0..nb).map(|k| &aty[k] + &it.z[k]).collect();
            let err = max_abs_blocks(&ray).max(max_abs(&(model.f.transpose() * &it.y)));
            if err / by <= INFEASIBILITY_TOLERANCE && it.tau < 1e-2 * it.kappa {
                return finish(model, &it, SolveStatus::PrimalInfeasible, iterations, &res);
            }
        }
        let cx = -model.c_inner(&it.x, &it.xf);
        if cx > 0.0 {
            let err = max_abs(&(model.a_apply(&it.x) + &model.f * &it.xf));
            if err / cx <= INFEASIBILITY_TOLERANCE && it.tau < 1e-2 * it.kappa {
                return finish(model, &it, SolveStatus::DualInfeasible, iterations, &res);
            }
        }
        if iterations >= opts.max_iterations {
            return stalled(model, &it, &res, fallback, iterations);
        }
        iterations += 1;

        let Some(step) = newton_step(model, &it, &res, nu) else {
            return stalled(model, &it, &res, fallback, iterations);
        };
        let (dir, alpha) = step;
        if alpha < MIN_STEP {
            return stalled(model, &it, &res, fallback, iterations);
        }
        for k in 0..nb {
            it.x[k] = sym(&(&it.x[k] + &dir.x[k] * alpha));
            it.z[k] = sym(&(&it.z[k] + &dir.z[k] * alpha));
        }
        it.xf += &dir.xf * alpha;
        it.y += &dir.y * alpha;
        it.tau += alpha * dir.tau;
        it.kappa += alpha * dir.kappa;

        // Keep the homogeneous scale bounded.
        let norm = it.tau.max(it.kappa);
        if !(1e-8..=1e8).contains(&norm) {
            let s = 1.0 / norm;
            for k in 0..nb {
                it.x[k] *= s;
                it.z[k] *= s;
            }
            it.xf *= s;
            it.y *= s;
            it.tau *= s;
            it.kappa *= s;
        }
    }
}

/// Predictor-corrector step; returns the direction and the step length.
fn newton_step(model: &Model, it: &Iterate, res: &Residuals, nu: f64) -> Option<(Direction, f64)> {
    let nb = model.dims.len();
    let xchol: Vec<Cholesky<f64, Dyn>> = it.x.iter().map(|m| Cholesky::new(m.clone())).collect::<Option<_>>()?;
    let zchol: Vec<Cholesky<f64, Dyn>> = it.z.iter().map(|m| Cholesky::new(m.clone())).collect::<Option<_>>()?;
    let zinv: Vec<DMatrix<f64>> = zchol.iter().map(|c| c.inverse()).collect();
    let mu = (blocks_dot(&it.x, &it.z) + it.tau * it.kappa) / nu;

    let h = model.schur(&zinv, &it.x);
    let saddle = Saddle::new(&h, &model.f)?;

    // Z⁻¹ C X and its images.
    let zcx: Vec<DMatrix<f64>> = (0..nb).map(|k| &zinv[k] * &model.c[k] * &it.x[k]).collect();
    let g = model.a_apply(&zcx);
    let (uby, ubx) = saddle.solve(&model.b, &model.c_free);
    let (ugy, ugx) = saddle.solve(&g, &DVector::zeros(model.c_free.len()));
    let u1y = &uby + &ugy;
    let u1x = &ubx + &ugx;
    let bmg = &model.b - &g;
    // The Schur complement of τ. The term <C, Z⁻¹CX> - gᵀH⁻¹g cancels
    // catastrophically near the optimum, so it is evaluated as the squared
    // scaled norm of R = C - Aᵀ(H⁻¹g), which is nonnegative by construction.
    let w = saddle.h.solve(&g);
    let atw = model.at_apply(&w);
    let projected: f64 = (0..nb)
        .map(|k| {
            let r = &model.c[k] - &atw[k];
            let zrx = &zinv[k] * &r * &it.x[k];
            r.dot(&zrx.transpose())
        })
        .sum();
    // The remaining pieces are squared norms as well:
    // bᵀ(H⁻¹ - H⁻¹F S⁻¹ FᵀH⁻¹)b is the least-squares residual of L⁻¹b
    // against L⁻¹F, and the free-variable part is a norm in S⁻¹.
    let (b_part, free_part) = {
        let l = saddle.h.l();
        let v = l.solve_lower_triangular(&model.b).unwrap_or_else(|| DVector::zeros(model.m()));
        match &saddle.s {
            Some(s) => {
                let phi = l.solve_lower_triangular(&model.f).unwrap_or_else(|| model.f.clone());
                let z = s.solve(&(phi.transpose() * &v));
                let r = &v - &phi * z;
                let e = model.f.transpose() * &w - &model.c_free;
                let le = s.l().solve_lower_triangular(&e).unwrap_or(e);
                (r.norm_squared(), le.norm_squared())
            }
            None => (v.norm_squared(), 0.0),
        }
    };
    let denom = projected.max(0.0) + b_part + free_part + it.kappa / it.tau;
    if !(denom.is_finite() && denom > 0.0) {
        return None;
    }

    let zrx: Vec<DMatrix<f64>> = (0..nb).map(|k| &zinv[k] * &res.d[k] * &it.x[k]).collect();
    let a_zrx = model.a_apply(&zrx);
    let c_zrx = blocks_dot(&model.c, &zrx.iter().map(sym).collect::<Vec<_>>());

    let solve = |eta: f64, d: &[DMatrix<f64>], r_tau: f64| -> Direction {
        let h1 = &res.p * eta - model.a_apply(d) + &a_zrx * eta;
        let rhs3 = eta * res.g + blocks_dot(&model.c, d) - eta * c_zrx + r_tau / it.tau;
        let (u2y, u2x) = saddle.solve(&h1, &(&res.f * eta));
        let dtau = (rhs3 - bmg.dot(&u2y) + model.c_free.dot(&u2x)) / denom;
        let dy = u2y + &u1y * dtau;
        let dxf = u2x + &u1x * dtau;
        let aty = model.at_apply(&dy);
        let dz: Vec<DMatrix<f64>> =
            (0..nb).map(|k| sym(&(&res.d[k] * eta + &model.c[k] * dtau - &aty[k]))).collect();
        let dx: Vec<DMatrix<f64>> =
            (0..nb).map(|k| &d[k] - sym(&(&zinv[k] * &dz[k] * &it.x[k]))).collect();
        let dkappa = (r_tau - it.kappa * dtau) / it.tau;
        Direction { x: dx, z: dz, xf: dxf, y: dy, tau: dtau, kappa: dkappa }
    };
    let step_length = |dir: &Direction| -> f64 {
        let mut a = scalar_step(it.tau, dir.tau).min(scalar_step(it.kappa, dir.kappa));
        for k in 0..nb {
            a = a.min(max_step(&xchol[k], &dir.x[k]));
            a = a.min(max_step(&zchol[k], &dir.z[k]));
        }
        a
    };

    // Predictor.
    let d_aff: Vec<DMatrix<f64>> = it.x.iter().map(|x| -x).collect();
    let aff = solve(1.0, &d_aff, -it.tau * it.kappa);
    let a_aff = step_length(&aff).min(1.0);
    let mu_aff = {
        let xz: f64 = (0..nb)
            .map(|k| (&it.x[k] + &aff.x[k] * a_aff).dot(&(&it.z[k] + &aff.z[k] * a_aff)))
            .sum();
        (xz + (it.tau + a_aff * aff.tau) * (it.kappa + a_aff * aff.kappa)) / nu
    };
    let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

    // Corrector.
    let d_cor: Vec<DMatrix<f64>> = (0..nb)
        .map(|k| sym(&(&zinv[k] * (sigma * mu) - &it.x[k] - &zinv[k] * &aff.z[k] * &aff.x[k])))
        .collect();
    let r_tau = sigma * mu - it.tau * it.kappa - aff.tau * aff.kappa;
    let dir = solve(1.0 - sigma, &d_cor, r_tau);
    let alpha = (STEP_FRACTION * step_length(&dir)).min(1.0);
    Some((dir, alpha))
}
