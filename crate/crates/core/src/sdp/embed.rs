//! Lowering of complex block problems to real symmetric ones and back.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ipm::RawSolution;
use super::{LinearFunctional, Relation, SdpProblem, SdpSolution, Sense, SolveStatus};
use crate::matlin::{ComplexMatrix, HermitianOperator};

/// `[[Re H, -Im H], [Im H, Re H]]`. Positive semidefinite iff `H` is, with
/// every eigenvalue doubled in multiplicity.
pub fn embed_complex(h: &HermitianOperator) -> DMatrix<f64> {
    let n = h.dim();
    let m = h.matrix();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Sparse symmetric coefficients, both triangles stored.
pub(crate) type RealSparse = Vec<(usize, usize, f64)>;

#[derive(Clone, Debug, Default)]
pub(crate) struct RealRow {
    pub blocks: Vec<(usize, RealSparse)>,
    pub free: Vec<(usize, f64)>,
}

/// `min <C, X> + c_f x_f  s.t.  A(X) + F x_f = b,  X ⪰ 0`.
#[derive(Clone, Debug)]
pub(crate) struct RealProblem {
    pub dims: Vec<usize>,
    pub free_vars: usize,
    pub objective: RealRow,
    pub rows: Vec<RealRow>,
    pub rhs: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BlockKind {
    Real,
    Complex,
}

#[derive(Clone, Debug)]
pub(crate) struct Lowering {
    pub kinds: Vec<BlockKind>,
    pub negate: bool,
}

fn block_is_real(p: &SdpProblem, k: usize) -> bool {
    let mut all = std::iter::once(&p.objective).chain(p.constraints.iter().map(|c| &c.functional));
    all.all(|f| f.blocks.iter().filter(|(b, _)| *b == k).all(|(_, a)| a.is_real()))
}

fn lower_functional(f: &LinearFunctional, kinds: &[BlockKind], dims: &[usize], sign: f64) -> RealRow {
    let mut row = RealRow::default();
    for (k, a) in &f.blocks {
        let n = dims[*k];
        let mut out = Vec::new();
        for &(p, q, v) in a.entries() {
            match kinds[*k] {
                BlockKind::Real => out.push((p, q, sign * v.re)),
                BlockKind::Complex => {
                    let (re, im) = (0.5 * sign * v.re, 0.5 * sign * v.im);
                    if re != 0.0 {
                        out.push((p, q, re));
                        out.push((n + p, n + q, re));
                    }
                    if im != 0.0 {
                        out.push((n + p, q, im));
                        out.push((p, n + q, -im));
                    }
                }
            }
        }
        if !out.is_empty() {
            row.blocks.push((*k, out));
        }
    }
    row.free = f.free.iter().map(|&(i, v)| (i, sign * v)).collect();
    row
}

pub(crate) fn lower(p: &SdpProblem) -> (RealProblem, Lowering) {
    let kinds: Vec<BlockKind> = (0..p.blocks.len())
        .map(|k| if block_is_real(p, k) { BlockKind::Real } else { BlockKind::Complex })
        .collect();
    let mut dims: Vec<usize> = p
        .blocks
        .iter()
        .zip(&kinds)
        .map(|(&n, k)| if *k == BlockKind::Real { n } else { 2 * n })
        .collect();
    let negate = p.sense == Sense::Maximize;
    let objective = lower_functional(&p.objective, &kinds, &p.blocks, if negate { -1.0 } else { 1.0 });
    let mut rows = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let mut row = lower_functional(&c.functional, &kinds, &p.blocks, 1.0);
        if c.relation == Relation::GreaterEqual {
            // Surplus variable in its own 1x1 block.
            row.blocks.push((dims.len(), vec![(0, 0, -1.0)]));
            dims.push(1);
        }
        rows.push(row);
    }
    let rhs = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs));
    (
        RealProblem { dims, free_vars: p.free_vars, objective, rows, rhs },
        Lowering { kinds, negate },
    )
}

fn lift_primal(x: &DMatrix<f64>, kind: BlockKind) -> HermitianOperator {
    let m = match kind {
        BlockKind::Real => ComplexMatrix::from_fn(x.nrows(), x.ncols(), |r, c| Complex64::new(x[(r, c)], 0.0)),
        BlockKind::Complex => {
            let n = x.nrows() / 2;
            ComplexMatrix::from_fn(n, n, |r, c| {
                Complex64::new(
                    0.5 * (x[(r, c)] + x[(n + r, n + c)]),
                    0.5 * (x[(n + r, c)] - x[(r, n + c)]),
                )
            })
        }
    };
    HermitianOperator::symmetrized(m)
}

fn lift_dual(z: &DMatrix<f64>, kind: BlockKind) -> HermitianOperator {
    let h = lift_primal(z, kind);
    match kind {
        BlockKind::Real => h,
        BlockKind::Complex => h.scale(2.0),
    }
}

pub(crate) fn lift(p: &SdpProblem, map: &Lowering, real: &RealProblem, raw: RawSolution) -> SdpSolution {
    let nb = p.blocks.len();
    let primal_blocks = (0..nb).map(|k| lift_primal(&raw.x[k], map.kinds[k])).collect();
    let dual_blocks = (0..nb).map(|k| lift_dual(&raw.z[k], map.kinds[k])).collect();
    let sign = if map.negate { -1.0 } else { 1.0 };
    let (primal_value, dual_value) = (sign * raw.primal_value, sign * raw.dual_value);
    let dual_multipliers = raw.y.iter().map(|v| sign * v).collect();
    debug_assert_eq!(real.rows.len(), p.constraints.len());
    let status = raw.status;
    let gap = if status == SolveStatus::Optimal {
        (primal_value - dual_value).abs() / (1.0 + primal_value.abs())
    } else {
        f64::NAN
    };
    SdpSolution {
        status,
        primal_value,
        dual_value,
        primal_blocks,
        free_values: raw.x_free.iter().copied().collect(),
        dual_multipliers,
        dual_blocks,
        gap,
        primal_residual: raw.primal_residual,
        dual_residual: raw.dual_residual,
        iterations: raw.iterations,
    }
}
