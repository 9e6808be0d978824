//! Block semidefinite programs over complex Hermitian matrices.
//!
//! A problem has a list of Hermitian PSD blocks `X_k`, a number of free real
//! scalars `x_f`, and real-valued linear constraints
//! `Σ_k Tr[A_k X_k] + f·x_f (= | ≥) b`. The solver core is real: each complex
//! block is mapped through [`embed_complex`] (blocks whose data are all real
//! are solved directly as real symmetric blocks) and the embedded problem is
//! handed to a homogeneous self-dual interior-point method.
//!
//! Coefficients are usually assembled with [`LinearForm`], which describes
//! a functional `Re Σ c_pq X[p, q]` entry by entry and turns it into the
//! equivalent Hermitian coefficient operator.

mod dump;
mod embed;
mod ipm;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matlin::{ComplexMatrix, HermitianOperator, ZERO};

pub use dump::{read_problem, write_problem};
pub use embed::embed_complex;

/// Sparse Hermitian coefficient operator. Both triangles are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseHermitian {
    /// Accumulates `(row, col, value)` triples; duplicates are summed.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::MalformedProblem(format!(
                    "entry ({r}, {c}) outside a {dim}x{dim} block"
                )));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite("coefficient operator"));
            }
            *acc.entry((r, c)).or_insert(ZERO) += v;
        }
        let scale = acc.values().map(|v| v.norm()).fold(1.0, f64::max);
        for (&(r, c), &v) in &acc {
            let mirror = acc.get(&(c, r)).copied().unwrap_or(ZERO);
            if (v - mirror.conj()).norm() > 1e-12 * scale {
                return Err(Error::MalformedProblem(format!(
                    "coefficient operator is not Hermitian at ({r}, {c})"
                )));
            }
        }
        let entries = acc.into_iter().filter(|(_, v)| *v != ZERO).map(|((r, c), v)| (r, c, v)).collect();
        Ok(SparseHermitian { dim, entries })
    }

    pub fn from_dense(h: &HermitianOperator) -> Self {
        let n = h.dim();
        let m = h.matrix();
        let mut entries = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if m[(r, c)] != ZERO {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        SparseHermitian { dim: n, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|(_, _, v)| v.im == 0.0)
    }

    pub fn to_dense(&self) -> HermitianOperator {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        HermitianOperator::symmetrized(m)
    }

    /// `Tr[self * x]`.
    pub fn inner(&self, x: &HermitianOperator) -> f64 {
        let m = x.matrix();
        self.entries.iter().map(|&(r, c, v)| (v * m[(c, r)]).re).sum()
    }
}

/// A real linear functional of the block and free variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearFunctional {
    pub blocks: Vec<(usize, SparseHermitian)>,
    pub free: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn evaluate(&self, blocks: &[HermitianOperator], free: &[f64]) -> f64 {
        let b: f64 = self.blocks.iter().map(|(k, a)| a.inner(&blocks[*k])).sum();
        let f: f64 = self.free.iter().map(|&(i, v)| v * free[i]).sum();
        b + f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    GreaterEqual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub functional: LinearFunctional,
    pub rhs: f64,
    pub relation: Relation,
}

/// Builder for functionals of the form `Re Σ c · X_k[p, q] + Σ f_i x_i`.
///
/// Any real-linear function of Hermitian variables can be written this way,
/// e.g. `Im X[p, q]` is `Re(-i · X[p, q])`.
#[derive(Clone, Debug, Default)]
pub struct LinearForm {
    terms: BTreeMap<(usize, usize, usize), Complex64>,
    free: BTreeMap<usize, f64>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `Re(c · X_block[p, q])`.
    pub fn add(&mut self, block: usize, p: usize, q: usize, c: Complex64) -> &mut Self {
        *self.terms.entry((block, p, q)).or_insert(ZERO) += c;
        self
    }

    pub fn add_free(&mut self, index: usize, value: f64) -> &mut Self {
        *self.free.entry(index).or_insert(0.0) += value;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|v| *v == ZERO) && self.free.values().all(|v| *v == 0.0)
    }

    /// Converts to Hermitian coefficients: `Re(c X_pq) = Tr[Q X]` with
    /// `Q[q, p] += c / 2` and `Q[p, q] += conj(c) / 2`.
    pub fn build(&self, block_dims: &[usize]) -> Result<LinearFunctional> {
        let mut per_block: BTreeMap<usize, Vec<(usize, usize, Complex64)>> = BTreeMap::new();
        for (&(k, p, q), &c) in &self.terms {
            if c == ZERO {
                continue;
            }
            let dim = *block_dims
                .get(k)
                .ok_or_else(|| Error::MalformedProblem(format!("unknown block {k}")))?;
            let list = per_block.entry(k).or_default();
            if p >= dim || q >= dim {
                return Err(Error::MalformedProblem(format!(
                    "entry ({p}, {q}) outside block {k} of dimension {dim}"
                )));
            }
            list.push((q, p, c * 0.5));
            list.push((p, q, c.conj() * 0.5));
        }
        let mut blocks = Vec::with_capacity(per_block.len());
        for (k, list) in per_block {
            let coeff = SparseHermitian::from_entries(block_dims[k], list)?;
            if !coeff.is_empty() {
                blocks.push((k, coeff));
            }
        }
        let free = self.free.iter().filter(|(_, v)| **v != 0.0).map(|(&i, &v)| (i, v)).collect();
        Ok(LinearFunctional { blocks, free })
    }
}

/// One element of the orthonormal Hermitian basis
/// `{E_ii, (E_ij + E_ji)/√2, i(E_ij - E_ji)/√2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisElement {
    Diagonal(usize),
    Real(usize, usize),
    Imaginary(usize, usize),
}

impl BasisElement {
    /// `(p, q, c)` such that `Tr[B E] = Re(c · E[p, q])` for Hermitian `E`.
    pub fn functional(self) -> (usize, usize, Complex64) {
        let r2 = std::f64::consts::SQRT_2;
        match self {
            BasisElement::Diagonal(p) => (p, p, Complex64::new(1.0, 0.0)),
            BasisElement::Real(p, q) => (p, q, Complex64::new(r2, 0.0)),
            BasisElement::Imaginary(p, q) => (p, q, Complex64::new(0.0, -r2)),
        }
    }

    pub fn matrix(self, dim: usize) -> HermitianOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = ComplexMatrix::zeros(dim, dim);
        match self {
            BasisElement::Diagonal(p) => m[(p, p)] = Complex64::new(1.0, 0.0),
            BasisElement::Real(p, q) => {
                m[(p, q)] = Complex64::new(s, 0.0);
                m[(q, p)] = Complex64::new(s, 0.0);
            }
            BasisElement::Imaginary(p, q) => {
                m[(p, q)] = Complex64::new(0.0, s);
                m[(q, p)] = Complex64::new(0.0, -s);
            }
        }
        HermitianOperator::symmetrized(m)
    }

    /// `Tr[B]`.
    pub fn trace(self) -> f64 {
        match self {
            BasisElement::Diagonal(_) => 1.0,
            _ => 0.0,
        }
    }
}

/// The `dim²` elements of the Hermitian basis, in a fixed order.
pub fn hermitian_basis(dim: usize) -> Vec<BasisElement> {
    let mut out = Vec::with_capacity(dim * dim);
    for p in 0..dim {
        out.push(BasisElement::Diagonal(p));
        for q in (p + 1)..dim {
            out.push(BasisElement::Real(p, q));
            out.push(BasisElement::Imaginary(p, q));
        }
    }
    out
}

/// Reassembles `Σ_k y_k B_k` from basis coefficients.
pub fn from_basis_coefficients(dim: usize, coeffs: &[f64]) -> HermitianOperator {
    let basis = hermitian_basis(dim);
    assert_eq!(basis.len(), coeffs.len());
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (b, &y) in basis.iter().zip(coeffs) {
        acc = &acc + &b.matrix(dim).into_matrix().scale_real(y);
    }
    HermitianOperator::symmetrized(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    /// Dimensions of the Hermitian PSD blocks.
    pub blocks: Vec<usize>,
    /// Number of unconstrained real scalars.
    pub free_vars: usize,
    pub objective: LinearFunctional,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, free_vars: usize, sense: Sense) -> Self {
        SdpProblem {
            blocks,
            free_vars,
            objective: LinearFunctional::default(),
            constraints: Vec::new(),
            sense,
        }
    }

    pub fn set_objective(&mut self, form: &LinearForm) -> Result<()> {
        self.objective = form.build(&self.blocks)?;
        Ok(())
    }

    /// Appends a constraint and returns its index.
    pub fn add_constraint(&mut self, form: &LinearForm, relation: Relation, rhs: f64) -> Result<usize> {
        let functional = form.build(&self.blocks)?;
        self.constraints.push(Constraint { functional, rhs, relation });
        Ok(self.constraints.len() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.contains(&0) {
            return Err(Error::MalformedProblem("zero-dimensional block".into()));
        }
        let check = |f: &LinearFunctional, what: &str| -> Result<()> {
            for (k, a) in &f.blocks {
                let dim = self
                    .blocks
                    .get(*k)
                    .ok_or_else(|| Error::MalformedProblem(format!("{what} refers to missing block {k}")))?;
                if a.dim() != *dim {
                    return Err(Error::MalformedProblem(format!(
                        "{what}: coefficient of dimension {} on block {k} of dimension {dim}",
                        a.dim()
                    )));
                }
            }
            for &(i, v) in &f.free {
                if i >= self.free_vars {
                    return Err(Error::MalformedProblem(format!("{what} refers to missing free variable {i}")));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite("free coefficient"));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.functional, &format!("constraint {i}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite("constraint right-hand side"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Relative duality gap `|p - d| / (1 + |p|)` required for optimality.
    pub gap_tolerance: f64,
    /// Absolute primal and dual residual required for optimality.
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    /// Scheduling of the Schur complement assembly.
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap_tolerance: 1e-8,
            feasibility_tolerance: 1e-9,
            max_iterations: 200,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Optimal `X_k` per block (a normalized ray when dual infeasible).
    pub primal_blocks: Vec<HermitianOperator>,
    pub free_values: Vec<f64>,
    /// One multiplier per constraint (a normalized Farkas ray when primal infeasible).
    pub dual_multipliers: Vec<f64>,
    /// Dual slack per block.
    pub dual_blocks: Vec<HermitianOperator>,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Fails unless the status is [`SolveStatus::Optimal`].
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver(self.status))
        }
    }
}

/// Solves `p` with the homogeneous self-dual interior-point method.
pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    p.validate()?;
    let (real, map) = embed::lower(p);
    let raw = ipm::solve(&real, opts)?;
    Ok(embed::lift(p, &map, &real, raw))
}

#[cfg(test)]
mod tests;
