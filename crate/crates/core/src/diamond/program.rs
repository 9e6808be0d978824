//! Shared construction of the diamond-norm SDP
//!
//! ```text
//! min (u0 + u1)/2   s.t.  [[Y0, -C], [-C†, Y1]] ⪰ 0,
//!                         u0·1 ⪰ Tr_out Y0,  u1·1 ⪰ Tr_out Y1.
//! ```
//!
//! Block layout: `S0`, `S1` (slacks of the two operator inequalities), `M`
//! (the 2x2 block matrix), then any caller blocks. Free scalars `u0`, `u1`.
//! The off-diagonal block of `M` is tied to `-C` entry by entry; callers can
//! add further terms to those rows, which is how the divisibility programs
//! replace `C` by `target - (something depending on their own blocks)`.

use num_complex::Complex64;

use crate::error::Result;
use crate::matlin::{ComplexMatrix, HermitianOperator};
use crate::sdp::{hermitian_basis, BasisElement, LinearForm, Relation, SdpProblem, SdpSolution, Sense};

pub(crate) const S0: usize = 0;
pub(crate) const S1: usize = 1;
pub(crate) const M: usize = 2;
pub(crate) const U0: usize = 0;
pub(crate) const U1: usize = 1;

/// Row phases of the off-diagonal constraints: `Re X` and `Im X = Re(-i X)`.
pub(crate) const PHASES: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];

pub(crate) struct DiamondProgram {
    pub problem: SdpProblem,
    pub d_in: usize,
    pub d_out: usize,
    /// Restrict to real symmetric variables; valid when all data are real.
    pub real: bool,
    /// Basis elements of the input space used in the slack constraints.
    pub basis: Vec<BasisElement>,
    /// Row index of the off-diagonal constraint `(a, b, phase)`.
    pub link_rows: Vec<[Option<usize>; 2]>,
}

impl DiamondProgram {
    pub fn new(d_in: usize, d_out: usize, real: bool, extra_blocks: &[usize]) -> Result<Self> {
        let n = d_in * d_out;
        let mut blocks = vec![d_in, d_in, 2 * n];
        blocks.extend_from_slice(extra_blocks);
        let mut problem = SdpProblem::new(blocks, 2, Sense::Minimize);
        let mut obj = LinearForm::new();
        obj.add_free(U0, 0.5).add_free(U1, 0.5);
        problem.set_objective(&obj)?;

        let basis: Vec<BasisElement> = hermitian_basis(d_in)
            .into_iter()
            .filter(|b| !(real && matches!(b, BasisElement::Imaginary(..))))
            .collect();
        // S_k + Tr_out M_kk - u_k·1 = 0, projected on each basis element.
        for (slack, offset, u) in [(S0, 0, U0), (S1, n, U1)] {
            for b in &basis {
                let (p, q, c) = b.functional();
                let mut form = LinearForm::new();
                form.add(slack, p, q, c);
                for beta in 0..d_out {
                    form.add(M, offset + p * d_out + beta, offset + q * d_out + beta, c);
                }
                form.add_free(u, -b.trace());
                problem.add_constraint(&form, Relation::Equal, 0.0)?;
            }
        }
        Ok(DiamondProgram { problem, d_in, d_out, real, basis, link_rows: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.d_in * self.d_out
    }

    /// Adds `M01 + E = -target` entrywise, where `extra(a, b, phase, form)`
    /// appends the terms of `Re(phase · E[a, b])`.
    pub fn add_link<F>(&mut self, target: &HermitianOperator, mut extra: F) -> Result<()>
    where
        F: FnMut(usize, usize, Complex64, &mut LinearForm),
    {
        let n = self.n();
        let t = target.matrix();
        self.link_rows = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut rows = [None, None];
                for (slot, &phase) in PHASES.iter().enumerate() {
                    if self.real && slot == 1 {
                        continue;
                    }
                    let mut form = LinearForm::new();
                    form.add(M, a, n + b, phase);
                    extra(a, b, phase, &mut form);
                    let rhs = -(phase * t[(a, b)]).re;
                    rows[slot] = Some(self.problem.add_constraint(&form, Relation::Equal, rhs)?);
                }
                self.link_rows.push(rows);
            }
        }
        Ok(())
    }

    /// `(Y0, Y1)` from the primal `M` block.
    pub fn y_blocks(&self, sol: &SdpSolution) -> (HermitianOperator, HermitianOperator) {
        let n = self.n();
        let m = sol.primal_blocks[M].matrix();
        let y0 = HermitianOperator::symmetrized(ComplexMatrix::from_fn(n, n, |r, c| m[(r, c)]));
        let y1 = HermitianOperator::symmetrized(ComplexMatrix::from_fn(n, n, |r, c| m[(n + r, n + c)]));
        (y0, y1)
    }

    /// Dual operator of the slack constraint of `u_k`, scaled to unit trace:
    /// `Ψ_k = -2 Σ_b y_b B_b`.
    pub fn psi(&self, sol: &SdpSolution, k: usize) -> HermitianOperator {
        let offset = k * self.basis.len();
        let mut acc = ComplexMatrix::zeros(self.d_in, self.d_in);
        for (i, b) in self.basis.iter().enumerate() {
            let y = sol.dual_multipliers[offset + i];
            acc = &acc + &b.matrix(self.d_in).into_matrix().scale_real(-2.0 * y);
        }
        HermitianOperator::symmetrized(acc)
    }

    /// Upper-right block of the dual slack of `M`, read off the link
    /// multipliers: `G[a, b] = -(y_re + i y_im) / 2`.
    pub fn link_dual(&self, sol: &SdpSolution) -> ComplexMatrix {
        let n = self.n();
        ComplexMatrix::from_fn(n, n, |a, b| {
            let rows = self.link_rows[a * n + b];
            let re = rows[0].map_or(0.0, |r| sol.dual_multipliers[r]);
            let im = rows[1].map_or(0.0, |r| sol.dual_multipliers[r]);
            Complex64::new(-0.5 * re, -0.5 * im)
        })
    }
}
