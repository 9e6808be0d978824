//! How far a pair of maps `(target, first)` is from admitting an intermediate
//! step, i.e. a map `Λ` with `target = Λ ∘ first`.
//!
//! Both quantifiers solve one SDP that fuses the search for `Λ` with the
//! diamond-norm program for `target - Λ ∘ first`. In the CP case `Λ` ranges
//! over CPTP maps; in the qubit P case over trace-preserving decomposable
//! maps `σ_A + σ_B` with `σ_A ⪰ 0` and `σ_B^{T_1} ⪰ 0`.
//!
//! Dimensions: `first` maps `H0 → H1`, `target` maps `H0 → H2`, and the
//! intermediate maps `H1 → H2`.

mod report;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{compose, Channel, CptpStatus};
use crate::diamond::program::{DiamondProgram, S0, S1};
use crate::diamond::{diamond_norm, diamond_norm_with};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::matlin::{kron, partial_transpose, ComplexMatrix, HermitianOperator, SubsystemShape};
use crate::sdp::{self, hermitian_basis, BasisElement, LinearForm, Relation, SdpProblem, SdpSolution, Sense, SolveOptions, SolveStatus};

pub use report::{report_to_json, write_report};

/// Distance at or below which a pair is declared divisible.
pub const DIVISIBILITY_TOLERANCE: f64 = 1e-6;
/// Witness objective above which non-divisibility is certified.
pub const WITNESS_TOLERANCE: f64 = 1e-5;
/// Diamond distance under which the intermediate counts as the identity or
/// the target in [`classify_absolute`].
pub const ABSOLUTE_TOLERANCE: f64 = 1e-5;
const CPTP_BOUND_CHECK: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "CP")]
    Cp,
    #[serde(rename = "P_qubit")]
    PQubit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsoluteFlag {
    #[default]
    None,
    IdentityOptimal,
    TargetOptimal,
}

/// Dual certificate. For divisible pairs `Tr[W target] + Tr[Λ] ≤ 0`.
#[derive(Clone, Debug)]
pub struct WitnessPair {
    /// Operator on `H0 ⊗ H2`.
    pub w: HermitianOperator,
    /// Operator on `H1`.
    pub lambda: HermitianOperator,
    pub psi0: HermitianOperator,
    pub psi1: HermitianOperator,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct DivisibilityReport {
    pub kind: Kind,
    pub distance: f64,
    pub intermediate: Channel,
    /// `(σ_A, σ_B)` with `intermediate = σ_A + σ_B`, for [`Kind::PQubit`].
    pub p_decomposition: Option<(HermitianOperator, HermitianOperator)>,
    pub witness: Option<WitnessPair>,
    pub absolute_flag: AbsoluteFlag,
    /// `(‖target - first‖⋄, ‖I - first‖⋄)`, filled in by [`classify_absolute`]
    /// when all three spaces have the same dimension.
    pub trivial_bounds: Option<[f64; 2]>,
    pub sdp_gap: f64,
}

impl DivisibilityReport {
    pub fn is_divisible(&self, tol: f64) -> bool {
        self.distance <= tol
    }
}

#[derive(Clone, Debug)]
pub enum Feasibility {
    Divisible(Channel),
    Infeasible,
}

/// `(d0, d1, d2)` for a `(target, first)` pair.
fn pair_dims(target: &Channel, first: &Channel) -> Result<(usize, usize, usize)> {
    if target.dim_in() != first.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "target acts on dimension {} but first on {}",
            target.dim_in(),
            first.dim_in()
        )));
    }
    Ok((first.dim_in(), first.dim_out(), target.dim_out()))
}

/// Coefficients of `Re(phase · (Λ ∘ first)[a, b])` in the entries of the
/// intermediate Choi matrix, as `(row, col, coefficient)` with the row and
/// column in `H1 ⊗ H2`.
fn composition_terms(
    first: &ComplexMatrix,
    (_d0, d1, d2): (usize, usize, usize),
    a: usize,
    b: usize,
    phase: Complex64,
) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
    let (i, beta) = (a / d2, a % d2);
    let (j, gamma) = (b / d2, b % d2);
    (0..d1).flat_map(move |k| {
        (0..d1).filter_map(move |l| {
            let f = first[(i * d1 + k, j * d1 + l)];
            (f != Complex64::new(0.0, 0.0)).then(|| (k * d2 + beta, l * d2 + gamma, phase * f))
        })
    })
}

/// Fused program: diamond norm of `target - Λ ∘ first` over admissible `Λ`.
struct FusedProgram {
    diamond: DiamondProgram,
    kind: Kind,
    dims: (usize, usize, usize),
    /// Rows of `Tr_2 Λ = 1`, paired with their basis element of `H1`.
    tp_rows: Vec<(usize, BasisElement)>,
}

/// Block holding `Λ` (CP) or `σ_A` (P).
const R: usize = 3;
/// Block holding `V = σ_B^{T_1}` (P only).
const V: usize = 4;

impl FusedProgram {
    fn new(target: &Channel, first: &Channel, kind: Kind) -> Result<Self> {
        let dims = pair_dims(target, first)?;
        let (d0, d1, d2) = dims;
        if kind == Kind::PQubit && (d0, d1, d2) != (2, 2, 2) {
            return Err(Error::UnsupportedDimension(format!(
                "P-divisibility is only available for qubit maps, got {d0} -> {d1} -> {d2}"
            )));
        }
        let real = target.is_real() && first.is_real();
        let m = d1 * d2;
        let extra: &[usize] = match kind {
            Kind::Cp => &[m],
            Kind::PQubit => &[m, m],
        };
        let mut diamond = DiamondProgram::new(d0, d2, real, extra)?;
        let f = first.choi().matrix();
        diamond.add_link(target.choi(), |a, b, phase, form| {
            for (p, q, c) in composition_terms(f, dims, a, b, phase) {
                form.add(R, p, q, -c);
                if kind == Kind::PQubit {
                    // σ_B[(k,β),(l,γ)] = V[(l,β),(k,γ)]
                    let (k, beta, l, gamma) = (p / d2, p % d2, q / d2, q % d2);
                    form.add(V, l * d2 + beta, k * d2 + gamma, -c);
                }
            }
        })?;
        let tp_rows = add_trace_preservation(&mut diamond.problem, kind, d1, d2, real)?;
        Ok(FusedProgram { diamond, kind, dims, tp_rows })
    }

    fn solve(&self, opts: &SolveOptions) -> Result<SdpSolution> {
        sdp::solve(&self.diamond.problem, opts)?.require_optimal()
    }

    fn intermediate(&self, sol: &SdpSolution) -> Result<(Channel, Option<(HermitianOperator, HermitianOperator)>)> {
        let (_, d1, d2) = self.dims;
        let a = sol.primal_blocks[R].clone();
        match self.kind {
            Kind::Cp => Ok((Channel::from_choi(d1, d2, a)?, None)),
            Kind::PQubit => {
                let shape = SubsystemShape::new([d1, d2])?;
                let b = partial_transpose(&sol.primal_blocks[V], &shape, 0)?;
                let sum = HermitianOperator::symmetrized(a.matrix() + b.matrix());
                Ok((Channel::from_choi(d1, d2, sum)?, Some((a, b))))
            }
        }
    }

    fn witness(&self, sol: &SdpSolution, target: &Channel) -> Result<WitnessPair> {
        let (_, d1, _) = self.dims;
        let g = self.diamond.link_dual(sol);
        // The pair (W, Ψ0, Ψ1) and (W†, Ψ1, Ψ0) are both optimal; their
        // average gives a Hermitian W and a common Ψ.
        let w = HermitianOperator::symmetrized(&g + &g.adjoint());
        let p0 = self.diamond.psi(sol, S0);
        let p1 = self.diamond.psi(sol, S1);
        let psi = HermitianOperator::symmetrized((p0.matrix() + p1.matrix()).scale_real(0.5));
        let mut lambda = ComplexMatrix::zeros(d1, d1);
        for &(row, b) in &self.tp_rows {
            lambda = &lambda + &b.matrix(d1).into_matrix().scale_real(sol.dual_multipliers[row]);
        }
        let lambda = HermitianOperator::symmetrized(lambda);
        let objective = w.inner(target.choi()) + lambda.trace();
        Ok(WitnessPair { w, lambda, psi0: psi.clone(), psi1: psi, objective })
    }
}

/// `Tr_2 Λ = 1` on `H1`, one row per basis element.
fn add_trace_preservation(
    problem: &mut SdpProblem,
    kind: Kind,
    d1: usize,
    d2: usize,
    real: bool,
) -> Result<Vec<(usize, BasisElement)>> {
    let mut rows = Vec::new();
    for b in hermitian_basis(d1) {
        if real && matches!(b, BasisElement::Imaginary(..)) {
            continue;
        }
        let (p, q, c) = b.functional();
        let mut form = LinearForm::new();
        for beta in 0..d2 {
            form.add(R, p * d2 + beta, q * d2 + beta, c);
            if kind == Kind::PQubit {
                form.add(V, q * d2 + beta, p * d2 + beta, c);
            }
        }
        rows.push((problem.add_constraint(&form, Relation::Equal, b.trace())?, b));
    }
    Ok(rows)
}

fn distance_report(target: &Channel, first: &Channel, kind: Kind, opts: &SolveOptions) -> Result<DivisibilityReport> {
    Ok(timed_report(target, first, kind, opts)?.0)
}

fn timed_report(
    target: &Channel,
    first: &Channel,
    kind: Kind,
    opts: &SolveOptions,
) -> Result<(DivisibilityReport, Duration)> {
    let prog = FusedProgram::new(target, first, kind)?;
    let start = Instant::now();
    let sol = prog.solve(opts);
    let elapsed = start.elapsed();
    let sol = sol?;
    let (intermediate, p_decomposition) = prog.intermediate(&sol)?;
    let witness = match kind {
        Kind::Cp => Some(prog.witness(&sol, target)?),
        Kind::PQubit => None,
    };
    let report = DivisibilityReport {
        kind,
        distance: sol.primal_value.max(0.0),
        intermediate,
        p_decomposition,
        witness,
        absolute_flag: AbsoluteFlag::None,
        trivial_bounds: None,
        sdp_gap: sol.gap,
    };
    Ok((report, elapsed))
}

/// Like [`cp_distance`], also returning the wall-clock time of the solve
/// alone (problem construction excluded).
pub fn cp_distance_timed(target: &Channel, first: &Channel) -> Result<(DivisibilityReport, Duration)> {
    timed_report(target, first, Kind::Cp, &SolveOptions::default())
}

/// Minimum of `‖target - Λ ∘ first‖⋄` over CPTP `Λ`, with the optimal `Λ`
/// and the dual witness.
pub fn cp_distance(target: &Channel, first: &Channel) -> Result<DivisibilityReport> {
    cp_distance_with(target, first, &SolveOptions::default())
}

pub fn cp_distance_with(target: &Channel, first: &Channel, opts: &SolveOptions) -> Result<DivisibilityReport> {
    distance_report(target, first, Kind::Cp, opts)
}

/// Minimum of `‖target - Λ ∘ first‖⋄` over positive trace-preserving qubit
/// maps `Λ`, written as decomposable maps.
pub fn p_distance_qubit(target: &Channel, first: &Channel) -> Result<DivisibilityReport> {
    p_distance_qubit_with(target, first, &SolveOptions::default())
}

pub fn p_distance_qubit_with(target: &Channel, first: &Channel, opts: &SolveOptions) -> Result<DivisibilityReport> {
    distance_report(target, first, Kind::PQubit, opts)
}

/// Dual certificate of the CP program.
pub fn extract_witness(target: &Channel, first: &Channel) -> Result<WitnessPair> {
    let prog = FusedProgram::new(target, first, Kind::Cp)?;
    let sol = prog.solve(&SolveOptions::default())?;
    prog.witness(&sol, target)
}

/// Strict feasibility: is there a CPTP `Λ` with `Λ ∘ first = target` exactly
/// (up to solver tolerance)? Falls back to `cp_distance ≤ DIVISIBILITY_TOLERANCE`
/// when the strict program ends without a verdict.
pub fn cp_feasible(target: &Channel, first: &Channel) -> Result<Feasibility> {
    let (_, d1, d2) = pair_dims(target, first)?;
    let real = target.is_real() && first.is_real();
    let n = target.choi().dim();
    let mut problem = SdpProblem::new(vec![d1 * d2], 0, Sense::Minimize);
    let f = first.choi().matrix();
    let t = target.choi().matrix();
    // Λ ∘ first = target entrywise, then Tr_2 Λ = 1; Λ is the only block.
    for a in 0..n {
        for b in 0..n {
            for (slot, phase) in [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)].into_iter().enumerate() {
                if real && slot == 1 {
                    continue;
                }
                let mut form = LinearForm::new();
                for (p, q, c) in composition_terms(f, (first.dim_in(), d1, d2), a, b, phase) {
                    form.add(0, p, q, c);
                }
                problem.add_constraint(&form, Relation::Equal, (phase * t[(a, b)]).re)?;
            }
        }
    }
    for b in hermitian_basis(d1) {
        if real && matches!(b, BasisElement::Imaginary(..)) {
            continue;
        }
        let (p, q, c) = b.functional();
        let mut form = LinearForm::new();
        for beta in 0..d2 {
            form.add(0, p * d2 + beta, q * d2 + beta, c);
        }
        problem.add_constraint(&form, Relation::Equal, b.trace())?;
    }
    let sol = sdp::solve(&problem, &SolveOptions::default())?;
    match sol.status {
        SolveStatus::Optimal => Ok(Feasibility::Divisible(Channel::from_choi(d1, d2, sol.primal_blocks[0].clone())?)),
        SolveStatus::PrimalInfeasible => Ok(Feasibility::Infeasible),
        SolveStatus::DualInfeasible | SolveStatus::NumericalFailure => {
            let r = cp_distance(target, first)?;
            Ok(if r.distance <= DIVISIBILITY_TOLERANCE { Feasibility::Divisible(r.intermediate) } else { Feasibility::Infeasible })
        }
    }
}

/// Fills in the trivial bounds and flags optimal intermediates that are the
/// identity or the target itself for a non-trivial pair.
pub fn classify_absolute(report: DivisibilityReport, target: &Channel, first: &Channel) -> Result<DivisibilityReport> {
    let (d0, d1, d2) = pair_dims(target, first)?;
    let mut report = report;
    if d0 != d1 || d1 != d2 {
        report.absolute_flag = AbsoluteFlag::None;
        report.trivial_bounds = None;
        return Ok(report);
    }
    let id = Channel::identity(d0);
    let norm = |a: &Channel, b: &Channel| -> Result<f64> { Ok(diamond_norm(&a.difference(b)?)?.value) };
    let to_first = norm(target, first)?;
    let first_to_id = norm(&id, first)?;
    // Λ = target is only feasible when the target is itself a channel.
    let target_is_channel = target.is_cptp(CPTP_BOUND_CHECK)?.status == CptpStatus::Cptp;
    let bound = if target_is_channel { to_first.min(first_to_id) } else { to_first };
    if report.distance > bound + DIVISIBILITY_TOLERANCE {
        return Err(Error::NumericalFailure(format!(
            "distance {} exceeds the trivial bound {bound}",
            report.distance
        )));
    }
    report.trivial_bounds = Some([to_first, first_to_id]);
    let nontrivial = to_first > ABSOLUTE_TOLERANCE && first_to_id > ABSOLUTE_TOLERANCE;
    report.absolute_flag = if !nontrivial {
        AbsoluteFlag::None
    } else if norm(&report.intermediate, &id)? <= ABSOLUTE_TOLERANCE {
        AbsoluteFlag::IdentityOptimal
    } else if norm(&report.intermediate, target)? <= ABSOLUTE_TOLERANCE {
        AbsoluteFlag::TargetOptimal
    } else {
        AbsoluteFlag::None
    };
    Ok(report)
}

/// Distance report for `kind` followed by [`classify_absolute`].
pub fn analyze(target: &Channel, first: &Channel, kind: Kind) -> Result<DivisibilityReport> {
    let report = distance_report(target, first, kind, &SolveOptions::default())?;
    classify_absolute(report, target, first)
}

/// Reports for each consecutive pair `(family[i+1], family[i])` of maps that
/// all start at the same initial time.
pub fn multi_step(family: &[Channel], kind: Kind, exec: Execution) -> Result<Vec<DivisibilityReport>> {
    if family.len() < 2 {
        return Err(Error::OutOfRange("a family needs at least two maps".into()));
    }
    let d0 = family[0].dim_in();
    if let Some(c) = family.iter().find(|c| c.dim_in() != d0) {
        return Err(Error::DimensionMismatch(format!(
            "family members act on dimensions {d0} and {}",
            c.dim_in()
        )));
    }
    exec::map_range(exec, family.len() - 1, |i| {
        distance_report(&family[i + 1], &family[i], kind, &SolveOptions::default())
    })
    .into_iter()
    .collect()
}

/// Largest distance in a multi-step run.
pub fn max_distance(reports: &[DivisibilityReport]) -> f64 {
    reports.iter().map(|r| r.distance).fold(0.0, f64::max)
}

/// `‖target - Λ ∘ first‖⋄` for a given intermediate.
pub fn residual_distance(target: &Channel, first: &Channel, intermediate: &Channel) -> Result<f64> {
    let approx = compose(intermediate, first)?;
    Ok(diamond_norm_with(&target.difference(&approx)?, &SolveOptions::default())?.value)
}

/// `-Tr_0[(first^{T_1} ⊗ 1_2)(W ⊗ 1_1)]` as an operator on `H1 ⊗ H2`, the
/// upper bound on `Λ ⊗ 1` in the witness program.
pub fn witness_bound(first: &Channel, w: &HermitianOperator, d2: usize) -> Result<HermitianOperator> {
    let (d0, d1) = (first.dim_in(), first.dim_out());
    if w.dim() != d0 * d2 {
        return Err(Error::DimensionMismatch(format!("witness of dimension {} for {d0} x {d2}", w.dim())));
    }
    let f = first.choi().matrix();
    let wm = w.matrix();
    // X[(l,γ),(k,β)] = Σ_ij W[(j,γ),(i,β)] ϱ10[(i,k),(j,l)]
    let x = ComplexMatrix::from_fn(d1 * d2, d1 * d2, |r, c| {
        let (l, gamma) = (r / d2, r % d2);
        let (k, beta) = (c / d2, c % d2);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d0 {
            for j in 0..d0 {
                acc += wm[(j * d2 + gamma, i * d2 + beta)] * f[(i * d1 + k, j * d1 + l)];
            }
        }
        -acc
    });
    Ok(HermitianOperator::symmetrized(x))
}

/// `[[Ψ0 ⊗ 1, W], [W†, Ψ1 ⊗ 1]]` for a witness on `H0 ⊗ H2`.
pub fn witness_block(pair: &WitnessPair, d2: usize) -> HermitianOperator {
    let id = ComplexMatrix::identity(d2);
    let a = kron(pair.psi0.matrix(), &id);
    let b = kron(pair.psi1.matrix(), &id);
    let w = pair.w.matrix();
    let n = a.rows();
    HermitianOperator::symmetrized(ComplexMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => a[(r, c)],
        (false, false) => b[(r - n, c - n)],
        (true, false) => w[(r, c - n)],
        (false, true) => w[(c, r - n)].conj(),
    }))
}
