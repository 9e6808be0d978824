//! Diamond norm of Hermiticity-preserving maps and its discrimination
//! interpretation.
//!
//! The SDP takes the stored Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` directly,
//! with no extra transposition.

pub(crate) mod program;

use num_complex::Complex64;
use rand::Rng;

use crate::channels::{haar_unitary, seeded_rng, Channel};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::matlin::{kron, trace_norm, ComplexMatrix, HermitianOperator};
use crate::sdp::{self, SolveOptions};
use program::{DiamondProgram, U0, U1};

#[derive(Clone, Debug)]
pub struct DiamondNormResult {
    pub value: f64,
    pub u0: f64,
    pub u1: f64,
    pub y0: HermitianOperator,
    pub y1: HermitianOperator,
    /// Relative primal-dual gap reported by the solver.
    pub sdp_gap: f64,
    /// `‖C‖₁ / d_in`, the value of the maximally entangled probe.
    pub entangled_lower_bound: f64,
}

/// Maps whose Choi matrix is below this in every entry are treated as zero.
const ZERO_MAP: f64 = 1e-300;

pub fn diamond_norm(map: &Channel) -> Result<DiamondNormResult> {
    diamond_norm_with(map, &SolveOptions::default())
}

pub fn diamond_norm_with(map: &Channel, opts: &SolveOptions) -> Result<DiamondNormResult> {
    let choi = map.choi();
    let entangled_lower_bound = trace_norm(choi.matrix())? / map.dim_in() as f64;
    let n = choi.dim();
    if choi.matrix().max_abs() <= ZERO_MAP {
        return Ok(DiamondNormResult {
            value: 0.0,
            u0: 0.0,
            u1: 0.0,
            y0: HermitianOperator::zeros(n),
            y1: HermitianOperator::zeros(n),
            sdp_gap: 0.0,
            entangled_lower_bound,
        });
    }
    let mut prog = DiamondProgram::new(map.dim_in(), map.dim_out(), map.is_real(), &[])?;
    prog.add_link(choi, |_, _, _, _| {})?;
    let sol = sdp::solve(&prog.problem, opts)?.require_optimal()?;
    let (y0, y1) = prog.y_blocks(&sol);
    let (u0, u1) = (sol.free_values[U0], sol.free_values[U1]);
    Ok(DiamondNormResult {
        value: sol.primal_value.max(0.0),
        u0,
        u1,
        y0,
        y1,
        sdp_gap: sol.gap,
        entangled_lower_bound,
    })
}

/// Optimal probability of identifying which of two channels acted, with
/// prior `prior` on `c0` and an entangled probe.
pub fn guess_probability(c0: &Channel, c1: &Channel, prior: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prior) {
        return Err(Error::OutOfRange(format!("prior {prior} outside [0, 1]")));
    }
    let diff = c0.scale(prior).difference(&c1.scale(1.0 - prior))?;
    let norm = diamond_norm(&diff)?.value;
    Ok((0.5 + 0.5 * norm).clamp(prior.max(1.0 - prior), 1.0))
}

/// `‖(id ⊗ Φ)(|u⟩⟨u|)‖₁` for a probe `|u⟩` on ancilla ⊗ input, both of
/// dimension `d_in`, with ancilla as the leading factor.
pub fn probe_value(map: &Channel, probe: &[Complex64]) -> Result<f64> {
    let d = map.dim_in();
    if probe.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "probe of length {} for input dimension {d}",
            probe.len()
        )));
    }
    // (U ⊗ 1) C (U ⊗ 1)† with U[a, i] the probe amplitudes.
    let u = ComplexMatrix::from_fn(d, d, |a, i| probe[a * d + i]);
    let k = kron(&u, &ComplexMatrix::identity(map.dim_out()));
    let out = &(&k * map.choi().matrix()) * &k.adjoint();
    trace_norm(&out)
}

/// Best value of [`probe_value`] over `n_samples` Haar-random pure probes.
/// Probes are drawn from per-sample seeds taken from `rng`, so the result
/// does not depend on `exec`.
pub fn probe_lower_bound<R: Rng + ?Sized>(
    map: &Channel,
    n_samples: usize,
    rng: &mut R,
    exec: Execution,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::OutOfRange("n_samples must be at least 1".into()));
    }
    let d = map.dim_in();
    let seeds: Vec<u64> = (0..n_samples).map(|_| rng.random()).collect();
    let values = exec::map_slice(exec, &seeds, |&seed| {
        let u = haar_unitary(d * d, &mut seeded_rng(seed));
        probe_value(map, &u.column(0))
    });
    values.into_iter().try_fold(0.0f64, |best, v| Ok(best.max(v?)))
}
