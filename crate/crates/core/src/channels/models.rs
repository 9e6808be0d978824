use super::{choi_from_kraus, Channel, KrausSet};
use crate::error::{Error, Result};
use crate::matlin::{pauli, ComplexMatrix, HermitianOperator, ONE};

/// `ρ ↦ p_i ρ + p_x XρX + p_y YρY + p_z ZρZ`.
pub fn pauli_channel(p_i: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<Channel> {
    let probs = [p_i, p_x, p_y, p_z];
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(format!("negative or non-finite weight in {probs:?}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
    }
    let paulis = [ComplexMatrix::identity(2), pauli::x(), pauli::y(), pauli::z()];
    let ops = probs
        .iter()
        .zip(paulis)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, s)| s.scale_real(p.sqrt()))
        .collect();
    choi_from_kraus(&KrausSet::new(2, 2, ops)?)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("{name} = {p} is outside [0, 1]")));
    }
    Ok(())
}

/// The two-step collisional model: `Λ_{1|0}` flips with `X` or `Z` with
/// probability `p/2` each; `Λ_{2|0}` applies either flip with `p(1-p)`.
pub fn collisional_pair(p: f64) -> Result<(Channel, Channel)> {
    check_probability("p", p)?;
    let first = pauli_channel(1.0 - p, p / 2.0, 0.0, p / 2.0)?;
    let q = p * (1.0 - p);
    let second = pauli_channel((1.0 - p) * (1.0 - p) + p * p, q, 0.0, q)?;
    Ok((first, second))
}

/// Dephasing strength reached at time `t`:
/// `p(t) = e⁴ (1 - e^{-2(1 - cos t)}) / (e⁴ - 1)`, clamped to `[0, 1]`.
pub fn dephasing_parameter(t: f64) -> f64 {
    let e4 = 4f64.exp();
    let p = e4 * (-(-2.0 * (1.0 - t.cos())).exp_m1()) / (e4 - 1.0);
    p.clamp(0.0, 1.0)
}

/// Qubit map `(1 - p/2) ρ + (p/2) ZρZ` with `p = p(t)`.
pub fn dephasing_t(t: f64) -> Result<Channel> {
    if !t.is_finite() {
        return Err(Error::OutOfRange(format!("t = {t}")));
    }
    dephasing_hd(2, dephasing_parameter(t))
}

/// `ρ ↦ (1 - p) ρ + p Σ_k Π_k ρ Π_k` in dimension `d`.
pub fn dephasing_hd(d: usize, p: f64) -> Result<Channel> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("dimension {d} < 2")));
    }
    check_probability("p", p)?;
    let n = d * d;
    let m = ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, b) = (r / d, r % d);
        let (j, g) = (c / d, c % d);
        if i != b || j != g {
            ONE * 0.0
        } else if i == j {
            ONE
        } else {
            ONE * (1.0 - p)
        }
    });
    Channel::from_choi(d, d, HermitianOperator::symmetrized(m))
}
