use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{choi_from_kraus, Channel, KrausSet};
use crate::error::{Error, Result};
use crate::matlin::{ComplexMatrix, HermitianOperator, ZERO};

/// Seedable generator used for every random construction.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed `d x d` unitary.
///
/// Gram-Schmidt on a complex Gaussian matrix is its QR decomposition with a
/// positive diagonal in `R`, which is exactly the phase fix that makes `Q`
/// Haar distributed. Each column is orthogonalized twice for stability.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let overlap: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(q) {
                    *x -= overlap * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            // Numerically dependent draw; redraw (probability zero in exact arithmetic).
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// `ρ ↦ (1/n) Σ_i U_i ρ U_i†` with independent Haar unitaries.
pub fn unitary_mixture<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Channel> {
    if d == 0 || n == 0 {
        return Err(Error::OutOfRange(format!("need d >= 1 and n >= 1, got d = {d}, n = {n}")));
    }
    let dim = d * d;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    let w = 1.0 / n as f64;
    for _ in 0..n {
        let u = haar_unitary(d, rng);
        let v: Vec<Complex64> = (0..dim).map(|r| u[(r % d, r / d)]).collect();
        for r in 0..dim {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..dim {
                acc[(r, c)] += v[r] * v[c].conj() * w;
            }
        }
    }
    Channel::from_choi(d, d, HermitianOperator::symmetrized(acc))
}

/// Random CPTP map with `rank` Kraus operators, from a Haar isometry.
pub fn random_channel<R: Rng + ?Sized>(dim_in: usize, dim_out: usize, rank: usize, rng: &mut R) -> Result<Channel> {
    if dim_in == 0 || dim_out == 0 || rank == 0 || dim_out * rank < dim_in {
        return Err(Error::OutOfRange(format!(
            "cannot build an isometry {dim_in} -> {dim_out} x {rank}"
        )));
    }
    let u = haar_unitary(dim_out * rank, rng);
    let ops = (0..rank)
        .map(|a| ComplexMatrix::from_fn(dim_out, dim_in, |b, i| u[(a * dim_out + b, i)]))
        .collect();
    choi_from_kraus(&KrausSet::new(dim_in, dim_out, ops)?)
}
