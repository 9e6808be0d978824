use num_complex::Complex64;

use super::{ComplexMatrix, HermitianOperator, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot
/// with a diagonal unitary, then applies a real Givens rotation.
pub fn eig_hermitian(m: &HermitianOperator) -> Result<Eigen> {
    let n = m.dim();
    let mut a = m.matrix().clone();
    let mut v = ComplexMatrix::identity(n);

    let total: f64 = a.as_slice().iter().map(|z| z.norm_sqr()).sum();
    let floor = f64::EPSILON * f64::EPSILON * total.max(f64::MIN_POSITIVE);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off <= floor {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let g_abs = g.norm();
                if g_abs == 0.0 || g_abs * g_abs <= floor / (n * n) as f64 {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, g, g_abs);
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off > floor * 1e4 {
            return Err(Error::ConvergenceFailure {
                routine: "Jacobi eigensolver",
                iterations: MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, g: Complex64, g_abs: f64) {
    let n = a.rows();
    let phase = g / g_abs;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g_abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let pc = phase.conj();

    // A <- A J with J = [[c, s], [-s e*, c e*]] on columns (p, q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * pc * s;
        a[(k, q)] = akp * s + akq * pc * c;
    }
    // A <- J^dag A on rows (p, q).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * pc * s;
        v[(k, q)] = vkp * s + vkq * pc * c;
    }
}

/// Hermitian dilation `[[0, M], [M^dag, 0]]`, whose spectrum is `±σ_i(M)`.
fn dilation(m: &ComplexMatrix) -> HermitianOperator {
    let (r, c) = (m.rows(), m.cols());
    let n = r + c;
    let out = ComplexMatrix::from_fn(n, n, |i, j| {
        if i < r && j >= r {
            m[(i, j - r)]
        } else if i >= r && j < r {
            m[(j, i - r)].conj()
        } else {
            ZERO
        }
    });
    HermitianOperator::symmetrized(out)
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let eig = eig_hermitian(&dilation(m))?;
    let k = m.rows().min(m.cols());
    let mut sv: Vec<f64> = eig.values.iter().rev().take(k).map(|v| v.max(0.0)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("trace norm of a non-square matrix".into()));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if m.hermitian_defect() <= 1e-14 * scale {
        let eig = eig_hermitian(&HermitianOperator::symmetrized(m.clone()))?;
        return Ok(eig.values.iter().map(|v| v.abs()).sum());
    }
    Ok(singular_values(m)?.iter().sum())
}
