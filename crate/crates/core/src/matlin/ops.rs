use num_complex::Complex64;

use super::{ComplexMatrix, HermitianOperator, SubsystemShape, ZERO};
use crate::error::Result;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Splits a flat index into (outer, middle, inner) around subsystem `which`.
fn split(index: usize, inner: usize, dim: usize) -> (usize, usize, usize) {
    let lo = index % inner;
    let mid = (index / inner) % dim;
    let hi = index / (inner * dim);
    (hi, mid, lo)
}

fn strides(shape: &SubsystemShape, which: usize) -> (usize, usize, usize) {
    let dims = shape.dims();
    let inner: usize = dims[which + 1..].iter().product();
    let outer: usize = dims[..which].iter().product();
    (outer, dims[which], inner)
}

/// Traces out subsystem `which`.
pub fn partial_trace(m: &HermitianOperator, shape: &SubsystemShape, which: usize) -> Result<HermitianOperator> {
    shape.check(m.dim(), which)?;
    let (outer, dim, inner) = strides(shape, which);
    let reduced = outer * inner;
    let src = m.matrix();
    let mut out = ComplexMatrix::zeros(reduced, reduced);
    for ro in 0..outer {
        for ri in 0..inner {
            let r = ro * inner + ri;
            for co in 0..outer {
                for ci in 0..inner {
                    let c = co * inner + ci;
                    let mut acc: Complex64 = ZERO;
                    for k in 0..dim {
                        let fr = (ro * dim + k) * inner + ri;
                        let fc = (co * dim + k) * inner + ci;
                        acc += src[(fr, fc)];
                    }
                    out[(r, c)] = acc;
                }
            }
        }
    }
    Ok(HermitianOperator::symmetrized(out))
}

/// Transposes subsystem `which` in the computational basis.
pub fn partial_transpose(m: &HermitianOperator, shape: &SubsystemShape, which: usize) -> Result<HermitianOperator> {
    shape.check(m.dim(), which)?;
    let (_, dim, inner) = strides(shape, which);
    let src = m.matrix();
    let n = m.dim();
    let out = ComplexMatrix::from_fn(n, n, |r, c| {
        let (rh, rm, rl) = split(r, inner, dim);
        let (ch, cm, cl) = split(c, inner, dim);
        let fr = (rh * dim + cm) * inner + rl;
        let fc = (ch * dim + rm) * inner + cl;
        src[(fr, fc)]
    });
    Ok(HermitianOperator::symmetrized(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{pauli, ONE};

    fn max_entangled_projector(d: usize) -> HermitianOperator {
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = ONE;
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    fn random_hermitian(dim: usize, seed: u64) -> HermitianOperator {
        // Small deterministic generator, enough for index checks.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = ComplexMatrix::from_fn(dim, dim, |_, _| Complex64::new(next(), next()));
        HermitianOperator::symmetrized(&m + &m.adjoint())
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zz = kron(&pauli::z(), &pauli::z());
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., -1., 0., 0., 0., 0., -1., 0., 0., 0., 0., 1.],
        )
        .unwrap();
        assert_eq!(zz, expected);
    }

    #[test]
    fn kron_x_with_projector() {
        let p0 = ComplexMatrix::from_real(2, 2, &[1., 0., 0., 0.]).unwrap();
        let m = kron(&pauli::x(), &p0);
        for r in 0..4 {
            for c in 0..4 {
                let expected = if (r, c) == (0, 2) || (r, c) == (2, 0) { 1.0 } else { 0.0 };
                assert_eq!(m[(r, c)], Complex64::new(expected, 0.0), "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn partial_trace_of_max_entangled_is_identity() {
        let phi = max_entangled_projector(2);
        let shape = SubsystemShape::new([2, 2]).unwrap();
        let reduced = partial_trace(&phi, &shape, 1).unwrap();
        assert!(reduced.max_abs_diff(&HermitianOperator::identity(2)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = random_hermitian(3, 1);
        let sigma = random_hermitian(2, 2);
        let prod = HermitianOperator::new(kron(rho.matrix(), sigma.matrix())).unwrap();
        let shape = SubsystemShape::new([3, 2]).unwrap();
        let reduced = partial_trace(&prod, &shape, 1).unwrap();
        assert!(reduced.max_abs_diff(&rho.scale(sigma.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_matches_index_sum_oracle() {
        let m = random_hermitian(4, 7);
        let shape = SubsystemShape::new([2, 2]).unwrap();
        let reduced = partial_trace(&m, &shape, 0).unwrap();
        for j in 0..2 {
            for l in 0..2 {
                let oracle: Complex64 = (0..2).map(|a| m.matrix()[(a * 2 + j, a * 2 + l)]).sum();
                assert!((reduced.matrix()[(j, l)] - oracle).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let m = HermitianOperator::identity(4);
        let shape = SubsystemShape::new([3, 2]).unwrap();
        assert!(partial_trace(&m, &shape, 0).is_err());
        let shape = SubsystemShape::new([2, 2]).unwrap();
        assert!(partial_trace(&m, &shape, 2).is_err());
    }

    #[test]
    fn partial_transpose_basics() {
        let shape = SubsystemShape::new([2, 2]).unwrap();
        let id = HermitianOperator::identity(4);
        assert_eq!(partial_transpose(&id, &shape, 0).unwrap(), id);

        let m = random_hermitian(4, 3);
        let twice = partial_transpose(&partial_transpose(&m, &shape, 0).unwrap(), &shape, 0).unwrap();
        assert_eq!(twice, m);

        // Index oracle: sum_ij |ji><ij| is the swap operator.
        let pt = partial_transpose(&max_entangled_projector(2), &shape, 0).unwrap();
        let mut swap = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(j * 2 + i, i * 2 + j)] = ONE;
            }
        }
        assert_eq!(pt.matrix(), &swap);
    }

    #[test]
    fn partial_transposes_compose_to_full_transpose() {
        for (dims, seed) in [([2usize, 3usize], 11u64), ([3, 2], 12), ([3, 3], 13)] {
            let shape = SubsystemShape::new(dims).unwrap();
            let m = random_hermitian(shape.total(), seed);
            let both =
                partial_transpose(&partial_transpose(&m, &shape, 0).unwrap(), &shape, 1).unwrap();
            assert_eq!(both, m.transpose());
        }
    }

    #[test]
    fn three_party_partial_trace_of_middle() {
        let a = random_hermitian(2, 21);
        let b = random_hermitian(3, 22);
        let c = random_hermitian(2, 23);
        let abc = kron(&kron(a.matrix(), b.matrix()), c.matrix());
        let abc = HermitianOperator::new(abc).unwrap();
        let shape = SubsystemShape::new([2, 3, 2]).unwrap();
        let reduced = partial_trace(&abc, &shape, 1).unwrap();
        let expected = kron(a.matrix(), c.matrix()).scale_real(b.trace());
        assert!(reduced.matrix().max_abs_diff(&expected) < 1e-12);
    }
}
