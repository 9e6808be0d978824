use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::matlin::{pauli, trace_norm, ComplexMatrix, HermitianOperator};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Adds `Σ_k s_k X_k + Σ_f t_f x_f · 1 = rhs` basis element by basis element.
fn matrix_equality(p: &mut SdpProblem, blocks: &[(usize, f64)], free: &[(usize, f64)], rhs: &HermitianOperator) {
    for b in hermitian_basis(rhs.dim()) {
        let (i, j, coef) = b.functional();
        let mut form = LinearForm::new();
        for &(k, s) in blocks {
            form.add(k, i, j, coef * s);
        }
        for &(f, t) in free {
            form.add_free(f, t * b.trace());
        }
        let target = b.matrix(rhs.dim()).inner(rhs);
        p.add_constraint(&form, Relation::Equal, target).unwrap();
    }
}

fn trace_form(blocks: &[(usize, usize)]) -> LinearForm {
    let mut form = LinearForm::new();
    for &(k, n) in blocks {
        for i in 0..n {
            form.add(k, i, i, c(1.0));
        }
    }
    form
}

/// `min Tr P + Tr N  s.t.  P - N = delta`.
fn trace_norm_problem(delta: &HermitianOperator) -> SdpProblem {
    let n = delta.dim();
    let mut p = SdpProblem::new(vec![n, n], 0, Sense::Minimize);
    p.set_objective(&trace_form(&[(0, n), (1, n)])).unwrap();
    matrix_equality(&mut p, &[(0, 1.0), (1, -1.0)], &[], delta);
    p
}

fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
    let mut state = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let m = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
    HermitianOperator::symmetrized(&m + &m.adjoint())
}

#[test]
fn spectral_norm_of_pauli_z() {
    let mut p = SdpProblem::new(vec![2], 1, Sense::Minimize);
    let mut obj = LinearForm::new();
    obj.add_free(0, 1.0);
    p.set_objective(&obj).unwrap();
    // S - t·1 = -Z with S ⪰ 0.
    let minus_z = HermitianOperator::new(pauli::z().scale_real(-1.0)).unwrap();
    matrix_equality(&mut p, &[(0, 1.0)], &[(0, -1.0)], &minus_z);
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_value - 1.0).abs() < 1e-7, "{}", sol.primal_value);
    assert!((sol.free_values[0] - 1.0).abs() < 1e-7);
    assert!(sol.gap <= 1e-8);
}

#[test]
fn maximize_diagonal_functional() {
    let mut p = SdpProblem::new(vec![2], 0, Sense::Maximize);
    let mut obj = LinearForm::new();
    obj.add(0, 0, 0, c(1.0)).add(0, 1, 1, c(-1.0));
    p.set_objective(&obj).unwrap();
    p.add_constraint(&trace_form(&[(0, 2)]), Relation::Equal, 1.0).unwrap();
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_value - 1.0).abs() < 1e-7);
    assert!((sol.dual_value - 1.0).abs() < 1e-7);
    let x = sol.primal_blocks[0].matrix();
    assert!((x[(0, 0)].re - 1.0).abs() < 1e-6);
    assert!(x[(1, 1)].re.abs() < 1e-6);
}

#[test]
fn trace_norm_matches_eigen_route() {
    let s = 0.5f64.sqrt();
    let zero = HermitianOperator::from_real_diag(&[1.0, 0.0]);
    let plus = HermitianOperator::projector(&[c(s), c(s)]);
    let delta = &zero - &plus;
    let sol = solve(&trace_norm_problem(&delta), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let oracle = trace_norm(delta.matrix()).unwrap();
    assert!((oracle - 2f64.sqrt()).abs() < 1e-12);
    assert!((sol.primal_value - oracle).abs() < 1e-7);
}

#[test]
fn complex_trace_norm_matches_eigen_route() {
    for seed in 0..5 {
        let delta = random_hermitian(3, seed);
        let sol = solve(&trace_norm_problem(&delta), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let oracle = trace_norm(delta.matrix()).unwrap();
        assert!((sol.primal_value - oracle).abs() < 1e-7 * (1.0 + oracle));
        for x in &sol.primal_blocks {
            assert!(x.min_eigenvalue().unwrap() >= -1e-8);
        }
        assert!(sol.primal_residual <= 1e-8);
    }
}

#[test]
fn complex_problem_agrees_with_hand_embedded_real_problem() {
    for seed in 10..15 {
        let delta = random_hermitian(2, seed);
        let complex = solve(&trace_norm_problem(&delta), &SolveOptions::default()).unwrap();
        let real_delta = embed_complex(&delta);
        let n = real_delta.nrows();
        let real_delta = HermitianOperator::symmetrized(ComplexMatrix::from_fn(n, n, |r, c| {
            Complex64::new(real_delta[(r, c)], 0.0)
        }));
        let real = solve(&trace_norm_problem(&real_delta), &SolveOptions::default()).unwrap();
        assert!((complex.primal_value - 0.5 * real.primal_value).abs() < 1e-7);
    }
}

#[test]
fn greater_equal_rows_use_surplus() {
    let mut p = SdpProblem::new(vec![1], 0, Sense::Minimize);
    p.set_objective(&trace_form(&[(0, 1)])).unwrap();
    let mut f = LinearForm::new();
    f.add(0, 0, 0, c(1.0));
    p.add_constraint(&f, Relation::GreaterEqual, 2.0).unwrap();
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_value - 2.0).abs() < 1e-7);
    assert!((sol.dual_multipliers[0] - 1.0).abs() < 1e-6);
}

#[test]
fn primal_infeasible_is_detected() {
    let mut p = SdpProblem::new(vec![2], 0, Sense::Minimize);
    p.set_objective(&trace_form(&[(0, 2)])).unwrap();
    p.add_constraint(&trace_form(&[(0, 2)]), Relation::Equal, -1.0).unwrap();
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
    // Farkas ray: bᵀy > 0.
    let b = -1.0;
    assert!(b * sol.dual_multipliers[0] > 0.0, "{:?}", sol.dual_multipliers);
}

#[test]
fn dual_infeasible_is_detected() {
    let mut p = SdpProblem::new(vec![2], 0, Sense::Minimize);
    let mut obj = trace_form(&[(0, 2)]);
    obj.add(0, 0, 0, c(-2.0)).add(0, 1, 1, c(-2.0));
    p.set_objective(&obj).unwrap();
    let mut f = LinearForm::new();
    f.add(0, 0, 1, c(1.0));
    p.add_constraint(&f, Relation::Equal, 0.0).unwrap();
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::DualInfeasible);
}

#[test]
fn dependent_rows_are_tolerated() {
    let mut p = SdpProblem::new(vec![2], 0, Sense::Maximize);
    let mut obj = LinearForm::new();
    obj.add(0, 0, 0, c(1.0));
    p.set_objective(&obj).unwrap();
    p.add_constraint(&trace_form(&[(0, 2)]), Relation::Equal, 1.0).unwrap();
    let mut twice = LinearForm::new();
    twice.add(0, 0, 0, c(2.0)).add(0, 1, 1, c(2.0));
    p.add_constraint(&twice, Relation::Equal, 2.0).unwrap();
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_value - 1.0).abs() < 1e-7);

    p.constraints[1].rhs = 3.0;
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
}

#[test]
fn malformed_problems_are_rejected() {
    let mut p = SdpProblem::new(vec![2], 0, Sense::Minimize);
    let mut f = LinearForm::new();
    f.add(1, 0, 0, c(1.0));
    assert!(matches!(p.add_constraint(&f, Relation::Equal, 1.0), Err(Error::MalformedProblem(_))));
    let bad = SparseHermitian::from_entries(2, [(0, 1, Complex64::new(0.0, 1.0))]);
    assert!(bad.is_err());
}

#[test]
fn basis_functionals_match_matrices() {
    let h = random_hermitian(3, 99);
    for b in hermitian_basis(3) {
        let (i, j, coef) = b.functional();
        let lhs = (coef * h.matrix()[(i, j)]).re;
        let rhs = b.matrix(3).inner(&h);
        assert!((lhs - rhs).abs() < 1e-14, "{b:?}");
    }
    let coeffs: Vec<f64> = hermitian_basis(3).iter().map(|b| b.matrix(3).inner(&h)).collect();
    assert!(from_basis_coefficients(3, &coeffs).max_abs_diff(&h) < 1e-14);
}

#[test]
fn embedding_examples() {
    let e = embed_complex(&HermitianOperator::identity(2));
    assert_eq!(e, nalgebra::DMatrix::identity(4, 4));

    let y = HermitianOperator::new(pauli::y()).unwrap();
    let e = embed_complex(&y);
    let expected = nalgebra::DMatrix::from_row_slice(
        4,
        4,
        &[0., 0., 0., 1., 0., 0., -1., 0., 0., -1., 0., 0., 1., 0., 0., 0.],
    );
    assert_eq!(e, expected);
    let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn dump_round_trip() {
    let p = trace_norm_problem(&random_hermitian(2, 5));
    let mut buf = Vec::new();
    write_problem(&p, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.contains("\"blocks\"") && text.contains("\"objective\"") && text.contains("\"constraints\""));
    let back = read_problem(buf.as_slice()).unwrap();
    assert_eq!(back, p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn embedding_preserves_spectrum(seed in any::<u64>()) {
        let h = random_hermitian(3, seed);
        let e = embed_complex(&h);
        let emin = e.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v));
        prop_assert!((emin - h.min_eigenvalue().unwrap()).abs() < 1e-10);
        prop_assert!((e.trace() - 2.0 * h.trace()).abs() < 1e-12);
    }

    #[test]
    fn optimum_scales_with_objective(seed in any::<u64>(), alpha in 0.1f64..10.0) {
        let delta = random_hermitian(2, seed);
        let base = solve(&trace_norm_problem(&delta), &SolveOptions::default()).unwrap();
        let mut scaled = trace_norm_problem(&delta);
        scaled.set_objective(&{
            let mut f = LinearForm::new();
            for k in 0..2 {
                for i in 0..2 {
                    f.add(k, i, i, c(alpha));
                }
            }
            f
        }).unwrap();
        let scaled = solve(&scaled, &SolveOptions::default()).unwrap();
        prop_assert_eq!(scaled.status, SolveStatus::Optimal);
        let rel = (scaled.primal_value - alpha * base.primal_value).abs() / (alpha * base.primal_value).abs().max(1e-12);
        prop_assert!(rel < 1e-6);
        for x in &scaled.primal_blocks {
            prop_assert!(x.min_eigenvalue().unwrap() >= -1e-8);
        }
    }
}

