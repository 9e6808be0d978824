use divisio::channels::{compose, haar_unitary, random_channel, seeded_rng, Channel};
use divisio::diamond::{diamond_norm, guess_probability, probe_lower_bound};
use divisio::matlin::{kron, ComplexMatrix, HermitianOperator};
use divisio::sdp::{self, LinearForm, Relation, SdpProblem, Sense, SolveOptions};
use divisio::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

fn random_difference(d: usize, seed: u64) -> Channel {
    let mut rng = seeded_rng(seed);
    let a = random_channel(d, d, 1 + (seed % 3) as usize, &mut rng).unwrap();
    let b = random_channel(d, d, 1 + ((seed + 1) % 3) as usize, &mut rng).unwrap();
    a.difference(&b).unwrap()
}

/// The other side of the duality, assembled by hand:
/// `max Re Tr[C† X]` over `[[ρ0 ⊗ 1, X], [X†, ρ1 ⊗ 1]] ⪰ 0` with unit-trace
/// density operators `ρ0`, `ρ1`.
fn primal_diamond(map: &Channel) -> f64 {
    let (d, e) = (map.dim_in(), map.dim_out());
    let n = d * e;
    let (r0, r1, p) = (0, 1, 2);
    let mut prob = SdpProblem::new(vec![d, d, 2 * n], 0, Sense::Maximize);
    let c = map.choi().matrix();
    let mut obj = LinearForm::new();
    for a in 0..n {
        for b in 0..n {
            obj.add(p, a, n + b, c[(a, b)].conj());
        }
    }
    prob.set_objective(&obj).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    for (rho, offset) in [(r0, 0), (r1, n)] {
        for a in 0..n {
            for b in a..n {
                let (i, beta) = (a / e, a % e);
                let (j, gamma) = (b / e, b % e);
                let phases: &[Complex64] = if a == b { &[one] } else { &[one, minus_i] };
                for &ph in phases {
                    let mut f = LinearForm::new();
                    f.add(p, offset + a, offset + b, ph);
                    if beta == gamma {
                        f.add(rho, i, j, -ph);
                    }
                    prob.add_constraint(&f, Relation::Equal, 0.0).unwrap();
                }
            }
        }
        let mut f = LinearForm::new();
        for i in 0..d {
            f.add(rho, i, i, one);
        }
        prob.add_constraint(&f, Relation::Equal, 1.0).unwrap();
    }
    let sol = sdp::solve(&prob, &SolveOptions::default()).unwrap().require_optimal().unwrap();
    sol.primal_value
}

#[test]
fn agrees_with_hand_built_primal_program() {
    for k in 0..20u64 {
        let diff = random_difference(2, 300 + k);
        let dual = diamond_norm(&diff).unwrap().value;
        let primal = primal_diamond(&diff);
        assert!((dual - primal).abs() < 1e-6, "instance {k}: {dual} vs {primal}");
    }
}

#[test]
fn sandwiched_between_probe_bound_and_two() {
    for k in 0..50u64 {
        let d = if k < 25 { 2 } else { 3 };
        let diff = random_difference(d, 400 + k);
        let v = diamond_norm(&diff).unwrap();
        let probe = probe_lower_bound(&diff, 2000, &mut seeded_rng(k), Execution::Parallel).unwrap();
        assert!(probe <= v.value + 1e-7, "instance {k}: probe {probe} above {}", v.value);
        assert!(v.entangled_lower_bound <= v.value + 1e-7);
        assert!(v.value <= 2.0 + 1e-7);
    }
}

/// Success probability of one probe-and-measure strategy with equal priors.
fn strategy_success(a: &Channel, b: &Channel, probe: &[Complex64], proj: &ComplexMatrix) -> f64 {
    let d = a.dim_in();
    let u = ComplexMatrix::from_fn(d, d, |x, i| probe[x * d + i]);
    let k = kron(&u, &ComplexMatrix::identity(a.dim_out()));
    let out = |c: &Channel| &(&k * c.choi().matrix()) * &k.adjoint();
    let (ra, rb) = (out(a), out(b));
    let pa = proj.trace_product(&ra).re;
    let pb = (rb.trace() - proj.trace_product(&rb)).re;
    0.5 * (pa + pb)
}

#[test]
fn no_strategy_beats_the_optimal_guess_probability() {
    for k in 0..20u64 {
        let mut rng = seeded_rng(700 + k);
        let a = random_channel(2, 2, 2, &mut rng).unwrap();
        let b = random_channel(2, 2, 1 + (k % 3) as usize, &mut rng).unwrap();
        let best = guess_probability(&a, &b, 0.5).unwrap();
        let mut seen = 0.0f64;
        for s in 0..1000 {
            let probe = haar_unitary(4, &mut rng).column(0);
            let v = haar_unitary(4, &mut rng);
            let rank = 1 + s % 3;
            let cols: Vec<Vec<Complex64>> = (0..rank).map(|c| v.column(c)).collect();
            let proj = cols.iter().fold(ComplexMatrix::zeros(4, 4), |acc, c| &acc + &ComplexMatrix::outer(c, c));
            seen = seen.max(strategy_success(&a, &b, &probe, &proj));
        }
        assert!(seen <= best + 1e-7, "pair {k}: strategy {seen} beats {best}");
        assert!(seen >= 0.5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn unitary_invariance(seed in any::<u64>()) {
        let diff = random_difference(2, seed);
        let mut rng = seeded_rng(seed ^ 0x55);
        let u = Channel::from_unitary(&haar_unitary(2, &mut rng));
        let v = Channel::from_unitary(&haar_unitary(2, &mut rng));
        let rotated = compose(&v, &compose(&diff, &u).unwrap()).unwrap();
        let a = diamond_norm(&diff).unwrap().value;
        let b = diamond_norm(&rotated).unwrap().value;
        prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn homogeneity(seed in any::<u64>(), alpha in prop::sample::select(vec![0.5f64, 2.0])) {
        let diff = random_difference(2, seed);
        let a = diamond_norm(&diff).unwrap().value;
        let b = diamond_norm(&diff.scale(alpha)).unwrap().value;
        prop_assert!((b - alpha * a).abs() < 1e-6);
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let [a, b, c] = [0, 1, 2].map(|_| random_channel(2, 2, 2, &mut rng).unwrap());
        let ab = diamond_norm(&a.difference(&b).unwrap()).unwrap().value;
        let bc = diamond_norm(&b.difference(&c).unwrap()).unwrap().value;
        let ac = diamond_norm(&a.difference(&c).unwrap()).unwrap().value;
        prop_assert!(ac <= ab + bc + 1e-7);
    }
}

#[test]
fn hermitian_block_of_the_optimum_is_psd() {
    let diff = random_difference(3, 99);
    let r = diamond_norm(&diff).unwrap();
    let n = 9;
    let c = diff.choi().matrix();
    let block = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => r.y0.matrix()[(i, j)],
        (false, false) => r.y1.matrix()[(i - n, j - n)],
        (true, false) => -c[(i, j - n)],
        (false, true) => -c[(j, i - n)].conj(),
    });
    assert!(HermitianOperator::symmetrized(block).min_eigenvalue().unwrap() >= -1e-8);
}
