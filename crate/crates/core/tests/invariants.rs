use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use residue_core::oracle::{ch_monomial_pairing, ch_torus_oracle, MonomialResidueSpec};
use residue_core::pairings::assemble_integrand;
use residue_core::*;

fn bump() -> RadialBump {
    RadialBump::new(0.5, 1.0).unwrap()
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-3i32..=3, -3i32..=3).prop_map(|(a, b)| Complex64::new(a as f64 * 0.5, b as f64 * 0.25))
}

/// Polynomials with small exponents, holomorphic only if `anti_max == 0`.
fn poly_strategy(
    dim: usize,
    holo_max: u32,
    anti_max: u32,
) -> impl Strategy<Value = ComplexPolynomial> {
    let term = (
        prop::collection::vec(0..=holo_max, dim),
        prop::collection::vec(0..=anti_max, dim),
        coeff(),
    );
    prop::collection::vec(term, 1..6)
        .prop_map(move |ts| ComplexPolynomial::from_terms(dim, ts).unwrap())
}

fn point(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)),
        dim,
    )
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_agrees_with_torus_cauchy_integrals(
        a1 in 1u32..=3, a2 in 1u32..=3, psi in poly_strategy(2, 4, 0),
    ) {
        let spec = MonomialResidueSpec::residues(2, vec![a1, a2]).unwrap();
        let phi = TestForm::top(psi, bump());
        let closed = ch_monomial_pairing(&spec, &phi).unwrap();
        let torus = ch_torus_oracle(&spec, &phi, 0.3, 16).unwrap();
        prop_assert!(close(closed, torus, 1e-10), "{closed} vs {torus}");
    }

    #[test]
    fn oracle_is_linear(
        a1 in 1u32..=4, a2 in 1u32..=2,
        p1 in poly_strategy(2, 4, 2), p2 in poly_strategy(2, 4, 2), c in coeff(),
    ) {
        let spec = MonomialResidueSpec::residues(2, vec![a1, a2]).unwrap();
        let v = |p: &ComplexPolynomial| ch_monomial_pairing(&spec, &TestForm::top(p.clone(), bump())).unwrap();
        let sum = v(&(&p1 + &p2.scale(c)));
        prop_assert!(close(sum, v(&p1) + c * v(&p2), 1e-12));
    }

    #[test]
    fn residue_current_annihilates_conjugates_and_ideal(
        a in 1u32..=3, psi in poly_strategy(2, 3, 2), k in 1u32..=2,
    ) {
        // one residue factor z1^a and a principal value 1/z2^k
        let spec = MonomialResidueSpec::new(2, vec![a], vec![k]).unwrap();
        let phi = |p: ComplexPolynomial| TestForm::new(p, bump(), vec![1]).unwrap();
        let zb1 = ComplexPolynomial::conj_var(2, 0);
        let f1 = ComplexPolynomial::var(2, 0).pow(a);
        let zero = Complex64::new(0.0, 0.0);
        prop_assert_eq!(ch_monomial_pairing(&spec, &phi(&psi * &zb1)).unwrap(), zero);
        prop_assert_eq!(ch_monomial_pairing(&spec, &phi(&psi * &f1)).unwrap(), zero);
    }

    #[test]
    fn display_parse_roundtrip(p in poly_strategy(3, 3, 3)) {
        let back = ComplexPolynomial::parse(&p.to_string(), 3).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn ring_operations_commute_with_evaluation(
        p in poly_strategy(2, 3, 3), q in poly_strategy(2, 3, 3), z in point(2),
    ) {
        let (pz, qz) = (p.eval(&z).unwrap(), q.eval(&z).unwrap());
        prop_assert!(close((&p * &q).eval(&z).unwrap(), pz * qz, 1e-12));
        prop_assert!(close((&p - &q).eval(&z).unwrap(), pz - qz, 1e-12));
        prop_assert!(close(p.conj().eval(&z).unwrap(), pz.conj(), 1e-12));
    }

    #[test]
    fn derivatives_obey_leibniz_and_conjugation(
        p in poly_strategy(2, 3, 3), q in poly_strategy(2, 3, 3), j in 0usize..2,
    ) {
        let lhs = (&p * &q).dz(j).unwrap();
        let rhs = &(&p.dz(j).unwrap() * &q) + &(&p * &q.dz(j).unwrap());
        prop_assert!((&lhs - &rhs).max_abs_coeff() < 1e-12);
        prop_assert!((&p.conj().dz(j).unwrap() - &p.dzbar(j).unwrap().conj()).max_abs_coeff() < 1e-12);
    }

    #[test]
    fn kernels_are_monotone_steps(order in 1u32..6, a in 0.1f64..0.9, t in 0.0f64..50.0, dt in 0.0f64..5.0) {
        for k in [Kernel::rational(order), Kernel::SmoothStep { a, b: a + 0.5 }, Kernel::Sharp] {
            let (x, y) = (k.eval(t), k.eval(t + dt));
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert!(y >= x - 1e-15);
            prop_assert_eq!(k.eval(f64::INFINITY), 1.0);
        }
        prop_assert_eq!(Kernel::rational(order).eval(0.0), 0.0);
    }

    #[test]
    fn smooth_kernel_derivative_matches_difference_quotient(order in 1u32..6, t in 0.05f64..20.0) {
        for k in [Kernel::rational(order), Kernel::SmoothStep { a: 0.5, b: 1.5 }] {
            let h = 1e-6 * (1.0 + t);
            let fd = (k.eval(t + h) - k.eval(t - h)) / (2.0 * h);
            prop_assert!((k.derivative(t).unwrap() - fd).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn admissible_schedules_are_ordered(q in 2usize..4, seed in 0u64..1000, delta in 0.2f64..0.9) {
        let mut order: Vec<usize> = (0..q).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..q).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let logs = EpsilonSchedule::admissible(order.clone(), vec![]).log_point(delta).unwrap();
        for w in order.windows(2) {
            // a later rank tends to zero strictly faster
            prop_assert!(logs[w[1]] < logs[w[0]]);
        }
    }
}

#[test]
fn integrand_antisymmetry_under_factor_swap() {
    let f = HoloMap::parse(3, &["z1^2 + z2", "z2*z3 - z1", "z3^2"], 3).unwrap();
    let phi = TestForm::top(
        ComplexPolynomial::parse("z1*zb2 + z3^2 + 1", 3).unwrap(),
        bump(),
    );
    let k = [
        Kernel::rational(1),
        Kernel::rational(2),
        Kernel::SmoothStep { a: 0.5, b: 2.0 },
    ];
    let eps = [1e-2, 3e-3, 5e-2];
    let base = assemble_integrand(&f, &phi, &k, &eps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let g = f.swapped(i, j);
        let (mut k2, mut e2) = (k, eps);
        k2.swap(i, j);
        e2.swap(i, j);
        let swapped = assemble_integrand(&g, &phi, &k2, &e2).unwrap();
        for _ in 0..10_000 / 3 + 1 {
            let z: Vec<Complex64> = (0..3)
                .map(|_| Complex64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)))
                .collect();
            let (a, b) = (base.value(&z), swapped.value(&z));
            assert!(
                (a + b).norm() <= 1e-12 * a.norm().max(1e-300),
                "({i},{j}) at {z:?}: {a} vs {b}"
            );
        }
    }
}
