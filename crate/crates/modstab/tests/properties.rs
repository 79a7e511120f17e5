use modstab::action::action_jet;
use modstab::brackets::poisson;
use modstab::normal_form::{solve_pencil, solve_pencil_at, QuadraticPencil};
use modstab::numeric::{canonical_order, match_multisets};
use modstab::wave::validate_omega;
use modstab::whitham_system::{characteristics, SystemMatrices};
use modstab::{Branch, PotentialModel, Settings, WhithamPoint};
use nalgebra::Matrix4;
use num_complex::Complex64;
use proptest::prelude::*;

fn physical_pencil() -> impl Strategy<Value = QuadraticPencil> {
    (
        prop::array::uniform3(-2.0..2.0f64),
        prop::array::uniform3(-2.0..2.0f64),
        prop::array::uniform3(-2.0..2.0f64),
    )
        .prop_filter("M² well conditioned", |(m2, _, _)| {
            (m2[0] * m2[2] - m2[1] * m2[1]).abs() > 0.1
        })
        .prop_map(|(m2, m1, m0)| {
            let mut p = QuadraticPencil::real(m2, m0);
            p.a1 = Complex64::new(0.0, m1[0]);
            p.b1 = Complex64::new(0.0, m1[1]);
            p.d1 = Complex64::new(0.0, m1[2]);
            p
        })
}

fn scale(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_scale_linearly_with_mu(p in physical_pencil(), mu in 0.01..10.0f64) {
        let base = solve_pencil(&p).unwrap().ratios;
        let scaled: Vec<Complex64> = solve_pencil_at(&p, mu).unwrap().ratios.iter().map(|l| l / mu).collect();
        let (_, d) = match_multisets(&scaled, &base);
        prop_assert!(d < 1e-6 * scale(&base), "{d}");
    }

    #[test]
    fn physical_roots_are_symmetric_under_reflection(p in physical_pencil()) {
        let r = solve_pencil(&p).unwrap().ratios;
        let reflected: Vec<Complex64> = r.iter().map(|z| -z.conj()).collect();
        let (_, d) = match_multisets(&reflected, &r);
        prop_assert!(d < 1e-6 * scale(&r), "{d}");
    }

    #[test]
    fn speeds_ignore_a_common_scale_of_the_system(
        entries in prop::collection::vec(-1.0..1.0f64, 32),
        s in prop_oneof![1e-6..1e-3f64, 1e3..1e6f64],
    ) {
        let big_a = Matrix4::from_iterator(entries[..16].iter().copied()) + Matrix4::identity() * 3.0;
        let a = Matrix4::from_iterator(entries[16..].iter().copied());
        let m = SystemMatrices { big_a, a, branch: Branch::EliminateH, u: 0.0 };
        let scaled = SystemMatrices { big_a: big_a * s, a: a * s, ..m.clone() };
        let (c1, c2) = (characteristics(&m).unwrap().speeds, characteristics(&scaled).unwrap().speeds);
        let (_, d) = match_multisets(&c1, &c2);
        prop_assert!(d < 1e-8 * scale(&c1), "{d}");
    }

    #[test]
    fn poisson_bracket_is_antisymmetric(p in (-1e3..1e3f64, -1e3..1e3f64), q in (-1e3..1e3f64, -1e3..1e3f64)) {
        prop_assert_eq!(poisson(p, q), -poisson(q, p));
        prop_assert_eq!(poisson(p, p), 0.0);
    }

    #[test]
    fn canonical_order_ignores_input_order(
        (vals, shuffled) in prop::collection::vec((-3i32..3, -3i32..3), 1..8).prop_flat_map(|v| {
            let vals: Vec<Complex64> = v.iter().map(|&(a, b)| Complex64::new(a as f64 * 0.5, b as f64 * 0.25)).collect();
            (Just(vals.clone()), Just(vals).prop_shuffle())
        }),
    ) {
        let (mut a, mut b) = (vals, shuffled);
        canonical_order(&mut a);
        canonical_order(&mut b);
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn virial_identity_holds_on_valid_points(
        h in 0.2..2.0f64, u in -1.0..1.0f64, j in 0.2..1.5f64, g in -1.0..1.0f64, beta in -0.5..0.5f64,
        zeta in prop_oneof![-1.5..-0.1f64, 0.1..1.5f64],
    ) {
        let model = PotentialModel::cubic();
        let p = WhithamPoint::new(h, u, j, g, beta, zeta);
        prop_assume!(validate_omega(&p, &model, None).pass);
        let jet = action_jet(&p, &model, &Settings::default()).unwrap();
        prop_assert!(modstab::action::virial_residual(&jet, &p) < 1e-8);
    }
}
