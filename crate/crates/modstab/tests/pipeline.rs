use modstab::action::{action_jet, quadrature, Kernel};
use modstab::hill_oracle::{build_operator, spectrum_near_origin};
use modstab::wave::profile;
use modstab::{
    constrain, constrained_from_linear, verify_theorem, Branch, Error, LinearPoint, PotentialModel,
    Settings,
};

fn focusing() -> (LinearPoint, f64) {
    (LinearPoint::new(0.3, 0.2, -0.5, 1.0), 0.7)
}

fn defocusing() -> (LinearPoint, f64) {
    (LinearPoint::new(1.0, 0.5, 3.0, -1.0), -0.4)
}

#[test]
fn linear_seed_to_verdict() {
    let (model, settings) = (PotentialModel::cubic(), Settings::default());
    for ((lp, u), unstable) in [(focusing(), true), (defocusing(), false)] {
        let cp = constrained_from_linear(&lp, u, &model, &settings).unwrap();
        let rep = verify_theorem(&cp, &model, &settings).unwrap();
        assert!(rep.concordant);
        assert_eq!(rep.max_re_ratio > 1e-3, unstable);
        assert_eq!(rep.branches.len(), 2);
    }
}

#[test]
fn constraint_agrees_with_a_dense_scan() {
    // W_J(H) on a fine grid, straight from two loop integrals.
    let (model, settings) = (PotentialModel::cubic(), Settings::default());
    let (lp, u) = focusing();
    let exact = constrained_from_linear(&lp, u, &model, &settings).unwrap();
    let mut seed = exact.point;
    seed.h += 0.03;
    let solved = constrain(&seed, &model, Branch::EliminateH, &settings).unwrap();

    let w_j = |h: f64| -> Option<f64> {
        let mut p = seed;
        p.h = h;
        let inv = quadrature(&p, &model, Kernel::InvSqrtP, &settings).ok()?;
        let eta = quadrature(&p, &model, Kernel::Eta, &settings).ok()?;
        Some(0.5 * inv * p.shift() - eta)
    };
    let jet = action_jet(&solved.point, &model, &settings).unwrap();
    assert!((w_j(solved.point.h).unwrap() - jet.w_j).abs() < 1e-12);

    let (lo, hi, n) = (seed.h - 0.2, seed.h + 0.2, 10_000);
    let grid: Vec<(f64, Option<f64>)> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .map(|h| (h, w_j(h)))
        .collect();
    let crossings: Vec<f64> = grid
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            ((h0, Some(a)), (h1, Some(b))) if a.signum() != b.signum() => {
                Some(h0 - a * (h1 - h0) / (b - a))
            }
            _ => None,
        })
        .collect();
    let nearest = crossings
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - solved.point.h)
                .abs()
                .total_cmp(&(b - solved.point.h).abs())
        })
        .unwrap();
    assert!(
        (nearest - solved.point.h).abs() < 1e-6,
        "{nearest} vs {}",
        solved.point.h
    );
    assert!((solved.point.h - exact.point.h).abs() < 1e-9);
}

#[test]
fn galilean_boost_shifts_speeds_only() {
    let (model, settings) = (PotentialModel::cubic(), Settings::default());
    let (lp, _) = focusing();
    let reps: Vec<_> = [-0.2, 0.7]
        .iter()
        .map(|&u| {
            verify_theorem(
                &constrained_from_linear(&lp, u, &model, &settings).unwrap(),
                &model,
                &settings,
            )
            .unwrap()
        })
        .collect();
    let scale = reps[0].ratios.iter().map(|r| r.norm()).fold(0.0, f64::max);
    for k in 0..4 {
        assert!((reps[0].ratios[k] - reps[1].ratios[k]).norm() < 1e-9 * scale);
        let shifted = reps[1].speeds[k] - reps[0].speeds[k];
        assert!((shifted.re - 0.9).abs() < 1e-9 && shifted.im.abs() < 1e-9 * scale);
    }
}

#[test]
fn floquet_operator_is_conjugate_under_mu_reversal() {
    let (model, settings) = (PotentialModel::cubic(), Settings::default());
    let (lp, u) = defocusing();
    let cp = constrained_from_linear(&lp, u, &model, &settings).unwrap();
    let wave = profile(&cp.point, &model, 128, None).unwrap();
    let lin = cp.point.to_linear();
    let plus = build_operator(&wave, &lin, &model, 0.01).unwrap();
    let minus = build_operator(&wave, &lin, &model, -0.01).unwrap();
    let scale = plus.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let worst = plus
        .matrix
        .iter()
        .zip(minus.matrix.iter())
        .map(|(a, b)| (a.conj() - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-13 * scale, "{worst}");
}

#[test]
fn coarse_grid_is_flagged_under_resolved() {
    let (model, settings) = (PotentialModel::cubic(), Settings::default());
    let (lp, u) = focusing();
    let cp = constrained_from_linear(&lp, u, &model, &settings).unwrap();
    let lin = cp.point.to_linear();
    let coarse = profile(&cp.point, &model, 64, None).unwrap();
    assert!(matches!(
        build_operator(&coarse, &lin, &model, 0.0),
        Err(Error::Resolution { .. })
    ));
}

#[test]
fn near_origin_eigenvalues_converge_with_the_grid() {
    let (model, settings) = (PotentialModel::cubic(), Settings::default());
    let (lp, u) = defocusing();
    let cp = constrained_from_linear(&lp, u, &model, &settings).unwrap();
    let lin = cp.point.to_linear();
    let mu = 1e-3;
    let eig = |n: usize| {
        let wave = profile(&cp.point, &model, n, None).unwrap();
        let mut v =
            spectrum_near_origin(&build_operator(&wave, &lin, &model, mu).unwrap(), 4).unwrap();
        v.sort_by(|a, b| a.im.total_cmp(&b.im));
        v
    };
    let (a, b) = (eig(128), eig(256));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-5 * y.norm(), "{x} vs {y}");
    }
}
