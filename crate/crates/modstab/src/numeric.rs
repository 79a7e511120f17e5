//! Small numerical building blocks: quadrature rules, compensated sums,
//! polynomial roots, multiset matching, extrapolation.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights mapped to θ ∈ [0, π/2], cached per order.
pub(crate) fn theta_rule(order: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(order.max(1).try_into().expect("order > 0"));
            let mut pairs: Vec<(f64, f64)> = rule
                .iter()
                .map(|(x, w)| (FRAC_PI_4 * (x + 1.0), FRAC_PI_4 * w))
                .collect();
            // Fixed node order keeps every reduction bit-reproducible.
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

/// Error-free transformation `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Sum of `x_i · y_i` evaluated in doubled working precision (Ogita–Rump–Oishi Dot2).
pub fn dot2(pairs: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &(x, y) in pairs {
        let p = x * y;
        let ep = x.mul_add(y, -p);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// Relative difference with a symmetric denominator; `0` when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

pub fn rel_diff_c(a: Complex64, b: Complex64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / a.norm().max(b.norm())
    }
}

/// Evaluate a polynomial (highest degree first) and its derivative.
pub fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a polynomial given highest degree first, via companion-matrix
/// eigenvalues followed by Newton polishing that is only accepted when it
/// decreases the residual.
pub fn poly_roots(coeffs: &[Complex64], newton_steps: usize) -> Option<Vec<Complex64>> {
    let lead = *coeffs.first()?;
    let n = coeffs.len() - 1;
    if n == 0 || lead.norm() == 0.0 {
        return None;
    }
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let eig = companion.schur().eigenvalues()?;
    let mut roots: Vec<Complex64> = eig.iter().copied().collect();
    for r in roots.iter_mut() {
        for _ in 0..newton_steps {
            let (p, dp) = horner_with_derivative(coeffs, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let candidate = *r - p / dp;
            if horner_with_derivative(coeffs, candidate).0.norm() < p.norm() {
                *r = candidate;
            } else {
                break;
            }
        }
    }
    Some(roots)
}

/// Order complex numbers by real part, then imaginary part.
pub fn canonical_order(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re));
    // Real parts within rounding of each other count as ties, so conjugate
    // pairs come out as (−im, +im) regardless of noise in the real part.
    let tie = 1e-9 * values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end].re - values[start].re <= tie {
            end += 1;
        }
        values[start..end].sort_by(|a, b| a.im.total_cmp(&b.im));
        start = end;
    }
}

/// Optimal matching of two equally sized multisets by exhaustive search over
/// permutations (sum of distances). Returns `perm` with `a[i] ↔ b[perm[i]]`
/// and the largest matched distance.
pub fn match_multisets(a: &[Complex64], b: &[Complex64]) -> (Vec<usize>, f64) {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    assert!(a.len() <= 8, "exhaustive matching is for small sets");
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let cost = |p: &[usize]| -> (f64, f64) {
        p.iter().enumerate().fold((0.0, 0.0f64), |(s, m), (i, &j)| {
            let d = (a[i] - b[j]).norm();
            (s + d, m.max(d))
        })
    };
    let mut best_cost = cost(&perm);
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let current = cost(&perm);
            if current.0 < best_cost.0 {
                best_cost = current;
                best.clone_from(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    (best, best_cost.1)
}

/// Polynomial extrapolation of samples `(x_i, y_i)` to `x = 0` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut p: Vec<Complex64> = ys.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (p[i] * xj - p[i + 1] * xi) / (xj - xi);
        }
    }
    p[0]
}
