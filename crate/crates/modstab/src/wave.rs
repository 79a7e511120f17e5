//! Parameter points, the turning-point polynomial `P(R)`, and the periodic
//! amplitude profile.
//!
//! Both coordinate systems lead to a well of the same shape,
//!
//! ```text
//! P(R) = c₀ − a R² − b / R² − z F(R²),
//! ```
//!
//! with `(c₀, a, b, z) = (H + βJ + UJ/2, 2ω, J²/8, 2ζ)` on the Whitham side and
//! `(2E, ω, κ², ζ)` on the linear side. Under `E = c₀/4`, `κ = J/4` the two
//! polynomials differ by exactly a factor of two, `P_W = 2 P_lin`, so they share
//! their roots and `A_y² = P_lin(A) = P_W(A)/2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::theta_rule;
use crate::potential::PotentialModel;
use crate::scalar::Scalar;

/// The six slow parameters of the modulation theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhithamPoint {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub gamma_star: f64,
    pub beta: f64,
    pub zeta: f64,
}

/// Travelling-wave parameters of the linearised theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearPoint {
    #[serde(rename = "E")]
    pub e: f64,
    pub kappa: f64,
    pub omega: f64,
    pub zeta: f64,
    /// Wave speed, `c = −U`.
    pub c: f64,
}

impl WhithamPoint {
    pub fn new(h: f64, u: f64, j: f64, gamma_star: f64, beta: f64, zeta: f64) -> Self {
        WhithamPoint {
            h,
            u,
            j,
            gamma_star,
            beta,
            zeta,
        }
    }

    /// `β + U/2`, the combination that recurs throughout the bracket algebra.
    pub fn shift(&self) -> f64 {
        self.beta + 0.5 * self.u
    }

    /// `ω = βU + U²/4 − γ*`.
    pub fn omega(&self) -> f64 {
        self.beta * self.u + 0.25 * self.u * self.u - self.gamma_star
    }

    /// `H + βJ + UJ/2 = 4E`.
    pub fn energy(&self) -> f64 {
        self.h + self.beta * self.j + 0.5 * self.u * self.j
    }

    pub fn to_linear(&self) -> LinearPoint {
        LinearPoint {
            e: 0.25 * self.energy(),
            kappa: 0.25 * self.j,
            omega: self.omega(),
            zeta: self.zeta,
            c: -self.u,
        }
    }

    /// Invert the map for `(H, J, γ*)` once the gauge pair `(U, β)` is fixed.
    pub fn from_linear(lp: &LinearPoint, u: f64, beta: f64) -> Self {
        let j = 4.0 * lp.kappa;
        WhithamPoint {
            h: 4.0 * lp.e - beta * j - 0.5 * u * j,
            u,
            j,
            gamma_star: beta * u + 0.25 * u * u - lp.omega,
            beta,
            zeta: lp.zeta,
        }
    }

    pub(crate) fn well(&self) -> Well<f64> {
        Well {
            c0: self.energy(),
            a: 2.0 * self.omega(),
            b: self.j * self.j / 8.0,
            z: 2.0 * self.zeta,
        }
    }

    /// Scale against which `|P′(R±)|` is judged degenerate.
    pub fn degeneracy_scale(&self) -> f64 {
        1f64.max(self.h.abs() + self.j * self.j + self.gamma_star.abs())
    }

    /// `P(R)` in Whitham variables.
    pub fn p_of_r(&self, model: &PotentialModel, r: f64) -> Result<f64> {
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("P(R) needs R > 0, got {r}")));
        }
        Ok(self.well().p(model, r))
    }
}

impl LinearPoint {
    pub fn new(e: f64, kappa: f64, omega: f64, zeta: f64) -> Self {
        LinearPoint {
            e,
            kappa,
            omega,
            zeta,
            c: 0.0,
        }
    }

    pub(crate) fn well(&self) -> Well<f64> {
        Well {
            c0: 2.0 * self.e,
            a: self.omega,
            b: self.kappa * self.kappa,
            z: self.zeta,
        }
    }

    pub fn degeneracy_scale(&self) -> f64 {
        1f64.max(4.0 * self.e.abs() + 16.0 * self.kappa * self.kappa + self.omega.abs())
    }
}

/// Consecutive simple roots of `P` enclosing a region where `P > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub r_minus: f64,
    pub r_plus: f64,
    pub dp_minus: f64,
    pub dp_plus: f64,
}

/// `P(R) = c₀ − aR² − b/R² − zF(R²)`, generic over real or complex coefficients.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Well<S> {
    pub c0: S,
    pub a: S,
    pub b: S,
    pub z: S,
}

impl<S: Scalar> Well<S> {
    pub fn p(&self, model: &PotentialModel, r: S) -> S {
        let s = r * r;
        self.c0 - self.a * s - self.b / s - self.z * model.big_f(s)
    }

    pub fn dp(&self, model: &PotentialModel, r: S) -> S {
        let s = r * r;
        (-(self.a * r) + self.b / (s * r) - self.z * r * model.f(s)) * 2.0
    }

    /// `P(R)/((R − R₋)(R₊ − R))` from the root-factored form, free of cancellation.
    ///
    /// With `P(R₀) = 0`, `P(R) = (R² − R₀²)·B(R, R₀)` where
    /// `B = −a + b/(R²R₀²) − z·(F(R²) − F(R₀²))/(R² − R₀²)`; factoring about the
    /// nearer root keeps the remaining division well away from zero.
    pub fn q(&self, model: &PotentialModel, r: S, rm: S, rp: S) -> S {
        let s = r * r;
        let bracket = |r0: S| {
            let s0 = r0 * r0;
            -self.a + self.b / (s * s0) - self.z * model.big_f_slope(s, s0)
        };
        if r.re() < 0.5 * (rm.re() + rp.re()) {
            (r + rm) * bracket(rm) / (rp - r)
        } else {
            -((r + rp) * bracket(rp)) / (r - rm)
        }
    }
}

impl Well<f64> {
    fn scan_bounds(&self, model: &PotentialModel) -> (f64, f64) {
        let lo = 1e-6;
        let reach = 1f64.max(self.c0.abs().sqrt()).max(self.b.abs().powf(0.25));
        (lo, (1e3 * reach).min(model.s_max().sqrt()))
    }

    fn bisect(&self, model: &PotentialModel, mut lo: f64, mut hi: f64) -> f64 {
        let mut plo = self.p(model, lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let pm = self.p(model, mid);
            if pm == 0.0 {
                return mid;
            }
            if (pm > 0.0) == (plo > 0.0) {
                lo = mid;
                plo = pm;
            } else {
                hi = mid;
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..2 {
            let p = self.p(model, r);
            let candidate = r - p / self.dp(model, r);
            if candidate.is_finite() && self.p(model, candidate).abs() < p.abs() {
                r = candidate;
            }
        }
        r
    }

    /// Golden-section search for the extremum of `±P` on `[lo, hi]`.
    fn extremum(&self, model: &PotentialModel, lo: f64, hi: f64, maximise: bool) -> f64 {
        let sign = if maximise { -1.0 } else { 1.0 };
        let g = |r: f64| sign * self.p(model, r);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..200 {
            if (b - a) <= 1e-15 * b {
                break;
            }
            if gc < gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d);
            }
        }
        self.p(model, 0.5 * (a + b))
    }

    /// All bounded positivity intervals, lowest first.
    pub fn wells(&self, model: &PotentialModel, scale: f64) -> Result<Vec<RootBracket>> {
        let (lo, hi) = self.scan_bounds(model);
        for cells in [512usize, 8192] {
            let ratio = (hi / lo).ln() / cells as f64;
            let rs: Vec<f64> = (0..=cells).map(|i| lo * (ratio * i as f64).exp()).collect();
            let ps: Vec<f64> = rs.iter().map(|&r| self.p(model, r)).collect();

            // Near-tangency: an interior extremum of P that nearly touches zero.
            for i in 1..cells {
                let (l, m, r) = (ps[i - 1], ps[i], ps[i + 1]);
                let neg_max = m < 0.0 && m >= l && m >= r;
                let pos_min = m > 0.0 && m <= l && m <= r;
                if neg_max || pos_min {
                    let v = self.extremum(model, rs[i - 1], rs[i + 1], neg_max);
                    if v.abs() <= 1e-10 * scale {
                        return Err(Error::DegenerateRoot(
                            "double root of P: soliton or constant-amplitude limit".into(),
                        ));
                    }
                }
            }

            let mut found = Vec::new();
            let mut start: Option<usize> = None;
            for i in 0..cells {
                let (a, b) = (ps[i] > 0.0, ps[i + 1] > 0.0);
                if !a && b {
                    start = Some(i);
                } else if a && !b {
                    if let Some(s) = start.take() {
                        found.push((s, i));
                    }
                }
            }
            if found.is_empty() {
                continue;
            }
            let mut out = Vec::with_capacity(found.len());
            for (s, e) in found {
                let r_minus = self.bisect(model, rs[s], rs[s + 1]);
                let r_plus = self.bisect(model, rs[e], rs[e + 1]);
                let dp_minus = self.dp(model, r_minus);
                let dp_plus = self.dp(model, r_plus);
                let tol = 1e-8 * scale;
                if dp_minus.abs() < tol || dp_plus.abs() < tol {
                    return Err(Error::DegenerateRoot(format!(
                        "|P'| at turning points = ({:.3e}, {:.3e}): soliton limit",
                        dp_minus.abs(),
                        dp_plus.abs()
                    )));
                }
                out.push(RootBracket {
                    r_minus,
                    r_plus,
                    dp_minus,
                    dp_plus,
                });
            }
            return Ok(out);
        }
        Err(Error::NoRoots)
    }

    pub fn select(
        &self,
        model: &PotentialModel,
        scale: f64,
        well: Option<usize>,
    ) -> Result<RootBracket> {
        let wells = self.wells(model, scale)?;
        match well {
            None if wells.len() > 1 => Err(Error::MultipleWells { count: wells.len() }),
            None => Ok(wells[0]),
            Some(i) => wells.get(i).copied().ok_or(Error::WellIndex {
                index: i,
                count: wells.len(),
            }),
        }
    }
}

/// Turning points of the wave at a Whitham point.
///
/// `well = None` demands a unique positivity interval; `Some(i)` picks the
/// i-th from below.
pub fn find_roots(
    pt: &WhithamPoint,
    model: &PotentialModel,
    well: Option<usize>,
) -> Result<RootBracket> {
    if !(pt.j > 0.0) {
        return Err(Error::Domain(
            "kappa>0 violated (J must be positive)".into(),
        ));
    }
    pt.well().select(model, pt.degeneracy_scale(), well)
}

pub(crate) fn find_linear_roots(
    lp: &LinearPoint,
    model: &PotentialModel,
    well: Option<usize>,
) -> Result<RootBracket> {
    if !(lp.kappa > 0.0) {
        return Err(Error::Domain("kappa>0 violated".into()));
    }
    lp.well().select(model, lp.degeneracy_scale(), well)
}

/// Outcome of checking membership in the generic domain Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaCheck {
    pub pass: bool,
    pub reason: Option<String>,
    pub roots: Option<RootBracket>,
}

pub fn validate_omega(
    pt: &WhithamPoint,
    model: &PotentialModel,
    well: Option<usize>,
) -> OmegaCheck {
    let fail = |reason: String| OmegaCheck {
        pass: false,
        reason: Some(reason),
        roots: None,
    };
    if !(pt.j > 0.0) {
        return fail("kappa>0 violated".into());
    }
    let roots = match find_roots(pt, model, well) {
        Ok(r) => r,
        Err(Error::DegenerateRoot(m)) => return fail(format!("soliton limit: {m}")),
        Err(e) => return fail(e.to_string()),
    };
    let w = pt.well();
    let width = roots.r_plus - roots.r_minus;
    let interior_positive =
        (1..=1000).all(|i| w.p(model, roots.r_minus + width * i as f64 / 1001.0) > 0.0);
    if !interior_positive {
        return OmegaCheck {
            pass: false,
            reason: Some("P not positive between the turning points".into()),
            roots: Some(roots),
        };
    }
    OmegaCheck {
        pass: true,
        reason: None,
        roots: Some(roots),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub y: f64,
    pub a: f64,
    pub s_y: f64,
}

/// One period of the amplitude `A(y)` and phase gradient `S_y = κ/A²`,
/// anchored at `A(0) = R₋`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub period: f64,
    pub kappa: f64,
    pub roots: RootBracket,
    pub samples: Vec<ProfileSample>,
}

/// θ-parametrisation of the linear well: `A(θ) = R₋cos²θ + R₊sin²θ`,
/// `dθ/dy = √q/2`, `dy/dθ = 2/√q`.
struct ThetaMap<'a> {
    well: Well<f64>,
    model: &'a PotentialModel,
    roots: RootBracket,
}

impl ThetaMap<'_> {
    fn amplitude(&self, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        self.roots.r_minus * c * c + self.roots.r_plus * s * s
    }

    fn rate(&self, theta: f64) -> f64 {
        let r = self.amplitude(theta);
        0.5 * self
            .well
            .q(self.model, r, self.roots.r_minus, self.roots.r_plus)
            .sqrt()
    }

    /// `y(θ)` for θ ∈ [0, π/2].
    fn half_arc(&self, theta: f64, order: usize) -> f64 {
        let rule = theta_rule(order);
        let stretch = theta / FRAC_PI_2;
        rule.iter()
            .map(|&(t, w)| w * stretch / self.rate(t * stretch))
            .sum()
    }

    fn arc(&self, theta: f64, period: f64, order: usize) -> f64 {
        if theta <= FRAC_PI_2 {
            self.half_arc(theta, order)
        } else {
            period - self.half_arc(std::f64::consts::PI - theta, order)
        }
    }
}

/// Sample the wave on a uniform grid of `n_samples` points over one period.
pub fn profile(
    pt: &WhithamPoint,
    model: &PotentialModel,
    n_samples: usize,
    well: Option<usize>,
) -> Result<WaveProfile> {
    if n_samples == 0 {
        return Err(Error::Config("profile needs at least one sample".into()));
    }
    let roots = find_roots(pt, model, well)?;
    let lp = pt.to_linear();
    let map = ThetaMap {
        well: lp.well(),
        model,
        roots,
    };
    let order = 96;
    let period = 2.0 * map.half_arc(FRAC_PI_2, order);

    // RK4 in y with an integer number of substeps per output sample.
    let per_sample = 4usize.max(1024usize.div_ceil(n_samples));
    let h = period / (n_samples * per_sample) as f64;
    let mut theta = 0.0;
    let mut thetas = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        thetas.push(theta);
        for _ in 0..per_sample {
            let k1 = map.rate(theta);
            let k2 = map.rate(theta + 0.5 * h * k1);
            let k3 = map.rate(theta + 0.5 * h * k2);
            let k4 = map.rate(theta + h * k3);
            theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    let closure = (theta - std::f64::consts::PI).abs() / std::f64::consts::PI;
    if !closure.is_finite() || closure > 1e-8 {
        return Err(Error::ProfileDivergence(format!(
            "θ(T*) misses π by {closure:.3e} (relative)"
        )));
    }

    let kappa = lp.kappa;
    let samples = thetas
        .into_iter()
        .enumerate()
        .map(|(i, mut th)| {
            let y = period * i as f64 / n_samples as f64;
            if i > 0 {
                for _ in 0..2 {
                    th -= (map.arc(th, period, order) - y) * map.rate(th);
                }
            }
            let a = map.amplitude(th);
            ProfileSample {
                y,
                a,
                s_y: kappa / (a * a),
            }
        })
        .collect();
    Ok(WaveProfile {
        period,
        kappa,
        roots,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta0() -> WhithamPoint {
        WhithamPoint::new(4.0, 0.0, 4.0, -0.5, 0.0, 0.0)
    }

    #[test]
    fn zeta0_conversion() {
        let lp = zeta0().to_linear();
        assert_eq!((lp.e, lp.kappa, lp.omega, lp.c), (1.0, 1.0, 0.5, 0.0));
        let moving = WhithamPoint { u: 2.0, ..zeta0() };
        assert_eq!(moving.to_linear().c, -2.0);
    }

    #[test]
    fn round_trip_through_linear() {
        let pt = WhithamPoint::new(0.61, 0.7, 0.8, 0.9, 0.39, 1.0);
        let back = WhithamPoint::from_linear(&pt.to_linear(), pt.u, pt.beta);
        for (a, b) in [
            (pt.h, back.h),
            (pt.j, back.j),
            (pt.gamma_star, back.gamma_star),
        ] {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn whitham_polynomial_is_twice_the_linear_one() {
        let pt = WhithamPoint::new(0.61, 0.7, 0.8, 0.9, 0.39, 1.0);
        let m = PotentialModel::cubic();
        for r in [0.3, 0.7, 1.1] {
            let pw = pt.p_of_r(&m, r).unwrap();
            let pl = pt.to_linear().well().p(&m, r);
            assert!((pw - 2.0 * pl).abs() < 1e-14);
        }
    }

    #[test]
    fn zeta0_roots_are_closed_form() {
        let m = PotentialModel::cubic();
        let r = find_roots(&zeta0(), &m, None).unwrap();
        assert!((r.r_minus - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-14);
        assert!((r.r_plus - (2.0 + 2f64.sqrt()).sqrt()).abs() < 1e-14);
        assert!(r.dp_minus > 0.0 && r.dp_plus < 0.0);
        // P_W(√2) = 2·(2E − ω·2 − κ²/2) = 1
        assert!((zeta0().p_of_r(&m, 2f64.sqrt()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_energy_has_no_roots() {
        let pt = WhithamPoint {
            h: -50.0,
            ..zeta0()
        };
        assert_eq!(
            find_roots(&pt, &PotentialModel::cubic(), None),
            Err(Error::NoRoots)
        );
    }

    #[test]
    fn dark_soliton_limit_is_degenerate() {
        // s·P_lin = ½(s − ½)(s − 2)²: double root at the upper turning point.
        let lp = LinearPoint::new(1.5, 1.0, 2.25, -1.0);
        let pt = WhithamPoint::from_linear(&lp, 0.0, 0.0);
        let m = PotentialModel::cubic();
        assert!(matches!(
            find_roots(&pt, &m, None),
            Err(Error::DegenerateRoot(_))
        ));
        let check = validate_omega(&pt, &m, None);
        assert!(!check.pass);
        assert!(check.reason.unwrap().contains("soliton limit"));
    }

    #[test]
    fn omega_check_rejects_negative_j() {
        let pt = WhithamPoint { j: -1.0, ..zeta0() };
        let check = validate_omega(&pt, &PotentialModel::cubic(), None);
        assert!(!check.pass);
        assert_eq!(check.reason.as_deref(), Some("kappa>0 violated"));
        assert!(validate_omega(&zeta0(), &PotentialModel::cubic(), None).pass);
    }

    #[test]
    fn two_wells_need_an_index() {
        // s·P_lin(s) = 0.01·(s−1)(s−2)(s−3)(s−4)(s−5): positive on (1,2) and (3,4).
        let m = PotentialModel::polynomial(vec![-1.7, 0.45, -0.04]);
        let lp = LinearPoint::new(1.37, 1.2f64.sqrt(), 2.25, 1.0);
        let pt = WhithamPoint::from_linear(&lp, 0.0, 0.0);
        assert_eq!(
            find_roots(&pt, &m, None),
            Err(Error::MultipleWells { count: 2 })
        );
        let lower = find_roots(&pt, &m, Some(0)).unwrap();
        let upper = find_roots(&pt, &m, Some(1)).unwrap();
        assert!((lower.r_minus - 1.0).abs() < 1e-12 && (lower.r_plus - 2f64.sqrt()).abs() < 1e-12);
        assert!((upper.r_minus - 3f64.sqrt()).abs() < 1e-12 && (upper.r_plus - 2.0).abs() < 1e-12);
        assert!(matches!(
            find_roots(&pt, &m, Some(2)),
            Err(Error::WellIndex { .. })
        ));
    }

    #[test]
    fn zeta0_profile_period_and_turning_points() {
        let m = PotentialModel::cubic();
        let prof = profile(&zeta0(), &m, 256, None).unwrap();
        assert!((prof.period - std::f64::consts::PI * 2f64.sqrt()).abs() < 1e-12);
        let first = prof.samples[0];
        assert!((first.a - prof.roots.r_minus).abs() < 1e-8 * prof.roots.r_minus);
        let mid = prof.samples[128];
        assert!((mid.a - prof.roots.r_plus).abs() < 1e-8 * prof.roots.r_plus);
        for s in &prof.samples {
            assert!((s.s_y * s.a * s.a - 1.0).abs() < 1e-12);
        }
    }
}
