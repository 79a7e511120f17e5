//! The quartic normal form `det(λ²M² + λμM¹ + μ²M⁰) = 0` for the four spectral
//! bands leaving the origin, assembled from either coordinate system.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::{ActionJet, KJet};
use crate::brackets::{sigma_tolerance, BracketSet, LinearBrackets};
use crate::error::{Error, Result};
use crate::numeric::{canonical_order, horner_with_derivative, poly_roots};
use crate::wave::{LinearPoint, WhithamPoint};

/// Symmetric 2×2 matrices `M²`, `M¹`, `M⁰` stored as `(a_i, b_i, d_i)`.
///
/// Entries of `M¹` are purely imaginary and those of `M²`, `M⁰` real for the
/// physical assemblies; complex storage keeps the algebra uniform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPencil {
    pub a2: Complex64,
    pub b2: Complex64,
    pub d2: Complex64,
    pub a1: Complex64,
    pub b1: Complex64,
    pub d1: Complex64,
    pub a0: Complex64,
    pub b0: Complex64,
    pub d0: Complex64,
}

pub const ENTRY_NAMES: [&str; 9] = ["a2", "b2", "d2", "a1", "b1", "d1", "a0", "b0", "d0"];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

impl QuadraticPencil {
    /// Pencil with real `M²`, `M⁰` given as `[a, b, d]` and `M¹ = 0`.
    pub fn real(m2: [f64; 3], m0: [f64; 3]) -> Self {
        QuadraticPencil {
            a2: re(m2[0]),
            b2: re(m2[1]),
            d2: re(m2[2]),
            a1: re(0.0),
            b1: re(0.0),
            d1: re(0.0),
            a0: re(m0[0]),
            b0: re(m0[1]),
            d0: re(m0[2]),
        }
    }

    pub fn entries(&self) -> [Complex64; 9] {
        [
            self.a2, self.b2, self.d2, self.a1, self.b1, self.d1, self.a0, self.b0, self.d0,
        ]
    }

    pub fn det_m2(&self) -> Complex64 {
        self.a2 * self.d2 - self.b2 * self.b2
    }

    /// Coefficients of `det(λ²M² + λμM¹ + μ²M⁰)` in λ, highest degree first.
    pub fn quartic(&self, mu: f64) -> [Complex64; 5] {
        let (a2, b2, d2, a1, b1, d1, a0, b0, d0) = (
            self.a2, self.b2, self.d2, self.a1, self.b1, self.d1, self.a0, self.b0, self.d0,
        );
        let two = 2.0;
        [
            a2 * d2 - b2 * b2,
            (a2 * d1 + a1 * d2 - b2 * b1 * two) * mu,
            (a2 * d0 + a1 * d1 + a0 * d2 - b1 * b1 - b2 * b0 * two) * mu.powi(2),
            (a1 * d0 + a0 * d1 - b1 * b0 * two) * mu.powi(3),
            (a0 * d0 - b0 * b0) * mu.powi(4),
        ]
    }
}

/// Pencil from the Whitham-coordinate jet and the starred brackets.
pub fn assemble_whitham_pencil(
    jet: &ActionJet,
    br: &BracketSet,
    pt: &WhithamPoint,
) -> Result<QuadraticPencil> {
    let residual = jet.w_j.abs();
    if residual > 1e-8 * jet.eta_star.abs().max(1.0) {
        return Err(Error::UnconstrainedPoint { residual });
    }
    if br.sigma_star.abs() <= sigma_tolerance(jet, pt) {
        return Err(Error::NonGeneric(format!(
            "sigma* = {:.3e} vanishes",
            br.sigma_star
        )));
    }
    let (s, rho, g, nu, tau) = (
        br.sigma_star,
        br.rho_star,
        br.gamma_big,
        br.nu_star,
        br.tau_star,
    );
    let wh = jet.w_h;
    let b = pt.shift();
    let c = PI.powi(5);
    let p = |e: i32| 2f64.powi(e) * c * s;
    let x = g * jet.m_star_h + rho * jet.m_star_j + s * jet.m_star_gamma;
    Ok(QuadraticPencil {
        a2: re(p(16) * x),
        b2: re(p(15) * rho * wh),
        d2: re(-p(15) * (nu * wh + s * jet.m_star)),
        a1: im(-p(17) * rho * wh),
        b1: im(p(16) * wh * (nu - g - b * rho)),
        d1: im(p(16) * wh * (2.0 * tau + 2.0 * b * nu + pt.j * s)),
        a0: re(p(17) * nu * wh),
        b0: re(p(17) * wh * (tau + b * nu)),
        d0: re(p(16) * wh * (4.0 * tau * b + 2.0 * nu * b * b - wh * jet.w_jj)),
    })
}

/// Pencil from the classical-action jet in linear coordinates.
pub fn assemble_linear_pencil(
    kj: &KJet,
    lb: &LinearBrackets,
    lp: &LinearPoint,
) -> Result<QuadraticPencil> {
    let tol = 1e-8 * ((kj.t_e * kj.eta_kappa).abs() + (kj.t_kappa * kj.eta_e).abs());
    if lb.sigma.abs() <= tol {
        return Err(Error::NonGeneric(format!(
            "sigma = {:.3e} vanishes",
            lb.sigma
        )));
    }
    let (s, rho, g, nu, tau, xi) = (lb.sigma, lb.rho, lb.gamma, lb.nu, lb.tau, lb.xi);
    let t = kj.t_star;
    Ok(QuadraticPencil {
        a2: re(-0.5 * s * (g * kj.m_e + rho * kj.m_kappa + s * kj.m_omega)),
        b2: re(-0.5 * s * rho * t),
        d2: re(-0.5 * s * (nu * t + 0.5 * s * kj.m)),
        a1: im(2.0 * s * rho * t),
        b1: im(s * t * (nu + g)),
        d1: im(s * t * (2.0 * tau + s * lp.kappa)),
        a0: re(2.0 * s * nu * t),
        b0: re(2.0 * s * tau * t),
        d0: re(2.0 * s * t * (lp.omega * g + lp.zeta * xi - lp.e * s)),
    })
}

/// The printed alternative for `b₂` in Whitham variables, `−2¹⁶σ*(τ*M*_H + ν*M*_J)`.
pub fn b2_alternate_whitham(jet: &ActionJet, br: &BracketSet) -> f64 {
    -2f64.powi(16) * br.sigma_star * (br.tau_star * jet.m_star_h + br.nu_star * jet.m_star_j)
}

/// The printed alternative for `b₂` in linear variables, `−σ(τM_E + νM_κ)`.
pub fn b2_alternate_linear(kj: &KJet, lb: &LinearBrackets) -> f64 {
    -lb.sigma * (lb.tau * kj.m_e + lb.nu * kj.m_kappa)
}

/// Four ratios `r = λ/μ` with their normalised quartic residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormRoots {
    pub ratios: [Complex64; 4],
    pub residuals: [f64; 4],
}

impl NormalFormRoots {
    pub fn max_modulus(&self) -> f64 {
        self.ratios.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_re(&self) -> f64 {
        self.ratios.iter().map(|r| r.re.abs()).fold(0.0, f64::max)
    }
}

pub fn solve_pencil(p: &QuadraticPencil) -> Result<NormalFormRoots> {
    solve_pencil_at(p, 1.0)
}

/// Roots λ of the quartic at a given μ; at μ = 1 these are the ratios.
pub fn solve_pencil_at(p: &QuadraticPencil, mu: f64) -> Result<NormalFormRoots> {
    let coeffs = p.quartic(mu);
    let lead = coeffs[0].norm();
    let scale = (p.a2 * p.d2).norm() + p.b2.norm_sqr();
    if !(lead > 1e-10 * scale) {
        return Err(Error::DegeneratePencil(lead));
    }
    let mut roots = poly_roots(&coeffs, 2)
        .ok_or_else(|| Error::EigenFailure("companion matrix of the quartic".into()))?;
    canonical_order(&mut roots);
    let ratios: [Complex64; 4] = roots.try_into().expect("quartic has four roots");
    let residuals = ratios.map(|r| {
        let (v, _) = horner_with_derivative(&coeffs, r);
        let size: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * r.norm().powi(4 - k as i32))
            .sum();
        v.norm() / size.max(f64::MIN_POSITIVE)
    });
    Ok(NormalFormRoots { ratios, residuals })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: StabilityVerdict,
    pub max_re: f64,
    pub tol: f64,
}

/// Three-way verdict from a deviation measure: above `tol` is a violation,
/// below `tol/10` is clean, in between is marginal.
pub(crate) fn grade(deviation: f64, tol: f64) -> StabilityVerdict {
    if deviation > tol {
        StabilityVerdict::Unstable
    } else if deviation < 0.1 * tol {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Marginal
    }
}

/// Modulational instability iff some ratio leaves the imaginary axis.
pub fn classify(roots: &NormalFormRoots, tol: f64) -> Classification {
    let max_re = roots.max_abs_re();
    Classification {
        verdict: grade(max_re, tol),
        max_re,
        tol,
    }
}

/// Default tolerance `rel · max_j |r_j|`.
pub fn stability_tolerance(roots: &NormalFormRoots, rel: f64) -> f64 {
    rel * roots.max_modulus()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_pencil_is_stable() {
        let p = QuadraticPencil::real([1.0, 0.0, 1.0], [1.0, 0.0, 1.0]);
        let roots = solve_pencil(&p).unwrap();
        let expect = [c(0.0, -1.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 1.0)];
        for (r, e) in roots.ratios.iter().zip(expect) {
            assert!((r - e).norm() < 1e-7, "{r}");
        }
        let tol = stability_tolerance(&roots, 1e-6);
        assert_eq!(classify(&roots, tol).verdict, StabilityVerdict::Stable);
    }

    #[test]
    fn flipped_pencil_is_unstable() {
        let p = QuadraticPencil::real([1.0, 0.0, 1.0], [-1.0, 0.0, -1.0]);
        let roots = solve_pencil(&p).unwrap();
        for (r, e) in roots.ratios.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((r - c(e, 0.0)).norm() < 1e-7);
        }
        assert_eq!(classify(&roots, 1e-6).verdict, StabilityVerdict::Unstable);
    }

    #[test]
    fn classification_thresholds() {
        let stable = NormalFormRoots {
            ratios: [c(0.0, 1.0), c(0.0, -1.0), c(0.0, 2.0), c(0.0, -2.0)],
            residuals: [0.0; 4],
        };
        assert_eq!(classify(&stable, 1e-6).verdict, StabilityVerdict::Stable);
        let unstable = NormalFormRoots {
            ratios: [c(0.3, 1.0), c(0.3, -1.0), c(-0.3, 1.0), c(-0.3, -1.0)],
            residuals: [0.0; 4],
        };
        assert_eq!(
            classify(&unstable, 1e-6).verdict,
            StabilityVerdict::Unstable
        );
        let marginal = NormalFormRoots {
            ratios: [c(5e-7, 1.0), c(0.0, -1.0), c(0.0, 2.0), c(0.0, -2.0)],
            residuals: [0.0; 4],
        };
        assert_eq!(
            classify(&marginal, 1e-6).verdict,
            StabilityVerdict::Marginal
        );
    }

    #[test]
    fn singular_leading_matrix_is_rejected() {
        let p = QuadraticPencil::real([1.0, 1.0, 1.0], [1.0, 0.0, 1.0]);
        assert!(matches!(solve_pencil(&p), Err(Error::DegeneratePencil(_))));
    }

    #[test]
    fn quartic_is_homogeneous() {
        let p = QuadraticPencil {
            a2: c(2.0, 0.0),
            b2: c(0.3, 0.0),
            d2: c(-1.0, 0.0),
            a1: c(0.0, 0.7),
            b1: c(0.0, -0.2),
            d1: c(0.0, 0.4),
            a0: c(1.5, 0.0),
            b0: c(0.1, 0.0),
            d0: c(0.8, 0.0),
        };
        let one = solve_pencil_at(&p, 1.0).unwrap();
        let half = solve_pencil_at(&p, 0.5).unwrap();
        for (a, b) in one.ratios.iter().zip(half.ratios.iter()) {
            assert!((a * 0.5 - b).norm() < 1e-12);
        }
    }
}
