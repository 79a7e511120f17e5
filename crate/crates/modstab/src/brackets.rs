//! Poisson-bracket combinations of the action derivatives, the genericity
//! determinant `D`, and algebraic identity checks.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::action::{ActionJet, KJet};
use crate::normal_form::QuadraticPencil;
use crate::numeric::{dot2, rel_diff};
use crate::wave::WhithamPoint;

/// `{P, Q}_{w,x} = P_w Q_x − P_x Q_w`, given `p = (P_w, P_x)` and `q = (Q_w, Q_x)`.
pub fn poisson(p: (f64, f64), q: (f64, f64)) -> f64 {
    dot2(&[(p.0, q.1), (-p.1, q.0)])
}

/// Bracket quantities of the linearised spectral problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBrackets {
    pub sigma: f64,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    pub tau: f64,
    pub xi: f64,
    pub chi: f64,
}

/// Starred (Whitham-side) brackets with their linear-theory images.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketSet {
    pub sigma_star: f64,
    pub rho_star: f64,
    #[serde(rename = "Gamma")]
    pub gamma_big: f64,
    pub nu_star: f64,
    pub tau_star: f64,
    pub xi_star: f64,
    pub chi_star: f64,
    /// `{W_H, W_γ*}_{J,γ*}`.
    pub aux_j_gamma: f64,
    /// `{W_H, W_γ*}_{H,γ*}`.
    pub aux_h_gamma: f64,
    pub linear: LinearBrackets,
}

pub fn compute_brackets(jet: &ActionJet, pt: &WhithamPoint) -> BracketSet {
    let hj = jet.w_hj;
    let sigma_star = poisson((hj, jet.w_hh), (jet.w_jj, hj));
    let rho_star = poisson((jet.w_hh, hj), (jet.m_star_h, jet.m_star_j));
    let gamma_big = poisson((jet.m_star_h, jet.m_star_j), (hj, jet.w_jj));
    let nu_star = -0.5 * jet.w_h * jet.w_hh;
    let tau_star = 0.5 * jet.w_h * hj;
    let xi_star = poisson((jet.w_hzeta, hj), (jet.w_jzeta, jet.w_jj));
    let chi_star = poisson((jet.w_hh, jet.w_hzeta), (hj, jet.w_jzeta));
    let aux_j_gamma = poisson((hj, jet.m_star_h), (jet.m_star_j, jet.m_star_gamma));
    let aux_h_gamma = poisson((jet.w_hh, jet.m_star_h), (jet.m_star_h, jet.m_star_gamma));

    let b = pt.shift();
    let s = 64.0 * PI * PI;
    let linear = LinearBrackets {
        sigma: 4.0 * s * sigma_star,
        rho: -s * rho_star,
        gamma: -s * (gamma_big + b * rho_star),
        nu: s * nu_star,
        tau: s * (tau_star + b * nu_star),
        xi: s * (xi_star + b * chi_star),
        chi: s * chi_star,
    };
    BracketSet {
        sigma_star,
        rho_star,
        gamma_big,
        nu_star,
        tau_star,
        xi_star,
        chi_star,
        aux_j_gamma,
        aux_h_gamma,
        linear,
    }
}

/// Brackets evaluated directly from the classical-action jet.
pub fn linear_brackets(kj: &KJet) -> LinearBrackets {
    let te = (kj.t_e, kj.eta_e);
    let tk = (kj.t_kappa, kj.eta_kappa);
    let tw = (kj.t_omega, kj.eta_omega);
    let tz = (kj.t_zeta, kj.eta_zeta);
    // {T, η}_{w,x} = T_w η_x − T_x η_w
    let br = |w: (f64, f64), x: (f64, f64)| poisson((w.0, x.0), (w.1, x.1));
    LinearBrackets {
        sigma: br(te, tk),
        gamma: br(tk, tw),
        rho: br(tw, te),
        tau: 0.5 * kj.t_star * kj.t_kappa,
        nu: -0.5 * kj.t_star * kj.t_e,
        xi: br(tk, tz),
        chi: br(tz, te),
    }
}

/// Bordered Hessian of K in the ordering (κ, E, ω, ∗); its determinant is D.
pub fn bordered_hessian(kj: &KJet) -> Matrix4<f64> {
    bordered(
        kj.k_kappakappa(),
        -kj.eta_e,
        kj.k_kappaomega(),
        kj.k_ee(),
        kj.k_eomega(),
        kj.k_omegaomega(),
        kj.t_star,
        kj.m,
    )
}

/// The same matrix with every entry mapped from the Whitham jet.
pub fn bordered_hessian_from_jet(jet: &ActionJet, pt: &WhithamPoint) -> Matrix4<f64> {
    let b = pt.shift();
    bordered(
        -16.0 * PI * (jet.eta_star_j - b * jet.eta_star_h),
        -16.0 * PI * jet.eta_star_h,
        4.0 * PI * jet.eta_star_gamma,
        16.0 * PI * jet.w_hh,
        -4.0 * PI * jet.m_star_h,
        PI * jet.m_star_gamma,
        4.0 * PI * jet.w_h,
        2.0 * PI * jet.m_star,
    )
}

#[allow(clippy::too_many_arguments)]
fn bordered(kk: f64, ke: f64, kw: f64, ee: f64, ew: f64, ww: f64, t: f64, m: f64) -> Matrix4<f64> {
    Matrix4::new(
        kk, ke, kw, t, ke, ee, ew, 0.0, kw, ew, ww, 0.0, t, 0.0, 0.0, -m,
    )
}

/// `D` from the closed expression `2⁹π⁴(M*X − W_H²/2 · {W_H, W_γ*}_{H,γ*})`.
pub fn d_from_brackets(jet: &ActionJet, br: &BracketSet) -> f64 {
    let x = dot2(&[
        (br.gamma_big, jet.m_star_h),
        (br.rho_star, jet.m_star_j),
        (br.sigma_star, jet.m_star_gamma),
    ]);
    2f64.powi(9) * PI.powi(4) * dot2(&[(jet.m_star, x), (-0.5 * jet.w_h * jet.w_h, br.aux_h_gamma)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub sigma: f64,
    pub sigma_star: f64,
    /// Determinant of the bordered Hessian.
    #[serde(rename = "D")]
    pub d: f64,
    /// Closed bracket expression.
    #[serde(rename = "D_alt1")]
    pub d_alt1: f64,
    /// From the leading pencil matrix, `−4(a₂d₂ − b₂²)/σ³`.
    #[serde(rename = "D_alt2")]
    pub d_alt2: f64,
    pub tol_sigma: f64,
    pub tol_d: f64,
    /// Largest pairwise relative difference of the three D values.
    pub d_agreement: f64,
    pub pass: bool,
}

/// Relative floor for `σ*` and `D` to count as non-zero.
const GENERIC_TOL: f64 = 1e-8;

/// `|σ*|` is judged against the size of its two terms, `W_HJ² + |W_HH W_JJ|`,
/// plus the same products with `W_HH` replaced by its natural size `W_H/s`.
/// The extra terms keep the floor honest where the period is independent of
/// `H` and `J` (`ζ = 0`), so that `W_HH` and `W_HJ` vanish together with `σ*`.
pub(crate) fn sigma_tolerance(jet: &ActionJet, pt: &WhithamPoint) -> f64 {
    let s = pt.degeneracy_scale();
    let natural = jet.w_h.abs() / s;
    GENERIC_TOL
        * (jet.w_hj * jet.w_hj + (jet.w_hh * jet.w_jj).abs() + natural * (natural + jet.w_jj.abs()))
}

/// Genericity conditions `σ ≠ 0`, `D ≠ 0`, with D computed three independent ways.
///
/// With `kjet` present the bordered Hessian is taken from the linear-coordinate
/// jet, making the first D value fully independent of the Whitham jet.
pub fn genericity(
    jet: &ActionJet,
    br: &BracketSet,
    pt: &WhithamPoint,
    pencil: &QuadraticPencil,
    kjet: Option<&KJet>,
) -> GenericityReport {
    let d = match kjet {
        Some(kj) => bordered_hessian(kj).determinant(),
        None => bordered_hessian_from_jet(jet, pt).determinant(),
    };
    let d_alt1 = d_from_brackets(jet, br);
    let sigma = br.linear.sigma;
    let lead = pencil.a2.re * pencil.d2.re - pencil.b2.re * pencil.b2.re;
    let d_alt2 = -4.0 * lead / sigma.powi(3);

    let tol_sigma = sigma_tolerance(jet, pt);
    let scale_d = 2f64.powi(9)
        * PI.powi(4)
        * (jet.m_star.abs()
            * ((br.gamma_big * jet.m_star_h).abs()
                + (br.rho_star * jet.m_star_j).abs()
                + (br.sigma_star * jet.m_star_gamma).abs())
            + 0.5
                * jet.w_h
                * jet.w_h
                * ((jet.w_hh * jet.m_star_gamma).abs() + jet.m_star_h * jet.m_star_h));
    let tol_d = GENERIC_TOL * scale_d;
    let d_agreement = [
        rel_diff(d, d_alt1),
        rel_diff(d, d_alt2),
        rel_diff(d_alt1, d_alt2),
    ]
    .into_iter()
    .fold(
        0.0,
        |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) },
    );
    let pass = br.sigma_star.abs() > tol_sigma && d.abs() > tol_d && d_agreement < 1e-6;
    GenericityReport {
        sigma,
        sigma_star: br.sigma_star,
        d,
        d_alt1,
        d_alt2,
        tol_sigma,
        tol_d,
        d_agreement,
        pass,
    }
}

/// A value carried together with the magnitude bound of everything summed
/// into it, so identity residuals can be normalised by their condition.
#[derive(Clone, Copy, Debug)]
struct Tracked {
    v: f64,
    a: f64,
}

fn leaf(v: f64) -> Tracked {
    Tracked { v, a: v.abs() }
}

impl Add for Tracked {
    type Output = Tracked;
    fn add(self, o: Tracked) -> Tracked {
        Tracked {
            v: self.v + o.v,
            a: self.a + o.a,
        }
    }
}

impl Sub for Tracked {
    type Output = Tracked;
    fn sub(self, o: Tracked) -> Tracked {
        Tracked {
            v: self.v - o.v,
            a: self.a + o.a,
        }
    }
}

impl Mul for Tracked {
    type Output = Tracked;
    fn mul(self, o: Tracked) -> Tracked {
        Tracked {
            v: self.v * o.v,
            a: self.a * o.a,
        }
    }
}

impl Mul<f64> for Tracked {
    type Output = Tracked;
    fn mul(self, c: f64) -> Tracked {
        Tracked {
            v: self.v * c,
            a: self.a * c.abs(),
        }
    }
}

impl Neg for Tracked {
    type Output = Tracked;
    fn neg(self) -> Tracked {
        Tracked {
            v: -self.v,
            a: self.a,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: &'static str,
    pub residual: f64,
}

fn residual(name: &'static str, lhs: Tracked, rhs: Tracked) -> NamedResidual {
    let d = lhs - rhs;
    let residual = if d.a == 0.0 { 0.0 } else { d.v.abs() / d.a };
    NamedResidual { name, residual }
}

/// Six algebraic identities linking the brackets to the jet entries. They hold
/// for any symmetric set of second derivatives, so the residuals expose
/// assembly errors rather than quadrature error.
pub fn identity_suite(jet: &ActionJet, br: &BracketSet) -> Vec<NamedResidual> {
    let (s, r, g, nu, tau) = (
        leaf(br.sigma_star),
        leaf(br.rho_star),
        leaf(br.gamma_big),
        leaf(br.nu_star),
        leaf(br.tau_star),
    );
    let (wh, hj, jj) = (leaf(jet.w_h), leaf(jet.w_hj), leaf(jet.w_jj));
    let (mh, mj, mg) = (
        leaf(jet.m_star_h),
        leaf(jet.m_star_j),
        leaf(jet.m_star_gamma),
    );
    let aux = leaf(br.aux_j_gamma);
    vec![
        residual("i", s * aux - r * g, hj * (g * mh + r * mj + s * mg)),
        residual("ii", s * wh * mh * 0.5 - nu * g, -(tau * r)),
        residual(
            "iii",
            wh * wh * s * 0.5 - nu * wh * jj + tau * tau * 2.0,
            tau * tau * 4.0,
        ),
        residual(
            "iv",
            tau * g * 2.0 - wh * jj * r - wh * mj * s,
            tau * g * 4.0,
        ),
        residual("v", s * mj + r * jj, -(hj * g)),
        residual("vi", s * wh * mh - nu * g * 2.0, -(tau * r * 2.0)),
    ]
}

/// The two ζ-identities that hold on the dispersion manifold `W_J = 0`:
///
/// `W_H η*_J = −σ*(2H + βJ + UJ/2) − 2Γω + 2ζξ*` and
/// `W_H η*_H = 2ρ*ω + Jσ* − 2ζχ*`.
pub fn zeta_identities(jet: &ActionJet, br: &BracketSet, pt: &WhithamPoint) -> [NamedResidual; 2] {
    let omega = pt.omega();
    let first = residual(
        "eta_J",
        leaf(jet.w_h) * leaf(jet.eta_star_j),
        -(leaf(br.sigma_star) * leaf(pt.h + pt.energy())) - leaf(br.gamma_big) * leaf(omega) * 2.0
            + leaf(pt.zeta) * leaf(br.xi_star) * 2.0,
    );
    let second = residual(
        "eta_H",
        leaf(jet.w_h) * leaf(jet.eta_star_h),
        leaf(br.rho_star) * leaf(omega) * 2.0 + leaf(pt.j) * leaf(br.sigma_star)
            - leaf(pt.zeta) * leaf(br.chi_star) * 2.0,
    );
    [first, second]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_antisymmetry() {
        let p = (1.3, -0.7);
        let q = (2.9, 0.4);
        assert_eq!(poisson(p, p), 0.0);
        assert_eq!(poisson(p, q), -poisson(q, p));
    }
}
