//! The averaged action `W` and the classical action `K`, with the derivative
//! jets the rest of the pipeline consumes.
//!
//! Every first derivative is a quadrature of a kernel against `dR/√P`; the
//! substitution `R = R₋cos²θ + R₊sin²θ` turns each into a smooth periodic
//! integrand on `[0, π/2]`. Second derivatives come from differentiating those
//! smooth functions of the parameters, never from differentiating under the
//! integral sign.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot2, rel_diff, theta_rule};
use crate::potential::PotentialModel;
use crate::scalar::Scalar;
use crate::settings::{ComplexStep, Settings};
use crate::wave::{find_linear_roots, find_roots, LinearPoint, RootBracket, Well, WhithamPoint};

/// `√2/π`, the prefactor of every Whitham-side loop integral.
const K_W: f64 = SQRT_2 / PI;
const COMPLEX_STEP: f64 = 1e-20;

/// Integrands available through [`quadrature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// √P, giving W.
    SqrtP,
    /// 1/√P, giving 2W_H.
    InvSqrtP,
    /// J/(8R²√P), giving η*.
    Eta,
    /// R²/√P, giving M*.
    R2,
    /// F(R²)/√P, giving −W_ζ.
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    FiniteDifference,
    ComplexStep,
}

/// Raw loop integrals `∫ k(R) dR` over the well.
#[derive(Clone, Copy, Debug)]
struct Moments<S> {
    sqrt_p: S,
    inv: S,
    inv_r2: S,
    r2: S,
    big_f: S,
}

impl Moments<f64> {
    fn max_rel_change(&self, other: &Self) -> f64 {
        [
            rel_diff(self.sqrt_p, other.sqrt_p),
            rel_diff(self.inv, other.inv),
            rel_diff(self.inv_r2, other.inv_r2),
            rel_diff(self.r2, other.r2),
            rel_diff(self.big_f, other.big_f),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn moments<S: Scalar>(
    well: &Well<S>,
    model: &PotentialModel,
    rm: S,
    rp: S,
    order: usize,
) -> Moments<S> {
    let zero = S::from_f64(0.0);
    let mut m = Moments {
        sqrt_p: zero,
        inv: zero,
        inv_r2: zero,
        r2: zero,
        big_f: zero,
    };
    let width = rp - rm;
    for &(theta, w) in theta_rule(order).iter() {
        let (sn, cs) = theta.sin_cos();
        let r = rm * (cs * cs) + rp * (sn * sn);
        let q = well.q(model, r, rm, rp);
        let sq = q.sqrt();
        // dR/√P = 2 dθ/√q and √P dR = 2 (R₊−R₋)² sin²θ cos²θ √q dθ.
        let base = sq.recip() * (2.0 * w);
        let s = r * r;
        m.sqrt_p = m.sqrt_p + width * width * sq * (2.0 * w * sn * sn * cs * cs);
        m.inv = m.inv + base;
        m.inv_r2 = m.inv_r2 + base / s;
        m.r2 = m.r2 + base * s;
        m.big_f = m.big_f + base * model.big_f(s);
    }
    m
}

/// Follow a simple root of the base well to a nearby (possibly complexified) well.
fn track_root<S: Scalar>(well: &Well<S>, model: &PotentialModel, r0: f64) -> Result<S> {
    let mut r = S::from_f64(r0);
    for _ in 0..30 {
        let step = well.p(model, r) / well.dp(model, r);
        r = r - step;
        if !(r.re().is_finite()) || r.re() <= 0.0 {
            break;
        }
        if step.abs() <= 1e-15 * r.abs() {
            return Ok(r);
        }
    }
    Err(Error::LeftOmega(format!(
        "turning point near R = {r0} lost under perturbation"
    )))
}

fn tracked_moments<S: Scalar>(
    well: &Well<S>,
    model: &PotentialModel,
    base: &RootBracket,
    order: usize,
) -> Result<Moments<S>> {
    let rm = track_root(well, model, base.r_minus)?;
    let rp = track_root(well, model, base.r_plus)?;
    if !(rm.re() > 0.0 && rp.re() > rm.re()) {
        return Err(Error::LeftOmega(
            "turning points crossed under perturbation".into(),
        ));
    }
    Ok(moments(well, model, rm, rp, order))
}

fn resolve_method(settings: &Settings, model: &PotentialModel) -> Result<DerivativeMethod> {
    match (settings.use_complex_step, model.analytic_in_s()) {
        (ComplexStep::Off, _) | (ComplexStep::Auto, false) => {
            Ok(DerivativeMethod::FiniteDifference)
        }
        (ComplexStep::Auto, true) | (ComplexStep::On, true) => Ok(DerivativeMethod::ComplexStep),
        (ComplexStep::On, false) => Err(Error::Config(format!(
            "use_complex_step = on requires an analytic model; '{}' is not",
            model.name()
        ))),
    }
}

/// Differentiate a vector-valued function of four parameters along each axis.
fn jacobian<const N: usize>(
    p: [f64; 4],
    method: DerivativeMethod,
    fd_scale: f64,
    real: &dyn Fn([f64; 4]) -> Result<[f64; N]>,
    complex: &dyn Fn([Complex64; 4]) -> Result<[Complex64; N]>,
) -> Result<[[f64; N]; 4]> {
    let mut out = [[0.0; N]; 4];
    for (axis, col) in out.iter_mut().enumerate() {
        match method {
            DerivativeMethod::ComplexStep => {
                let mut z = p.map(|x| Complex64::new(x, 0.0));
                z[axis].im = COMPLEX_STEP;
                let v = complex(z)?;
                for (c, vi) in col.iter_mut().zip(v) {
                    *c = vi.im / COMPLEX_STEP;
                }
            }
            DerivativeMethod::FiniteDifference => {
                let h = fd_scale.sqrt() * p[axis].abs().max(1.0);
                let central = |h: f64| -> Result<[f64; N]> {
                    let (mut plus, mut minus) = (p, p);
                    plus[axis] += h;
                    minus[axis] -= h;
                    let (a, b) = (real(plus)?, real(minus)?);
                    Ok(std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * h)))
                };
                let (coarse, fine) = (central(h)?, central(0.5 * h)?);
                for i in 0..N {
                    col[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
                }
            }
        }
    }
    Ok(out)
}

/// Whitham-side first-derivative vector `[W, W_H, W_J, η*, M*, W_ζ]` at `(H, J, γ*, ζ)`.
fn whitham_vector<S: Scalar>(
    p: [S; 4],
    u: f64,
    beta: f64,
    model: &PotentialModel,
    base: &RootBracket,
    order: usize,
) -> Result<[S; 6]> {
    let [h, j, gamma, zeta] = p;
    let omega = -gamma + (beta * u + 0.25 * u * u);
    let well = Well {
        c0: h + j * (beta + 0.5 * u),
        a: omega * 2.0,
        b: j * j / 8.0,
        z: zeta * 2.0,
    };
    let m = tracked_moments(&well, model, base, order)?;
    Ok(whitham_from_moments(&m, j, beta + 0.5 * u))
}

fn whitham_from_moments<S: Scalar>(m: &Moments<S>, j: S, shift: f64) -> [S; 6] {
    let w = m.sqrt_p * K_W;
    let w_h = m.inv * (0.5 * K_W);
    let eta = j * m.inv_r2 * (K_W / 8.0);
    let m_star = m.r2 * K_W;
    let w_zeta = -(m.big_f * K_W);
    let w_j = w_h * shift - eta;
    [w, w_h, w_j, eta, m_star, w_zeta]
}

/// `∂W/∂p` obtained by differentiating the W quadrature itself, for cross-checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionGradient {
    pub h: f64,
    pub j: f64,
    pub gamma_star: f64,
    pub zeta: f64,
}

/// `W`, its first derivatives, and the second derivatives used downstream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionJet {
    pub w: f64,
    pub w_h: f64,
    pub w_j: f64,
    pub w_u: f64,
    pub w_beta: f64,
    pub w_zeta: f64,
    pub eta_star: f64,
    pub m_star: f64,
    /// ∂_J W_H.
    pub w_hj: f64,
    /// ∂_H W_J; equals `w_hj` up to differentiation error.
    pub w_jh: f64,
    pub w_hh: f64,
    pub w_jj: f64,
    pub m_star_h: f64,
    pub m_star_j: f64,
    pub m_star_gamma: f64,
    pub eta_star_h: f64,
    pub eta_star_j: f64,
    pub eta_star_gamma: f64,
    pub w_hzeta: f64,
    pub w_jzeta: f64,
    pub w_gradient: ActionGradient,
    pub roots: RootBracket,
    pub quad_order: usize,
    /// Largest relative change of any loop integral when the rule is doubled.
    pub quad_rel_change: f64,
    pub fd_scale: f64,
    pub method: DerivativeMethod,
}

impl ActionJet {
    /// Wavenumber from the dispersion relation `k = 1/(2W_H)`.
    pub fn wavenumber(&self) -> f64 {
        0.5 / self.w_h
    }

    pub fn period(&self) -> f64 {
        4.0 * PI * self.w_h
    }
}

fn check_convergence(
    coarse: &Moments<f64>,
    fine: &Moments<f64>,
    settings: &Settings,
) -> Result<f64> {
    let rel = coarse.max_rel_change(fine);
    if settings.check_convergence && !(rel <= 1e-10) {
        return Err(Error::QuadratureNotConverged { rel });
    }
    Ok(rel)
}

/// `(√2/π)∫ kernel dR` over the well at `pt`.
pub fn quadrature(
    pt: &WhithamPoint,
    model: &PotentialModel,
    kernel: Kernel,
    settings: &Settings,
) -> Result<f64> {
    let roots = find_roots(pt, model, Some(settings.well_index))?;
    let well = pt.well();
    let coarse = moments(
        &well,
        model,
        roots.r_minus,
        roots.r_plus,
        settings.quad_order,
    );
    let fine = moments(
        &well,
        model,
        roots.r_minus,
        roots.r_plus,
        2 * settings.quad_order,
    );
    check_convergence(&coarse, &fine, settings)?;
    let raw = match kernel {
        Kernel::SqrtP => coarse.sqrt_p,
        Kernel::InvSqrtP => coarse.inv,
        Kernel::Eta => pt.j / 8.0 * coarse.inv_r2,
        Kernel::R2 => coarse.r2,
        Kernel::F => coarse.big_f,
    };
    Ok(K_W * raw)
}

fn consistency(what: &'static str, derived: f64, direct: f64, scale: f64) -> Result<()> {
    let rel = (derived - direct).abs() / scale.max(f64::MIN_POSITIVE);
    if (derived - direct).abs() > 1e-6 * scale {
        return Err(Error::JetInconsistent { what, rel });
    }
    Ok(())
}

pub fn action_jet(
    pt: &WhithamPoint,
    model: &PotentialModel,
    settings: &Settings,
) -> Result<ActionJet> {
    let method = resolve_method(settings, model)?;
    let roots = find_roots(pt, model, Some(settings.well_index))?;
    let order = settings.quad_order;
    let well = pt.well();
    let coarse = moments(&well, model, roots.r_minus, roots.r_plus, order);
    let fine = moments(&well, model, roots.r_minus, roots.r_plus, 2 * order);
    let quad_rel_change = check_convergence(&coarse, &fine, settings)?;
    let [w, w_h, w_j, eta_star, m_star, w_zeta] = whitham_from_moments(&coarse, pt.j, pt.shift());

    let (u, beta) = (pt.u, pt.beta);
    let real = |p: [f64; 4]| whitham_vector(p, u, beta, model, &roots, order);
    let complex = |p: [Complex64; 4]| whitham_vector(p, u, beta, model, &roots, order);
    let [dh, dj, dg, dz] = jacobian(
        [pt.h, pt.j, pt.gamma_star, pt.zeta],
        method,
        settings.fd_scale,
        &real,
        &complex,
    )?;

    let w_gradient = ActionGradient {
        h: dh[0],
        j: dj[0],
        gamma_star: dg[0],
        zeta: dz[0],
    };
    consistency("dW/dH vs W_H", w_gradient.h, w_h, w_h.abs())?;
    consistency(
        "dW/dJ vs W_J",
        w_gradient.j,
        w_j,
        (w_h * pt.shift()).abs() + eta_star.abs(),
    )?;
    consistency(
        "dW/dgamma vs M*",
        w_gradient.gamma_star,
        m_star,
        m_star.abs(),
    )?;
    consistency(
        "dW/dzeta vs W_zeta",
        w_gradient.zeta,
        w_zeta,
        w_zeta.abs().max(1e-12 * w.abs()),
    )?;

    let shift = pt.shift();
    Ok(ActionJet {
        w,
        w_h,
        w_j,
        w_u: 0.5 * pt.j * w_h - m_star * shift,
        w_beta: pt.j * w_h - pt.u * m_star,
        w_zeta,
        eta_star,
        m_star,
        w_hj: dj[1],
        w_jh: dh[2],
        w_hh: dh[1],
        w_jj: dj[2],
        m_star_h: dh[4],
        m_star_j: dj[4],
        m_star_gamma: dg[4],
        eta_star_h: dh[3],
        eta_star_j: dj[3],
        eta_star_gamma: dg[3],
        w_hzeta: dz[1],
        w_jzeta: dz[2],
        w_gradient,
        roots,
        quad_order: order,
        quad_rel_change,
        fd_scale: settings.fd_scale,
        method,
    })
}

/// `W_J` with its slopes along `H` and `J`: everything a constraint solve needs,
/// without the full second-derivative jet.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Dispersion {
    pub w_h: f64,
    pub w_j: f64,
    pub eta_star: f64,
    pub d_h: f64,
    pub d_j: f64,
}

pub(crate) fn dispersion(
    pt: &WhithamPoint,
    model: &PotentialModel,
    settings: &Settings,
) -> Result<Dispersion> {
    let method = resolve_method(settings, model)?;
    let roots = find_roots(pt, model, Some(settings.well_index))?;
    let order = settings.quad_order;
    let base = moments(&pt.well(), model, roots.r_minus, roots.r_plus, order);
    let [_, w_h, w_j, eta_star, _, _] = whitham_from_moments(&base, pt.j, pt.shift());
    let (u, beta) = (pt.u, pt.beta);
    let real = |p: [f64; 4]| whitham_vector(p, u, beta, model, &roots, order);
    let complex = |p: [Complex64; 4]| whitham_vector(p, u, beta, model, &roots, order);
    let [dh, dj, _, _] = jacobian(
        [pt.h, pt.j, pt.gamma_star, pt.zeta],
        method,
        settings.fd_scale,
        &real,
        &complex,
    )?;
    Ok(Dispersion {
        w_h,
        w_j,
        eta_star,
        d_h: dh[2],
        d_j: dj[2],
    })
}

/// Classical action `K(E, κ, ω, ζ)` and the derivatives entering the genericity conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KJet {
    pub k: f64,
    pub t_star: f64,
    pub eta: f64,
    pub m: f64,
    pub k_zeta: f64,
    pub t_e: f64,
    pub t_kappa: f64,
    pub t_omega: f64,
    pub t_zeta: f64,
    pub eta_e: f64,
    pub eta_kappa: f64,
    pub eta_omega: f64,
    pub eta_zeta: f64,
    pub m_e: f64,
    pub m_kappa: f64,
    pub m_omega: f64,
    pub m_zeta: f64,
    /// `(K_E, K_κ, K_ω, K_ζ)` by differentiating the K quadrature.
    pub k_gradient: [f64; 4],
    pub roots: RootBracket,
    pub method: DerivativeMethod,
}

impl KJet {
    pub fn k_ee(&self) -> f64 {
        self.t_e
    }
    pub fn k_ekappa(&self) -> f64 {
        self.t_kappa
    }
    pub fn k_eomega(&self) -> f64 {
        self.t_omega
    }
    pub fn k_kappakappa(&self) -> f64 {
        -self.eta_kappa
    }
    pub fn k_kappaomega(&self) -> f64 {
        -self.eta_omega
    }
    pub fn k_omegaomega(&self) -> f64 {
        -0.5 * self.m_omega
    }
}

fn linear_vector<S: Scalar>(
    p: [S; 4],
    model: &PotentialModel,
    base: &RootBracket,
    order: usize,
) -> Result<[S; 5]> {
    let [e, kappa, omega, zeta] = p;
    let well = Well {
        c0: e * 2.0,
        a: omega,
        b: kappa * kappa,
        z: zeta,
    };
    let m = tracked_moments(&well, model, base, order)?;
    Ok(linear_from_moments(&m, kappa))
}

fn linear_from_moments<S: Scalar>(m: &Moments<S>, kappa: S) -> [S; 5] {
    [
        m.sqrt_p * 2.0,
        m.inv * 2.0,
        kappa * m.inv_r2 * 2.0,
        m.r2 * 2.0,
        -m.big_f,
    ]
}

pub fn k_jet(lp: &LinearPoint, model: &PotentialModel, settings: &Settings) -> Result<KJet> {
    let method = resolve_method(settings, model)?;
    let roots = find_linear_roots(lp, model, Some(settings.well_index))?;
    let order = settings.quad_order;
    let well = lp.well();
    let coarse = moments(&well, model, roots.r_minus, roots.r_plus, order);
    let fine = moments(&well, model, roots.r_minus, roots.r_plus, 2 * order);
    check_convergence(&coarse, &fine, settings)?;
    let [k, t_star, eta, m, k_zeta] = linear_from_moments(&coarse, lp.kappa);

    let real = |p: [f64; 4]| linear_vector(p, model, &roots, order);
    let complex = |p: [Complex64; 4]| linear_vector(p, model, &roots, order);
    let [de, dk, dw, dz] = jacobian(
        [lp.e, lp.kappa, lp.omega, lp.zeta],
        method,
        settings.fd_scale,
        &real,
        &complex,
    )?;

    let k_gradient = [de[0], dk[0], dw[0], dz[0]];
    consistency("dK/dE vs T*", k_gradient[0], t_star, t_star.abs())?;
    consistency("dK/dkappa vs -eta", k_gradient[1], -eta, eta.abs())?;
    consistency("dK/domega vs -M/2", k_gradient[2], -0.5 * m, m.abs())?;
    consistency(
        "dK/dzeta vs K_zeta",
        k_gradient[3],
        k_zeta,
        k_zeta.abs().max(1e-12 * k.abs()),
    )?;

    Ok(KJet {
        k,
        t_star,
        eta,
        m,
        k_zeta,
        t_e: de[1],
        t_kappa: dk[1],
        t_omega: dw[1],
        t_zeta: dz[1],
        eta_e: de[2],
        eta_kappa: dk[2],
        eta_omega: dw[2],
        eta_zeta: dz[2],
        m_e: de[3],
        m_kappa: dk[3],
        m_omega: dw[3],
        m_zeta: dz[3],
        k_gradient,
        roots,
        method,
    })
}

/// Relative residual of `W = 2W_H(H + βJ + UJ/2) − 2M*ω − Jη* + 2ζW_ζ`.
pub fn virial_residual(jet: &ActionJet, pt: &WhithamPoint) -> f64 {
    let rhs = dot2(&[
        (2.0 * jet.w_h, pt.energy()),
        (-2.0 * jet.m_star, pt.omega()),
        (-pt.j, jet.eta_star),
        (2.0 * pt.zeta, jet.w_zeta),
    ]);
    (jet.w - rhs).abs() / jet.w.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta0() -> WhithamPoint {
        WhithamPoint::new(4.0, 0.0, 4.0, -0.5, 0.0, 0.0)
    }

    fn desk() -> WhithamPoint {
        WhithamPoint::new(0.61, 0.7, 0.8, 0.9, 0.39, 1.0)
    }

    #[test]
    fn zeta0_closed_forms() {
        let (m, s) = (PotentialModel::cubic(), Settings::default());
        let pt = zeta0();
        let w_h = quadrature(&pt, &m, Kernel::InvSqrtP, &s).unwrap() / 2.0;
        assert!((4.0 * PI * w_h - PI * SQRT_2).abs() < 1e-13);
        let m_star = quadrature(&pt, &m, Kernel::R2, &s).unwrap();
        assert!((m_star - SQRT_2).abs() < 1e-13);
        let eta = quadrature(&pt, &m, Kernel::Eta, &s).unwrap();
        assert!((eta - 0.25).abs() < 1e-14);

        let jet = action_jet(&pt, &m, &s).unwrap();
        assert!((jet.w_h - SQRT_2 / 4.0).abs() < 1e-14);
        assert!((jet.m_star - SQRT_2).abs() < 1e-13);
        assert!((jet.eta_star - 0.25).abs() < 1e-14);
        // β + U/2 = 0 at this point
        assert_eq!(jet.w_j, -jet.eta_star);
        assert!(virial_residual(&jet, &pt) < 1e-10);
    }

    #[test]
    fn first_derivative_relations() {
        let (m, s) = (PotentialModel::cubic(), Settings::default());
        let pt = desk();
        let jet = action_jet(&pt, &m, &s).unwrap();
        let b = pt.shift();
        assert!((jet.w_j - (jet.w_h * b - jet.eta_star)).abs() < 1e-14);
        assert!((jet.w_u - (0.5 * pt.j * jet.w_h - jet.m_star * b)).abs() < 1e-14);
        assert!((jet.w_beta - (pt.j * jet.w_h - pt.u * jet.m_star)).abs() < 1e-14);
        assert!(jet.w_h > 0.0);
    }

    #[test]
    fn complex_step_agrees_with_finite_differences() {
        let m = PotentialModel::cubic_quintic(-0.1);
        let pt = desk();
        let cs = action_jet(&pt, &m, &Settings::default()).unwrap();
        let fd = action_jet(&pt, &m, &Settings::default().with_finite_differences()).unwrap();
        assert_eq!(cs.method, DerivativeMethod::ComplexStep);
        assert_eq!(fd.method, DerivativeMethod::FiniteDifference);
        for (a, b) in [
            (cs.w_hh, fd.w_hh),
            (cs.w_hj, fd.w_hj),
            (cs.w_jj, fd.w_jj),
            (cs.m_star_h, fd.m_star_h),
            (cs.m_star_j, fd.m_star_j),
            (cs.m_star_gamma, fd.m_star_gamma),
            (cs.eta_star_j, fd.eta_star_j),
            (cs.w_hzeta, fd.w_hzeta),
            (cs.w_jzeta, fd.w_jzeta),
        ] {
            assert!(rel_diff(a, b) < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn classical_action_closed_forms() {
        let m = PotentialModel::cubic();
        let lp = LinearPoint::new(1.0, 1.0, 0.5, 0.0);
        let kj = k_jet(&lp, &m, &Settings::default()).unwrap();
        assert!(rel_diff(kj.t_star, PI / 0.5f64.sqrt()) < 1e-13);
        assert!(rel_diff(kj.eta, PI) < 1e-13);
        assert!(rel_diff(kj.m, PI / 0.5f64.powf(1.5)) < 1e-13);
        assert!(kj.eta_kappa.abs() < 1e-10 && kj.eta_e.abs() < 1e-10);
    }

    #[test]
    fn k_is_pi_w() {
        let m = PotentialModel::saturable();
        let pt = desk();
        let jet = action_jet(&pt, &m, &Settings::default()).unwrap();
        let kj = k_jet(&pt.to_linear(), &m, &Settings::default()).unwrap();
        assert!(rel_diff(kj.k, PI * jet.w) < 1e-12);
    }

    #[test]
    fn virial_negative_control() {
        let (m, s) = (PotentialModel::cubic(), Settings::default());
        let pt = desk();
        let mut jet = action_jet(&pt, &m, &s).unwrap();
        assert!(virial_residual(&jet, &pt) < 1e-12);
        jet.w_zeta = 0.0;
        assert!(virial_residual(&jet, &pt) > 1e-2);
    }

    #[test]
    fn complex_step_rejected_for_custom_models() {
        #[derive(Debug)]
        struct Kerr;
        impl crate::potential::Nonlinearity for Kerr {
            fn f(&self, s: f64) -> f64 {
                s
            }
            fn big_f(&self, s: f64) -> f64 {
                0.5 * s * s
            }
            fn df(&self, _: f64) -> f64 {
                1.0
            }
        }
        let m = PotentialModel::custom("kerr", std::sync::Arc::new(Kerr));
        let forced = Settings {
            use_complex_step: ComplexStep::On,
            ..Settings::default()
        };
        assert!(matches!(
            action_jet(&desk(), &m, &forced),
            Err(Error::Config(_))
        ));
        let auto = action_jet(&desk(), &m, &Settings::default()).unwrap();
        let cubic = action_jet(&desk(), &PotentialModel::cubic(), &Settings::default()).unwrap();
        assert_eq!(auto.method, DerivativeMethod::FiniteDifference);
        assert!(rel_diff(auto.w_jj, cubic.w_jj) < 1e-8);
    }
}
