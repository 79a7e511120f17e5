//! The 4×4 quasi-linear modulation system `A u_T + a u_X = 0` and its
//! characteristic speeds `det(cA − a) = 0`.

use std::f64::consts::PI;

use nalgebra::{Complex, Matrix4, RowVector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::ActionJet;
use crate::brackets::BracketSet;
use crate::error::{Error, Result};
use crate::normal_form::{grade, StabilityVerdict};
use crate::numeric::{canonical_order, poly_roots};
use crate::wave::WhithamPoint;

/// Which of `H`, `J` is eliminated through the dispersion relation `W_J = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// State `(J, γ*, U, β)`; needs `W_HJ ≠ 0`.
    EliminateH,
    /// State `(H, γ*, U, β)`; needs `W_JJ ≠ 0` and `W_HH ≠ 0`.
    EliminateJ,
}

impl Branch {
    pub fn other(self) -> Branch {
        match self {
            Branch::EliminateH => Branch::EliminateJ,
            Branch::EliminateJ => Branch::EliminateH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemMatrices {
    #[serde(rename = "A")]
    pub big_a: Matrix4<f64>,
    pub a: Matrix4<f64>,
    pub branch: Branch,
    /// Background speed `U`, the reference for hyperbolicity tolerances.
    pub u: f64,
}

const BRANCH_TOL: f64 = 1e-8;

/// Prefer `EliminateH` when `|W_HJ||W_H| ≥ |W_JJ||W_HH|`.
pub fn select_branch(jet: &ActionJet) -> Branch {
    if (jet.w_hj * jet.w_h).abs() >= (jet.w_jj * jet.w_hh).abs() {
        Branch::EliminateH
    } else {
        Branch::EliminateJ
    }
}

/// Whether `branch` has the non-vanishing second derivatives it divides by.
pub fn branch_admissible(jet: &ActionJet, branch: Branch) -> Result<()> {
    let scale = jet.w_hh.abs().max(jet.w_jj.abs()).max(jet.w_hj.abs());
    let tol = BRANCH_TOL * scale;
    match branch {
        Branch::EliminateH if jet.w_hj.abs() <= tol => Err(Error::BranchDegenerate(format!(
            "W_HJ = {:.3e} vanishes",
            jet.w_hj
        ))),
        Branch::EliminateJ if jet.w_jj.abs() <= tol || jet.w_hh.abs() <= tol => Err(
            Error::BranchDegenerate(format!("W_JJ = {:.3e}, W_HH = {:.3e}", jet.w_jj, jet.w_hh)),
        ),
        _ => Ok(()),
    }
}

pub fn assemble(
    jet: &ActionJet,
    br: &BracketSet,
    pt: &WhithamPoint,
    branch: Branch,
) -> Result<SystemMatrices> {
    let residual = jet.w_j.abs();
    if residual > 1e-8 * jet.eta_star.abs().max(1.0) {
        return Err(Error::UnconstrainedPoint { residual });
    }
    branch_admissible(jet, branch)?;
    let (big_a, a) = match branch {
        Branch::EliminateH => eliminate_h(jet, br, pt),
        Branch::EliminateJ => eliminate_j(jet, br, pt),
    };
    Ok(SystemMatrices {
        big_a,
        a,
        branch,
        u: pt.u,
    })
}

fn eliminate_h(
    jet: &ActionJet,
    br: &BracketSet,
    pt: &WhithamPoint,
) -> (Matrix4<f64>, Matrix4<f64>) {
    let (s, rho, g, nu, tau, bjg) = (
        br.sigma_star,
        br.rho_star,
        br.gamma_big,
        br.nu_star,
        br.tau_star,
        br.aux_j_gamma,
    );
    let (wh, m, mh, mj, whj, wjj) = (
        jet.w_h,
        jet.m_star,
        jet.m_star_h,
        jet.m_star_j,
        jet.w_hj,
        jet.w_jj,
    );
    let (j, u, b) = (pt.j, pt.u, pt.shift());

    let big_a = Matrix4::from_rows(&[
        RowVector4::new(0.0, 0.0, 0.0, 1.0),
        RowVector4::new(s, -rho, nu + rho * b, 2.0 * nu + u * rho),
        RowVector4::new(
            tau + 0.5 * j * s + b * g,
            -0.5 * j * rho - b * bjg,
            0.5 * j * nu + 0.5 * wh * mh * b - 0.5 * m * whj + 0.5 * j * rho * b + b * b * bjg,
            j * nu + wh * mh * b - m * whj + 0.5 * j * u * rho + u * b * bjg,
        ),
        RowVector4::new(
            -g * wh - s * m,
            wh * bjg + rho * m,
            -0.5 * wh * wh * mh - wh * b * bjg - m * (nu + rho * b),
            -wh * wh * mh - u * wh * bjg - m * (2.0 * nu + u * rho),
        ),
    ]);

    let mut a = big_a * u;
    a.set_row(0, &RowVector4::new(0.0, 1.0, 0.0, 0.0));
    a[(1, 2)] -= 2.0 * tau;
    a[(2, 0)] += wh * wjj;
    a[(2, 1)] += wh * mj - whj * m;
    a[(2, 2)] += 0.5 * wh * wh + j * tau - wh * mj * b;
    a[(2, 3)] += wh * wh + u * m * whj - u * wh * mj;
    a[(3, 0)] -= 2.0 * tau * wh;
    a[(3, 2)] += 2.0 * tau * m;
    (big_a, a)
}

fn eliminate_j(
    jet: &ActionJet,
    br: &BracketSet,
    pt: &WhithamPoint,
) -> (Matrix4<f64>, Matrix4<f64>) {
    let (s, g, tau) = (br.sigma_star, br.gamma_big, br.tau_star);
    let (wh, m, mj, whj, wjj, mg) = (
        jet.w_h,
        jet.m_star,
        jet.m_star_j,
        jet.w_hj,
        jet.w_jj,
        jet.m_star_gamma,
    );
    let (j, u, beta, b) = (pt.j, pt.u, pt.beta, pt.shift());
    // {W_γ*, W_J}_{γ*,J}
    let bgj = mg * wjj - mj * mj;

    let a23 = -(tau + 0.5 * j * s + g * b);
    let a24 = -(2.0 * tau + j * s + u * g);
    let a32 = -0.5 * wh * mj + 0.5 * j * g - b * bgj;
    let a33 = -0.25 * wh * wh - j * tau - 0.25 * j * j * s - 0.5 * m * wjj + wh * mj * b
        - j * g * b
        + b * b * bgj;
    let a34 = -0.5 * wh * wh - 2.0 * j * tau - 0.5 * j * j * s - m * wjj + wh * mj * (beta + u)
        - j * g * (beta + u)
        + u * b * bgj;

    let big_a = Matrix4::from_rows(&[
        RowVector4::new(0.0, 0.0, 0.0, 1.0),
        RowVector4::new(-s, g, a23, a24),
        RowVector4::new(a23, a32, a33, a34),
        RowVector4::new(
            g * wh + s * m,
            wh * bgj - g * m,
            wh * a32 + m * (tau + 0.5 * j * s + g * b),
            wh * (-wh * mj + j * g - u * bgj) + m * (2.0 * tau + j * s + u * g),
        ),
    ]);

    let mut a = big_a * u;
    a.set_row(0, &RowVector4::new(0.0, 1.0, 0.0, 0.0));
    a[(1, 2)] -= wh * wjj;
    a[(2, 0)] -= wh * wjj;
    a[(2, 1)] -= m * wjj;
    a[(2, 3)] -= wjj * (j * wh - u * m);
    a[(3, 0)] += 2.0 * tau * wh;
    a[(3, 1)] += wh * wh * mj;
    a[(3, 2)] += m * wh * wjj + wh * wh * (0.5 * wh + 0.5 * j * whj - mj * b);
    a[(3, 3)] += wh * wh * (wh + j * whj - u * mj);
    (big_a, a)
}

/// Closed-form values of `det A` and `det(UA − a)` for the given branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantCheck {
    pub det_a: f64,
    pub det_a_formula: f64,
    pub det_shifted: f64,
    pub det_shifted_formula: f64,
}

pub fn determinant_check(
    m: &SystemMatrices,
    jet: &ActionJet,
    br: &BracketSet,
    d: f64,
) -> DeterminantCheck {
    let shifted = m.big_a * m.u - m.a;
    let pi4 = PI.powi(4);
    let (det_a_formula, det_shifted_formula) = match m.branch {
        Branch::EliminateH => (
            -jet.w_hj * br.tau_star * d / (2f64.powi(9) * pi4),
            -4.0 * br.tau_star * br.tau_star * jet.w_h.powi(3),
        ),
        Branch::EliminateJ => (
            jet.w_h * jet.w_jj * jet.w_jj * d / (2f64.powi(10) * pi4),
            jet.w_h.powi(5) * jet.w_jj * jet.w_jj,
        ),
    };
    DeterminantCheck {
        det_a: m.big_a.determinant(),
        det_a_formula,
        det_shifted: shifted.determinant(),
        det_shifted_formula,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    pub speeds: [Complex64; 4],
    pub hyperbolic: bool,
    pub max_imag: f64,
}

/// Coefficients of `det(λI − X)`, highest degree first (Faddeev–LeVerrier).
fn char_poly(x: &Matrix4<f64>) -> [f64; 5] {
    let mut c = [0.0; 5];
    c[0] = 1.0;
    let mut mk = Matrix4::<f64>::zeros();
    for k in 1..=4 {
        mk = x * mk + Matrix4::identity() * c[k - 1];
        c[k] = -(x * mk).trace() / k as f64;
    }
    c
}

pub fn characteristics(m: &SystemMatrices) -> Result<Characteristics> {
    let det = m.big_a.determinant();
    let hadamard: f64 = m.big_a.row_iter().map(|r| r.norm()).product();
    if !(det.abs() > 1e-13 * hadamard) {
        return Err(Error::SingularA(det));
    }
    let lu = m.big_a.lu();
    let mut x = lu.solve(&m.a).ok_or(Error::SingularA(det))?;
    // One round of iterative refinement on A X = a.
    let correction = lu
        .solve(&(m.a - m.big_a * x))
        .ok_or(Error::SingularA(det))?;
    x += correction;

    let coeffs = char_poly(&x).map(|v| Complex64::new(v, 0.0));
    let roots = poly_roots(&coeffs, 2)
        .ok_or_else(|| Error::EigenFailure("characteristic polynomial".into()))?;

    let ac: Matrix4<Complex64> = m.big_a.map(|v| Complex::new(v, 0.0));
    let ab: Matrix4<Complex64> = m.a.map(|v| Complex::new(v, 0.0));
    let mut speeds: Vec<Complex64> = roots
        .into_iter()
        .map(|mut c| {
            // Newton on det(cA − a): f'/f = tr((cA − a)⁻¹ A).
            for _ in 0..2 {
                let mat = ac * c - ab;
                let lu = mat.lu();
                let f = lu.determinant();
                let Some(inv_a) = lu.solve(&ac) else { break };
                let ratio = inv_a.trace();
                if ratio.norm() == 0.0 || !ratio.is_finite() {
                    break;
                }
                let candidate = c - ratio.inv();
                if (ac * candidate - ab).determinant().norm() < f.norm() {
                    c = candidate;
                } else {
                    break;
                }
            }
            c
        })
        .collect();
    canonical_order(&mut speeds);
    let speeds: [Complex64; 4] = speeds.try_into().expect("four speeds");
    let max_imag = speeds.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let tol = default_tolerance(&speeds, m.u, 1e-6);
    Ok(Characteristics {
        speeds,
        hyperbolic: max_imag <= tol,
        max_imag,
    })
}

/// `rel · max_j |c_j − U|`.
pub fn default_tolerance(speeds: &[Complex64; 4], u: f64, rel: f64) -> f64 {
    rel * speeds.iter().map(|c| (c - u).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperbolicityVerdict {
    Hyperbolic,
    Elliptic,
    Marginal,
}

impl HyperbolicityVerdict {
    /// Real characteristics predict modulational stability.
    pub fn as_stability(self) -> StabilityVerdict {
        match self {
            HyperbolicityVerdict::Hyperbolic => StabilityVerdict::Stable,
            HyperbolicityVerdict::Elliptic => StabilityVerdict::Unstable,
            HyperbolicityVerdict::Marginal => StabilityVerdict::Marginal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperbolicity {
    pub verdict: HyperbolicityVerdict,
    pub max_imag: f64,
    pub tol: f64,
}

pub fn hyperbolicity(speeds: &[Complex64], tol: f64) -> Hyperbolicity {
    let max_imag = speeds.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let verdict = match grade(max_imag, tol) {
        StabilityVerdict::Stable => HyperbolicityVerdict::Hyperbolic,
        StabilityVerdict::Unstable => HyperbolicityVerdict::Elliptic,
        StabilityVerdict::Marginal => HyperbolicityVerdict::Marginal,
    };
    Hyperbolicity {
        verdict,
        max_imag,
        tol,
    }
}
