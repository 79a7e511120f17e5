//! The main theorem end to end: put a point on the dispersion manifold
//! `W_J = 0`, then compare the normal-form ratios `r_j` with the
//! characteristic speeds `c_j` through `c_j = U + i r_j`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{action_jet, dispersion, k_jet, ActionJet, KJet};
use crate::brackets::{
    compute_brackets, genericity, linear_brackets, GenericityReport, NamedResidual,
};
use crate::error::{Error, Result};
use crate::normal_form::{
    assemble_linear_pencil, assemble_whitham_pencil, b2_alternate_linear, b2_alternate_whitham,
    classify, solve_pencil, stability_tolerance, StabilityVerdict, ENTRY_NAMES,
};
use crate::numeric::{match_multisets, rel_diff, rel_diff_c};
use crate::potential::PotentialModel;
use crate::settings::Settings;
use crate::wave::{validate_omega, LinearPoint, WhithamPoint};
use crate::whitham_system::{
    assemble, branch_admissible, characteristics, default_tolerance, determinant_check,
    hyperbolicity, select_branch, Branch, DeterminantCheck, HyperbolicityVerdict,
};

/// A point on `W_J = 0` with the wave quantities fixed by the dispersion relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedPoint {
    pub point: WhithamPoint,
    /// `EliminateH` means `H` was solved for, `EliminateJ` means `J`.
    pub branch: Branch,
    pub residual: f64,
    /// Wavenumber `1/(2W_H)`.
    pub k: f64,
    /// `kU`.
    pub omega_star: f64,
    /// `kJ`.
    #[serde(rename = "B")]
    pub b_wave: f64,
}

const CONSTRAINT_TOL: f64 = 1e-10;
const SCAN_SAMPLES: usize = 256;

fn solved_coordinate(pt: &WhithamPoint, branch: Branch) -> f64 {
    match branch {
        Branch::EliminateH => pt.h,
        Branch::EliminateJ => pt.j,
    }
}

fn with_coordinate(pt: &WhithamPoint, branch: Branch, x: f64) -> WhithamPoint {
    let mut p = *pt;
    match branch {
        Branch::EliminateH => p.h = x,
        Branch::EliminateJ => p.j = x,
    }
    p
}

fn finish(point: WhithamPoint, branch: Branch, residual: f64, w_h: f64) -> ConstrainedPoint {
    let k = 0.5 / w_h;
    ConstrainedPoint {
        point,
        branch,
        residual,
        k,
        omega_star: k * point.u,
        b_wave: k * point.j,
    }
}

/// `W_J` along the solved coordinate; `None` outside Ω.
fn residual_at(
    seed: &WhithamPoint,
    branch: Branch,
    x: f64,
    model: &PotentialModel,
    settings: &Settings,
) -> Option<f64> {
    if branch == Branch::EliminateJ && x <= 0.0 {
        return None;
    }
    dispersion(&with_coordinate(seed, branch, x), model, settings)
        .ok()
        .map(|d| d.w_j)
}

/// Solve `W_J = 0` for `H` or `J`, holding every other coordinate of `seed` fixed.
///
/// Damped Newton from the seed first; if that stalls or leaves Ω, the root
/// nearest the seed on a scan of [`constraint_roots`] is taken instead.
pub fn constrain(
    seed: &WhithamPoint,
    model: &PotentialModel,
    branch: Branch,
    settings: &Settings,
) -> Result<ConstrainedPoint> {
    let first = dispersion(seed, model, settings)?;
    let tol = |eta: f64| CONSTRAINT_TOL * eta.abs().max(1.0);
    if first.w_j.abs() < tol(first.eta_star) {
        return Ok(finish(*seed, branch, first.w_j.abs(), first.w_h));
    }
    if let Some(cp) = newton(
        seed,
        model,
        branch,
        settings,
        solved_coordinate(seed, branch),
    ) {
        return Ok(cp);
    }
    let x0 = solved_coordinate(seed, branch);
    let roots = constraint_roots(seed, model, branch, settings)?;
    let nearest = roots
        .into_iter()
        .min_by(|a, b| (a - x0).abs().total_cmp(&(b - x0).abs()))
        .ok_or_else(|| Error::ConstraintUnsolvable(format!("W_J keeps one sign around {x0}")))?;
    newton(seed, model, branch, settings, nearest).ok_or_else(|| {
        Error::LeftOmega(format!(
            "Newton polish from the bracketed root {nearest} failed"
        ))
    })
}

fn newton(
    seed: &WhithamPoint,
    model: &PotentialModel,
    branch: Branch,
    settings: &Settings,
    start: f64,
) -> Option<ConstrainedPoint> {
    let mut x = start;
    let mut d = dispersion(&with_coordinate(seed, branch, x), model, settings).ok()?;
    for _ in 0..40 {
        let tol = CONSTRAINT_TOL * d.eta_star.abs().max(1.0);
        if d.w_j.abs() < tol {
            return Some(finish(
                with_coordinate(seed, branch, x),
                branch,
                d.w_j.abs(),
                d.w_h,
            ));
        }
        let slope = match branch {
            Branch::EliminateH => d.d_h,
            Branch::EliminateJ => d.d_j,
        };
        if slope == 0.0 || !slope.is_finite() {
            return None;
        }
        let mut step = -d.w_j / slope;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = x + step;
            let valid = !(branch == Branch::EliminateJ && trial <= 0.0);
            if valid {
                if let Ok(dt) = dispersion(&with_coordinate(seed, branch, trial), model, settings) {
                    if dt.w_j.abs() < d.w_j.abs() {
                        accepted = Some((trial, dt));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        (x, d) = accepted?;
    }
    None
}

/// Every sign change of `W_J` on a fixed scan around the seed, refined by bisection.
///
/// `H` is scanned over `H₀ ± 2·max(1, |H₀|)`, `J` geometrically over
/// `[J₀/8, 8J₀]`. Points outside Ω are skipped.
pub fn constraint_roots(
    seed: &WhithamPoint,
    model: &PotentialModel,
    branch: Branch,
    settings: &Settings,
) -> Result<Vec<f64>> {
    let x0 = solved_coordinate(seed, branch);
    let grid: Vec<f64> = (0..SCAN_SAMPLES)
        .map(|i| {
            let t = i as f64 / (SCAN_SAMPLES - 1) as f64;
            match branch {
                Branch::EliminateH => {
                    let span = 2.0 * x0.abs().max(1.0);
                    x0 - span + 2.0 * span * t
                }
                Branch::EliminateJ => x0 * 8f64.powf(2.0 * t - 1.0),
            }
        })
        .collect();
    let values: Vec<Option<f64>> = grid
        .iter()
        .map(|&x| residual_at(seed, branch, x, model, settings))
        .collect();
    let valid = values.iter().filter(|v| v.is_some()).count();
    if valid < 2 {
        return Err(Error::LeftOmega(format!(
            "fewer than two Ω-valid points on the scan around {x0}"
        )));
    }
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else {
            continue;
        };
        if fa == 0.0 {
            roots.push(grid[i]);
        } else if fa * fb < 0.0 {
            let (mut a, mut b, mut fa) = (grid[i], grid[i + 1], fa);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                let Some(fm) = residual_at(seed, branch, m, model, settings) else {
                    break;
                };
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    (a, fa) = (m, fm);
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    if roots.is_empty() {
        return Err(Error::ConstraintUnsolvable(format!(
            "no sign change of W_J on the scan around {x0}"
        )));
    }
    Ok(roots)
}

/// Constrained point from linear data: `(H, J, γ*)` follow from `(E, κ, ω)`
/// and the gauge `U`, and `β = η/T* − U/2` makes `W_J` vanish identically.
pub fn constrained_from_linear(
    lp: &LinearPoint,
    u: f64,
    model: &PotentialModel,
    settings: &Settings,
) -> Result<ConstrainedPoint> {
    let kj = k_jet(lp, model, settings)?;
    let beta = kj.eta / kj.t_star - 0.5 * u;
    let pt = WhithamPoint::from_linear(lp, u, beta);
    let d = dispersion(&pt, model, settings)?;
    if d.w_j.abs() < CONSTRAINT_TOL * d.eta_star.abs().max(1.0) {
        Ok(finish(pt, Branch::EliminateH, d.w_j.abs(), d.w_h))
    } else {
        constrain(&pt, model, Branch::EliminateH, settings)
    }
}

/// Result of one elimination branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub branch: Branch,
    pub speeds: [Complex64; 4],
    /// `speeds[i] ↔ U + i·ratios[matching[i]]`.
    pub matching: Vec<usize>,
    pub max_mismatch: f64,
    pub verdict: HyperbolicityVerdict,
    pub max_imag: f64,
    pub determinants: DeterminantCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub point: WhithamPoint,
    pub ratios: [Complex64; 4],
    pub speeds: [Complex64; 4],
    pub matching: Vec<usize>,
    pub max_mismatch: f64,
    /// Mismatch allowance, `theorem · max_j |r_j|`.
    pub mismatch_tol: f64,
    pub max_re_ratio: f64,
    pub max_im_speed: f64,
    pub verdict_normal_form: StabilityVerdict,
    pub verdict_whitham: StabilityVerdict,
    pub branch: Branch,
    /// Every admissible branch, the selected one first.
    pub branches: Vec<BranchOutcome>,
    /// Largest distance between the two branches' speed multisets, relative to `max_j |c_j|`.
    pub branch_speed_agreement: Option<f64>,
    pub genericity: GenericityReport,
    pub concordant: bool,
}

fn run_branch(
    jet: &ActionJet,
    br: &crate::brackets::BracketSet,
    pt: &WhithamPoint,
    branch: Branch,
    targets: &[Complex64; 4],
    d: f64,
    rel: f64,
) -> Result<BranchOutcome> {
    let m = assemble(jet, br, pt, branch)?;
    let ch = characteristics(&m)?;
    let (matching, max_mismatch) = match_multisets(&ch.speeds, targets);
    let h = hyperbolicity(&ch.speeds, default_tolerance(&ch.speeds, pt.u, rel));
    Ok(BranchOutcome {
        branch,
        speeds: ch.speeds,
        matching,
        max_mismatch,
        verdict: h.verdict,
        max_imag: h.max_imag,
        determinants: determinant_check(&m, jet, br, d),
    })
}

/// Compute both stability objects at a constrained generic point and compare them.
pub fn verify_theorem(
    cp: &ConstrainedPoint,
    model: &PotentialModel,
    settings: &Settings,
) -> Result<EquivalenceReport> {
    let pt = &cp.point;
    let jet = action_jet(pt, model, settings)?;
    let br = compute_brackets(&jet, pt);
    let pencil = assemble_whitham_pencil(&jet, &br, pt)?;
    let gen = genericity(&jet, &br, pt, &pencil, None);
    if gen.d.abs() <= gen.tol_d {
        return Err(Error::NonGeneric(format!(
            "D = {:.3e} below {:.3e}",
            gen.d, gen.tol_d
        )));
    }
    let roots = solve_pencil(&pencil)?;
    let rel = settings.tolerances.stability;
    let nf = classify(&roots, stability_tolerance(&roots, rel));
    let targets = roots
        .ratios
        .map(|r| Complex64::new(pt.u, 0.0) + Complex64::i() * r);

    let primary = settings
        .branch
        .fixed()
        .unwrap_or_else(|| select_branch(&jet));
    let mut branches = vec![run_branch(&jet, &br, pt, primary, &targets, gen.d, rel)?];
    if branch_admissible(&jet, primary.other()).is_ok() {
        match run_branch(&jet, &br, pt, primary.other(), &targets, gen.d, rel) {
            Ok(o) => branches.push(o),
            Err(e) => log::debug!("secondary branch {:?} skipped: {e}", primary.other()),
        }
    }
    let main = &branches[0];
    let scale = roots.max_modulus();
    let mismatch_tol = settings.tolerances.theorem * scale;
    let branch_speed_agreement = branches.get(1).map(|o| {
        let (_, dist) = match_multisets(&main.speeds, &o.speeds);
        dist / main
            .speeds
            .iter()
            .map(|c| c.norm())
            .fold(f64::MIN_POSITIVE, f64::max)
    });
    let verdict_whitham = main.verdict.as_stability();
    let concordant = branches
        .iter()
        .all(|o| o.verdict.as_stability() == nf.verdict && o.max_mismatch < mismatch_tol);
    Ok(EquivalenceReport {
        point: *pt,
        ratios: roots.ratios,
        speeds: main.speeds,
        matching: main.matching.clone(),
        max_mismatch: main.max_mismatch,
        mismatch_tol,
        max_re_ratio: nf.max_re,
        max_im_speed: main.max_imag,
        verdict_normal_form: nf.verdict,
        verdict_whitham,
        branch: main.branch,
        branch_speed_agreement,
        genericity: gen,
        concordant,
        branches,
    })
}

/// One pencil entry assembled both ways.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryComparison {
    pub name: &'static str,
    pub whitham: Complex64,
    pub linear: Complex64,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PencilCrossCheck {
    pub entries: Vec<EntryComparison>,
    pub max_rel_diff: f64,
    /// Printed alternative for `b₂` (Whitham variables) divided by the primary form.
    pub b2_alternate_factor_whitham: f64,
    /// The same for the linear-variable alternative.
    pub b2_alternate_factor_linear: f64,
}

/// Assemble the pencil from the Whitham jet and, independently, from the
/// classical action in linear coordinates, and compare entry by entry.
pub fn cross_check_forms(
    cp: &ConstrainedPoint,
    model: &PotentialModel,
    settings: &Settings,
) -> Result<PencilCrossCheck> {
    let pt = &cp.point;
    let jet = action_jet(pt, model, settings)?;
    let br = compute_brackets(&jet, pt);
    let lp = pt.to_linear();
    let kj = k_jet(&lp, model, settings)?;
    let lb = linear_brackets(&kj);
    let pw = assemble_whitham_pencil(&jet, &br, pt)?;
    let pl = assemble_linear_pencil(&kj, &lb, &lp)?;
    let entries: Vec<EntryComparison> = ENTRY_NAMES
        .iter()
        .zip(pw.entries().into_iter().zip(pl.entries()))
        .map(|(&name, (w, l))| EntryComparison {
            name,
            whitham: w,
            linear: l,
            rel_diff: rel_diff_c(w, l),
        })
        .collect();
    let max_rel_diff = entries.iter().map(|e| e.rel_diff).fold(0.0, f64::max);
    Ok(PencilCrossCheck {
        entries,
        max_rel_diff,
        b2_alternate_factor_whitham: b2_alternate_whitham(&jet, &br) / pw.b2.re,
        b2_alternate_factor_linear: b2_alternate_linear(&kj, &lb) / pl.b2.re,
    })
}

/// The thirteen relations expressing classical-action derivatives through
/// the averaged action, as relative residuals.
pub fn conversion_suite(jet: &ActionJet, pt: &WhithamPoint, kj: &KJet) -> Vec<NamedResidual> {
    let b = pt.shift();
    let rel = |name: &'static str, lhs: f64, rhs: f64| NamedResidual {
        name,
        residual: rel_diff(lhs, rhs),
    };
    vec![
        rel("T = 4πW_H", kj.t_star, 4.0 * PI * jet.w_h),
        rel("η = 4πη*", kj.eta, 4.0 * PI * jet.eta_star),
        rel("M = 2πM*", kj.m, 2.0 * PI * jet.m_star),
        rel("T_E = 16πW_HH", kj.t_e, 16.0 * PI * jet.w_hh),
        rel("T_κ = −16πη*_H", kj.t_kappa, -16.0 * PI * jet.eta_star_h),
        rel("T_ω = −4πM*_H", kj.t_omega, -4.0 * PI * jet.m_star_h),
        rel("η_E = 16πη*_H", kj.eta_e, 16.0 * PI * jet.eta_star_h),
        rel(
            "η_κ = 16π(η*_J − bη*_H)",
            kj.eta_kappa,
            16.0 * PI * (jet.eta_star_j - b * jet.eta_star_h),
        ),
        rel(
            "η_ω = −4πη*_γ",
            kj.eta_omega,
            -4.0 * PI * jet.eta_star_gamma,
        ),
        rel("M_E = 8πM*_H", kj.m_e, 8.0 * PI * jet.m_star_h),
        rel(
            "M_κ = 8π(M*_J − bM*_H)",
            kj.m_kappa,
            8.0 * PI * (jet.m_star_j - b * jet.m_star_h),
        ),
        rel("M_ω = −2πM*_γ", kj.m_omega, -2.0 * PI * jet.m_star_gamma),
        rel("K_ζ = πW_ζ", kj.k_zeta, PI * jet.w_zeta),
    ]
}

/// Relative deviation of `K/(πW)` from one.
pub fn action_ratio_defect(jet: &ActionJet, kj: &KJet) -> f64 {
    rel_diff(kj.k, PI * jet.w)
}

/// Uniform sampling ranges. Points are drawn in linear coordinates plus the
/// gauge `U`, which makes the constraint explicit in `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBoxes {
    #[serde(rename = "E")]
    pub e: (f64, f64),
    pub kappa: (f64, f64),
    pub omega: (f64, f64),
    pub zeta: (f64, f64),
    #[serde(rename = "U")]
    pub u: (f64, f64),
}

impl Default for SampleBoxes {
    fn default() -> Self {
        SampleBoxes {
            e: (0.1, 2.0),
            kappa: (0.05, 1.0),
            omega: (-2.0, 3.0),
            zeta: (-1.5, 1.5),
            u: (-1.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStats {
    pub drawn: usize,
    pub accepted: usize,
    pub rejected_omega: usize,
    pub rejected_numerics: usize,
    pub rejected_nongeneric: usize,
}

fn draw(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

enum Candidate {
    Accepted(ConstrainedPoint),
    Omega,
    Numerics,
    NonGeneric,
}

fn screen(lp: LinearPoint, u: f64, model: &PotentialModel, settings: &Settings) -> Candidate {
    let probe = WhithamPoint::from_linear(&lp, u, 0.0);
    if !validate_omega(&probe, model, Some(settings.well_index)).pass {
        return Candidate::Omega;
    }
    let cp = match constrained_from_linear(&lp, u, model, settings) {
        Ok(cp) => cp,
        Err(_) => return Candidate::Numerics,
    };
    let pt = &cp.point;
    let checked = action_jet(pt, model, settings).and_then(|jet| {
        let br = compute_brackets(&jet, pt);
        let pencil = assemble_whitham_pencil(&jet, &br, pt)?;
        Ok(genericity(&jet, &br, pt, &pencil, None))
    });
    match checked {
        Ok(g) if g.pass => Candidate::Accepted(cp),
        Ok(_) | Err(Error::NonGeneric(_)) => Candidate::NonGeneric,
        Err(_) => Candidate::Numerics,
    }
}

/// Draw `n` constrained generic points reproducibly from `seed`.
///
/// Candidates are screened in parallel batches; acceptance follows draw order,
/// so the result does not depend on the thread count.
pub fn sample_constrained_points(
    model: &PotentialModel,
    boxes: &SampleBoxes,
    n: usize,
    seed: u64,
    settings: &Settings,
) -> Result<(Vec<ConstrainedPoint>, SampleStats)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SampleStats::default();
    let mut out = Vec::with_capacity(n);
    let max_draws = 200 * n.max(1);
    while out.len() < n {
        if stats.drawn >= max_draws {
            return Err(Error::Config(format!(
                "only {} of {n} points accepted after {} draws; widen the sample boxes",
                out.len(),
                stats.drawn
            )));
        }
        let batch: Vec<(LinearPoint, f64)> = (0..(2 * (n - out.len())).max(8))
            .map(|_| {
                let lp = LinearPoint::new(
                    draw(&mut rng, boxes.e),
                    draw(&mut rng, boxes.kappa),
                    draw(&mut rng, boxes.omega),
                    draw(&mut rng, boxes.zeta),
                );
                (lp, draw(&mut rng, boxes.u))
            })
            .collect();
        let screened: Vec<Candidate> = batch
            .into_par_iter()
            .map(|(lp, u)| screen(lp, u, model, settings))
            .collect();
        for c in screened {
            if out.len() == n {
                break;
            }
            stats.drawn += 1;
            match c {
                Candidate::Accepted(cp) => out.push(cp),
                Candidate::Omega => stats.rejected_omega += 1,
                Candidate::Numerics => stats.rejected_numerics += 1,
                Candidate::NonGeneric => stats.rejected_nongeneric += 1,
            }
        }
    }
    stats.accepted = out.len();
    log::info!(
        "sampled {} points for '{}': {} drawn, rejected {} outside Ω, {} numerically, {} non-generic",
        stats.accepted,
        model.name(),
        stats.drawn,
        stats.rejected_omega,
        stats.rejected_numerics,
        stats.rejected_nongeneric
    );
    Ok((out, stats))
}

/// [`verify_theorem`] over many points in parallel; results keep input order.
pub fn verify_batch(
    points: &[ConstrainedPoint],
    model: &PotentialModel,
    settings: &Settings,
) -> Vec<Result<EquivalenceReport>> {
    points
        .par_iter()
        .map(|cp| verify_theorem(cp, model, settings))
        .collect()
}
