use std::f64::consts::PI;
use std::path::Path;

use modstab::action::{action_jet, k_jet, virial_residual};
use modstab::brackets::{compute_brackets, genericity};
use modstab::equivalence::{
    action_ratio_defect, conversion_suite, cross_check_forms, sample_constrained_points,
    verify_batch,
};
use modstab::hill_oracle::{fit_slopes, near_origin_curves};
use modstab::normal_form::{assemble_whitham_pencil, solve_pencil};
use modstab::wave::{find_roots, profile, validate_omega};
use modstab::{
    constrain, constrained_from_linear, verify_theorem, ConstrainedPoint, Error, PotentialModel,
    Result, Settings, StabilityVerdict, WhithamPoint,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Coord, RunConfig, Seed};
use crate::output::{num, opt_num, write_csv, write_json};

pub const SWEEP_HEADER: [&str; 8] = [
    "coord1",
    "coord2",
    "omega_valid",
    "generic",
    "verdict",
    "max_re_ratio",
    "max_im_speed",
    "mismatch",
];
pub const SPECTRUM_HEADER: [&str; 5] = ["kind", "mu", "branch", "re", "im"];

/// Everything a command needs from the configuration.
pub struct Context {
    pub cfg: RunConfig,
    pub model: PotentialModel,
    pub settings: Settings,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Context> {
        let model = cfg.model()?;
        let settings = cfg.settings()?;
        Ok(Context {
            cfg,
            model,
            settings,
        })
    }

    fn constrained(&self, seed: &Seed) -> Result<ConstrainedPoint> {
        match seed {
            Seed::Whitham(p) => self.constrained_whitham(p, true),
            Seed::Linear(l) => {
                constrained_from_linear(&l.linear(), l.u, &self.model, &self.settings)
            }
        }
    }

    /// Moves `H` (or `J`) onto `W_J = 0`. Where that coordinate cannot reach the
    /// manifold (at `ζ = 0`, for one), `β` is re-solved in closed form instead,
    /// unless `β` itself is pinned by the caller.
    fn constrained_whitham(&self, p: &WhithamPoint, beta_free: bool) -> Result<ConstrainedPoint> {
        match constrain(p, &self.model, self.cfg.solve_for.branch(), &self.settings) {
            Err(e @ (Error::ConstraintUnsolvable(_) | Error::LeftOmega(_))) if beta_free => {
                log::info!("{e}; re-solving β instead");
                constrained_from_linear(&p.to_linear(), p.u, &self.model, &self.settings)
                    .map_err(|_| e)
            }
            r => r,
        }
    }
}

fn verdict_name(v: StabilityVerdict) -> &'static str {
    match v {
        StabilityVerdict::Stable => "stable",
        StabilityVerdict::Unstable => "unstable",
        StabilityVerdict::Marginal => "marginal",
    }
}

/// Ω-validity and genericity at the constrained point.
pub fn check(ctx: &Context, out: Option<&Path>) -> Result<i32> {
    let seed = ctx.cfg.require_seed()?;
    let probe = seed.whitham();
    let well = Some(ctx.settings.well_index);
    let omega = validate_omega(&probe, &ctx.model, well);
    if !omega.pass {
        let code = match find_roots(&probe, &ctx.model, well) {
            Err(e @ Error::DegenerateRoot(_)) => e.exit_code(),
            _ => 1,
        };
        write_json(
            out,
            &json!({ "omega_valid": false, "generic": false, "reason": omega.reason }),
        )?;
        return Ok(code);
    }

    let cp = ctx.constrained(&seed)?;
    let pt = &cp.point;
    let jet = action_jet(pt, &ctx.model, &ctx.settings)?;
    let br = compute_brackets(&jet, pt);
    let pencil = match assemble_whitham_pencil(&jet, &br, pt) {
        Ok(p) => p,
        Err(e @ Error::NonGeneric(_)) => {
            write_json(
                out,
                &json!({
                    "omega_valid": true,
                    "generic": false,
                    "reason": e.to_string(),
                    "constrained": cp,
                    "roots": jet.roots,
                    "sigma_star": br.sigma_star,
                    "sigma": br.linear.sigma,
                }),
            )?;
            return Ok(e.exit_code());
        }
        Err(e) => return Err(e),
    };
    let kj = k_jet(&pt.to_linear(), &ctx.model, &ctx.settings)?;
    let gen = genericity(&jet, &br, pt, &pencil, Some(&kj));
    let wave = profile(pt, &ctx.model, ctx.settings.profile_samples, well)?;
    let period = jet.period();
    write_json(
        out,
        &json!({
            "omega_valid": true,
            "generic": gen.pass,
            "constrained": cp,
            "roots": jet.roots,
            "sigma": gen.sigma,
            "sigma_star": gen.sigma_star,
            "D": [gen.d, gen.d_alt1, gen.d_alt2],
            "genericity": gen,
            "period": period,
            "profile_period_rel_diff": (wave.period - period).abs() / period,
        }),
    )?;
    Ok(if gen.pass {
        0
    } else if gen.sigma_star.abs() <= gen.tol_sigma || gen.d.abs() <= gen.tol_d {
        3
    } else {
        1
    })
}

/// Action jets at the seed as given (no constraint solve).
pub fn jet(ctx: &Context, out: Option<&Path>) -> Result<i32> {
    let pt = match ctx.cfg.require_seed()? {
        Seed::Whitham(p) => p,
        Seed::Linear(_) => ctx.constrained(&ctx.cfg.require_seed()?)?.point,
    };
    let jet = action_jet(&pt, &ctx.model, &ctx.settings)?;
    let kj = k_jet(&pt.to_linear(), &ctx.model, &ctx.settings)?;
    write_json(
        out,
        &json!({
            "point": pt,
            "linear": pt.to_linear(),
            "jet": jet,
            "kjet": kj,
            "virial_residual": virial_residual(&jet, &pt),
            "conversions": conversion_suite(&jet, &pt, &kj),
            "action_ratio_defect": action_ratio_defect(&jet, &kj),
        }),
    )?;
    Ok(0)
}

/// The main theorem at one point, or over a seeded random batch.
pub fn verify(ctx: &Context, out: Option<&Path>) -> Result<i32> {
    if let Some(batch) = &ctx.cfg.batch {
        let (points, stats) = sample_constrained_points(
            &ctx.model,
            &batch.boxes,
            batch.count,
            ctx.cfg.seed,
            &ctx.settings,
        )?;
        let results = verify_batch(&points, &ctx.model, &ctx.settings);
        let concordant = results
            .iter()
            .filter(|r| matches!(r, Ok(rep) if rep.concordant))
            .count();
        let records: Vec<serde_json::Value> = results
            .iter()
            .map(|r| match r {
                Ok(rep) => serde_json::to_value(rep).unwrap_or_default(),
                Err(e) => json!({ "error": e.to_string() }),
            })
            .collect();
        write_json(
            out,
            &json!({ "sampling": stats, "concordant": concordant, "total": results.len(), "reports": records }),
        )?;
        return Ok(if concordant == results.len() { 0 } else { 1 });
    }

    let cp = ctx.constrained(&ctx.cfg.require_seed()?)?;
    let report = verify_theorem(&cp, &ctx.model, &ctx.settings)?;
    let forms = cross_check_forms(&cp, &ctx.model, &ctx.settings).ok();
    write_json(
        out,
        &json!({ "constrained": cp, "report": report, "cross_check": forms }),
    )?;
    Ok(if report.concordant { 0 } else { 1 })
}

fn sweep_cell(ctx: &Context, seed: WhithamPoint, beta_free: bool) -> [String; 6] {
    let empty = || String::new();
    let invalid = [
        "false".to_string(),
        "false".to_string(),
        empty(),
        empty(),
        empty(),
        empty(),
    ];
    if !validate_omega(&seed, &ctx.model, Some(ctx.settings.well_index)).pass {
        return invalid;
    }
    let cp = match ctx.constrained_whitham(&seed, beta_free) {
        Ok(cp) => cp,
        Err(e) => {
            log::debug!("cell {seed:?}: constraint failed: {e}");
            return invalid;
        }
    };
    match verify_theorem(&cp, &ctx.model, &ctx.settings) {
        Ok(r) => {
            let verdict = if r.concordant {
                verdict_name(r.verdict_normal_form)
            } else {
                "discordant"
            };
            [
                "true".into(),
                "true".into(),
                verdict.into(),
                num(r.max_re_ratio),
                num(r.max_im_speed),
                num(r.max_mismatch),
            ]
        }
        Err(e) => {
            log::debug!("cell {seed:?}: {e}");
            [
                "true".into(),
                "false".into(),
                empty(),
                empty(),
                empty(),
                empty(),
            ]
        }
    }
}

/// Stability map over two coordinates of the seed, one row per cell in raster order.
pub fn sweep(ctx: &Context, out: Option<&Path>) -> Result<i32> {
    let spec = ctx
        .cfg
        .sweep
        .ok_or_else(|| Error::Config("sweep needs a sweep section".into()))?;
    let base = match ctx.cfg.require_seed()? {
        Seed::Whitham(p) => p,
        s @ Seed::Linear(_) => ctx.constrained(&s)?.point,
    };
    let beta_free = spec.x.coord != Coord::Beta && spec.y.coord != Coord::Beta;
    let cells: Vec<(f64, f64)> = spec
        .y
        .values()
        .into_iter()
        .flat_map(|y| spec.x.values().into_iter().map(move |x| (x, y)))
        .collect();
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let mut seed = base;
            spec.x.coord.set(&mut seed, x);
            spec.y.coord.set(&mut seed, y);
            let mut row = vec![num(x), num(y)];
            row.extend(sweep_cell(ctx, seed, beta_free));
            row
        })
        .collect();
    write_csv(out, &SWEEP_HEADER, &rows)?;
    Ok(0)
}

/// The four spectral curves through the origin, their extrapolated slopes,
/// and the normal-form ratios they should reproduce.
pub fn spectrum(ctx: &Context, out: Option<&Path>) -> Result<i32> {
    let mu_list = &ctx.settings.hill_mu_list;
    if mu_list.is_empty() {
        return Err(Error::Config("hill_mu_list is empty".into()));
    }
    let cp = ctx.constrained(&ctx.cfg.require_seed()?)?;
    let pt = &cp.point;
    let wave = profile(
        pt,
        &ctx.model,
        ctx.settings.hill_modes,
        Some(ctx.settings.well_index),
    )?;
    let mu_max = 0.05 * 2.0 * PI / wave.period;
    if let Some(bad) = mu_list.iter().find(|m| m.abs() > mu_max) {
        return Err(Error::Config(format!(
            "|μ| = {bad} exceeds {mu_max:.4e} = 0.05·2π/T*"
        )));
    }
    let curves = near_origin_curves(&wave, &pt.to_linear(), &ctx.model, mu_list)?;

    let mut rows = Vec::new();
    for c in &curves {
        for (j, l) in c.eigenvalues.iter().enumerate() {
            rows.push(vec![
                "eigenvalue".into(),
                num(c.mu),
                j.to_string(),
                num(l.re),
                num(l.im),
            ]);
        }
    }
    if let Some(slopes) = fit_slopes(&curves) {
        for (j, s) in slopes.iter().enumerate() {
            rows.push(vec![
                "slope".into(),
                opt_num(None),
                j.to_string(),
                num(s.re),
                num(s.im),
            ]);
        }
    }
    let jet = action_jet(pt, &ctx.model, &ctx.settings)?;
    let br = compute_brackets(&jet, pt);
    let roots = solve_pencil(&assemble_whitham_pencil(&jet, &br, pt)?)?;
    for (j, r) in roots.ratios.iter().enumerate() {
        rows.push(vec![
            "normal_form".into(),
            opt_num(None),
            j.to_string(),
            num(r.re),
            num(r.im),
        ]);
    }
    write_csv(out, &SPECTRUM_HEADER, &rows)?;
    Ok(0)
}
