//! The JSON run configuration. Every key is optional except `potential`;
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use modstab::equivalence::SampleBoxes;
use modstab::{
    Branch, BranchChoice, ComplexStep, Error, LinearPoint, PotentialModel, PotentialSpec, Result,
    Settings, Tolerances, WhithamPoint,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    /// Seed in Whitham coordinates; `H` (or `J`, see `solve_for`) is re-solved onto `W_J = 0`.
    #[serde(default)]
    pub point: Option<WhithamPoint>,
    /// Alternative seed in linear coordinates plus the gauge `U`; lands on `W_J = 0` exactly.
    #[serde(default)]
    pub linear_point: Option<LinearSeed>,
    #[serde(default)]
    pub solve_for: SolveFor,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub batch: Option<BatchSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub branch: BranchChoice,
    #[serde(default)]
    pub quad_order: Option<usize>,
    #[serde(default)]
    pub fd_scale: Option<f64>,
    #[serde(default)]
    pub use_complex_step: Option<ComplexStep>,
    #[serde(default)]
    pub well_index: Option<usize>,
    #[serde(default)]
    pub profile_samples: Option<usize>,
    #[serde(default)]
    pub hill_modes: Option<usize>,
    #[serde(default)]
    pub hill_mu_list: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSeed {
    #[serde(rename = "E")]
    pub e: f64,
    pub kappa: f64,
    pub omega: f64,
    pub zeta: f64,
    #[serde(rename = "U")]
    pub u: f64,
}

impl LinearSeed {
    pub fn linear(&self) -> LinearPoint {
        LinearPoint::new(self.e, self.kappa, self.omega, self.zeta)
    }
}

/// Coordinate moved to reach the dispersion manifold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
pub enum SolveFor {
    #[default]
    H,
    J,
}

impl SolveFor {
    pub fn branch(self) -> Branch {
        match self {
            SolveFor::H => Branch::EliminateH,
            SolveFor::J => Branch::EliminateJ,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum Coord {
    H,
    J,
    U,
    #[serde(rename = "gamma_star")]
    GammaStar,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "zeta")]
    Zeta,
}

impl Coord {
    pub fn set(self, p: &mut WhithamPoint, v: f64) {
        match self {
            Coord::H => p.h = v,
            Coord::J => p.j = v,
            Coord::U => p.u = v,
            Coord::GammaStar => p.gamma_star = v,
            Coord::Beta => p.beta = v,
            Coord::Zeta => p.zeta = v,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub coord: Coord,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config(format!(
                "sweep.{name}.count must be at least 1"
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!("sweep.{name} range must be finite")));
        }
        Ok(())
    }
}

/// Two swept coordinates; `x` varies fastest.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub x: Axis,
    pub y: Axis,
}

/// Random constrained points for `verify`, drawn with the top-level `seed`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    pub count: usize,
    #[serde(default)]
    pub boxes: SampleBoxes,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(s) = &cfg.sweep {
            s.x.validate("x")?;
            s.y.validate("y")?;
            if s.x.coord == s.y.coord {
                return Err(Error::Config("sweep.x and sweep.y must differ".into()));
            }
        }
        if cfg.point.is_some() && cfg.linear_point.is_some() {
            return Err(Error::Config(
                "give either point or linear_point, not both".into(),
            ));
        }
        if let Some(b) = &cfg.batch {
            if b.count == 0 {
                return Err(Error::Config("batch.count must be at least 1".into()));
            }
        }
        cfg.settings()?;
        Ok(cfg)
    }

    pub fn settings(&self) -> Result<Settings> {
        let d = Settings::default();
        let s = Settings {
            quad_order: self.quad_order.unwrap_or(d.quad_order),
            fd_scale: self.fd_scale.unwrap_or(d.fd_scale),
            use_complex_step: self.use_complex_step.unwrap_or(d.use_complex_step),
            well_index: self.well_index.unwrap_or(d.well_index),
            profile_samples: self.profile_samples.unwrap_or(d.profile_samples),
            hill_modes: self.hill_modes.unwrap_or(d.hill_modes),
            hill_mu_list: self.hill_mu_list.clone().unwrap_or(d.hill_mu_list),
            branch: self.branch,
            tolerances: self.tolerances,
            check_convergence: d.check_convergence,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn model(&self) -> Result<PotentialModel> {
        PotentialModel::from_spec(&self.potential)
    }

    pub fn require_seed(&self) -> Result<Seed> {
        match (self.point, self.linear_point) {
            (Some(p), None) => Ok(Seed::Whitham(p)),
            (None, Some(l)) => Ok(Seed::Linear(l)),
            _ => Err(Error::Config(
                "this command needs point or linear_point".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Seed {
    Whitham(WhithamPoint),
    Linear(LinearSeed),
}

impl Seed {
    /// The seed as a Whitham point; linear seeds take `β = 0` (the gauge is fixed later).
    pub fn whitham(&self) -> WhithamPoint {
        match self {
            Seed::Whitham(p) => *p,
            Seed::Linear(l) => WhithamPoint::from_linear(&l.linear(), l.u, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"potential": {"name": "cubic"}, "point": {"H": 0.6, "U": 0.7, "J": 0.8, "gamma_star": 0.9, "beta": 0.39, "zeta": 1.0}"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::parse(&format!("{BASE}}}")).unwrap();
        assert_eq!(cfg.settings().unwrap(), Settings::default());
        assert!(matches!(cfg.require_seed().unwrap(), Seed::Whitham(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse(&format!(r#"{BASE}, "quadrature": 12}}"#)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let nested = r#"{"potential": {"name": "cubic", "power": 3}}"#;
        assert!(RunConfig::parse(nested).is_err());
    }

    #[test]
    fn sweep_axes_are_validated() {
        let ok = format!(
            r#"{BASE}, "sweep": {{"x": {{"coord": "gamma_star", "min": 0, "max": 1, "count": 3}}, "y": {{"coord": "zeta", "min": -1, "max": 1, "count": 2}}}}}}"#
        );
        let cfg = RunConfig::parse(&ok).unwrap();
        assert_eq!(cfg.sweep.unwrap().x.values(), vec![0.0, 0.5, 1.0]);
        let zero = ok.replace(r#""count": 2"#, r#""count": 0"#);
        assert!(RunConfig::parse(&zero).is_err());
        let same = ok.replace(r#""coord": "zeta""#, r#""coord": "gamma_star""#);
        assert!(RunConfig::parse(&same).is_err());
    }

    #[test]
    fn bad_settings_are_config_errors() {
        let err = RunConfig::parse(&format!(r#"{BASE}, "hill_modes": 100}}"#)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
