use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::whitham_system::Branch;

/// How second derivatives of the action are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComplexStep {
    /// Complex step when the model is analytic, finite differences otherwise.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    #[default]
    Auto,
    EliminateH,
    EliminateJ,
}

impl BranchChoice {
    pub fn fixed(self) -> Option<Branch> {
        match self {
            BranchChoice::Auto => None,
            BranchChoice::EliminateH => Some(Branch::EliminateH),
            BranchChoice::EliminateJ => Some(Branch::EliminateJ),
        }
    }
}

/// Relative tolerances used for verdicts; all are multiplied by a natural scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Stability threshold as a fraction of `max |r_j|`.
    pub stability: f64,
    /// Allowed mismatch between `c_j` and `U + i r_j`, as a fraction of `max |r_j|`.
    pub theorem: f64,
    /// Allowed relative error of the Hill-oracle slopes.
    pub hill: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stability: 1e-6,
            theorem: 1e-6,
            hill: 1e-3,
        }
    }
}

/// Numerical knobs shared by the whole pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub quad_order: usize,
    pub fd_scale: f64,
    pub use_complex_step: ComplexStep,
    pub well_index: usize,
    pub profile_samples: usize,
    pub hill_modes: usize,
    pub hill_mu_list: Vec<f64>,
    pub branch: BranchChoice,
    pub tolerances: Tolerances,
    /// Compare every base-point quadrature against the doubled rule.
    pub check_convergence: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            quad_order: 96,
            fd_scale: 1e-7,
            use_complex_step: ComplexStep::Auto,
            well_index: 0,
            profile_samples: 256,
            hill_modes: 256,
            hill_mu_list: vec![5e-4, 1e-3, 2e-3],
            branch: BranchChoice::Auto,
            tolerances: Tolerances::default(),
            check_convergence: true,
        }
    }
}

impl Settings {
    pub fn with_finite_differences(mut self) -> Self {
        self.use_complex_step = ComplexStep::Off;
        self
    }

    /// Reject values no computation could succeed with.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.quad_order < 8 {
            return bad(format!(
                "quad_order must be at least 8, got {}",
                self.quad_order
            ));
        }
        if !(self.fd_scale > 0.0 && self.fd_scale < 1e-2) {
            return bad(format!(
                "fd_scale must lie in (0, 1e-2), got {}",
                self.fd_scale
            ));
        }
        if self.profile_samples == 0 {
            return bad("profile_samples must be positive".into());
        }
        if self.hill_modes < 64 || !self.hill_modes.is_power_of_two() {
            return bad(format!(
                "hill_modes must be a power of two ≥ 64, got {}",
                self.hill_modes
            ));
        }
        if self.hill_mu_list.iter().any(|m| !m.is_finite()) {
            return bad("hill_mu_list entries must be finite".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("stability", t.stability),
            ("theorem", t.theorem),
            ("hill", t.hill),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}
