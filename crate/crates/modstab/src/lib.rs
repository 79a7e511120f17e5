//! Modulational stability of periodic travelling waves of the generalized
//! nonlinear Schrödinger equation.
//!
//! The pipeline runs from a [`PotentialModel`] and a parameter point to
//! turning points ([`wave`]), abelian integrals and their jets ([`action`]),
//! Poisson brackets ([`brackets`]), the quadratic pencil whose roots predict
//! sideband growth ([`normal_form`]), the modulation system and its
//! characteristics ([`whitham_system`]), a cross-check between both
//! ([`equivalence`]) and a numerical Floquet–Bloch oracle ([`hill_oracle`]).

pub mod action;
pub mod brackets;
pub mod equivalence;
pub mod error;
pub mod hill_oracle;
pub mod normal_form;
pub mod numeric;
pub mod potential;
mod scalar;
pub mod settings;
pub mod wave;
pub mod whitham_system;

pub use equivalence::{
    constrain, constrained_from_linear, verify_theorem, ConstrainedPoint, EquivalenceReport,
};
pub use error::{Error, Result};
pub use normal_form::StabilityVerdict;
pub use potential::{Nonlinearity, PotentialModel, PotentialSpec};
pub use settings::{BranchChoice, ComplexStep, Settings, Tolerances};
pub use wave::{LinearPoint, WhithamPoint};
pub use whitham_system::Branch;
