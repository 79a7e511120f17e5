//! Nonlinearities `f(|ψ|²)` and their antiderivatives `F`.
//!
//! Every model carries closed forms for `f`, `F` and `f′`, plus the divided
//! difference `(F(s) − F(t))/(s − t)` that the root-factored quadrature needs
//! without cancellation when `s → t`.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_S_MAX: f64 = 1e6;

/// Extension point for user-supplied nonlinearities.
///
/// Only real evaluation is required. Custom models are never fed complex
/// arguments, so complex-step differentiation is disabled for them.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    fn f(&self, s: f64) -> f64;
    fn big_f(&self, s: f64) -> f64;
    fn df(&self, s: f64) -> f64;

    fn big_f_slope(&self, s: f64, t: f64) -> f64 {
        let d = s - t;
        if d.abs() > 1e-4 * s.abs().max(t.abs()) {
            (self.big_f(s) - self.big_f(t)) / d
        } else {
            // Simpson on [t, s] is exact to O(d⁴) here.
            (self.f(s) + 4.0 * self.f(0.5 * (s + t)) + self.f(t)) / 6.0
        }
    }

    fn s_max(&self) -> f64 {
        DEFAULT_S_MAX
    }
}

#[derive(Clone, Debug)]
enum Kind {
    /// f(s) = Σ c_k s^{k+1}
    Polynomial(Vec<f64>),
    /// f(s) = s/(1 + a s)
    Saturable(f64),
    Custom(Arc<dyn Nonlinearity>),
}

/// Named model as it appears in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub name: String,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PotentialModel {
    name: String,
    coefficients: Vec<f64>,
    kind: Kind,
}

impl PotentialModel {
    /// f(s) = s.
    pub fn cubic() -> Self {
        Self::polynomial_named("cubic", vec![1.0])
    }

    /// f(s) = s + c₅ s².
    pub fn cubic_quintic(c5: f64) -> Self {
        Self::polynomial_named("cubic-quintic", vec![1.0, c5])
    }

    /// f(s) = s/(1 + s).
    pub fn saturable() -> Self {
        Self::saturable_with(1.0)
    }

    pub fn saturable_with(a: f64) -> Self {
        PotentialModel {
            name: "saturable".into(),
            coefficients: vec![a],
            kind: Kind::Saturable(a),
        }
    }

    /// f ≡ 0: linear Schrödinger, the ζ-term drops out entirely.
    pub fn zero() -> Self {
        Self::polynomial_named("zero", vec![])
    }

    /// f(s) = c₀ s + c₁ s² + c₂ s³ + …
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self::polynomial_named("polynomial", coefficients)
    }

    pub fn custom(name: impl Into<String>, model: Arc<dyn Nonlinearity>) -> Self {
        PotentialModel {
            name: name.into(),
            coefficients: vec![],
            kind: Kind::Custom(model),
        }
    }

    fn polynomial_named(name: &str, coefficients: Vec<f64>) -> Self {
        PotentialModel {
            name: name.into(),
            kind: Kind::Polynomial(coefficients.clone()),
            coefficients,
        }
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let c = &spec.coefficients;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(
                "potential coefficients must be finite".into(),
            ));
        }
        let arity = |n: usize| {
            if c.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "potential '{}' takes {n} coefficient(s), got {}",
                    spec.name,
                    c.len()
                )))
            }
        };
        match spec.name.as_str() {
            "cubic" if c.is_empty() => Ok(Self::cubic()),
            "cubic" => {
                arity(1)?;
                Ok(Self::polynomial_named("cubic", c.clone()))
            }
            "cubic-quintic" => {
                arity(2)?;
                Ok(Self::polynomial_named("cubic-quintic", c.clone()))
            }
            "saturable" if c.is_empty() => Ok(Self::saturable()),
            "saturable" => {
                arity(1)?;
                if c[0] <= 0.0 {
                    return Err(Error::Config(
                        "saturable coefficient must be positive".into(),
                    ));
                }
                Ok(Self::saturable_with(c[0]))
            }
            "zero" => {
                arity(0)?;
                Ok(Self::zero())
            }
            "polynomial" => Ok(Self::polynomial(c.clone())),
            other => Err(Error::Config(format!("unknown potential '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Whether the closed forms extend analytically to complex `s`.
    pub fn analytic_in_s(&self) -> bool {
        !matches!(self.kind, Kind::Custom(_))
    }

    pub fn s_max(&self) -> f64 {
        match &self.kind {
            Kind::Custom(m) => m.s_max(),
            _ => DEFAULT_S_MAX,
        }
    }

    fn check(&self, s: f64) -> Result<()> {
        if !(0.0..=self.s_max()).contains(&s) {
            return Err(Error::Domain(format!(
                "s = {s} outside [0, {}] for model '{}'",
                self.s_max(),
                self.name
            )));
        }
        Ok(())
    }

    pub fn eval_f(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.f(s))
    }

    pub fn eval_big_f(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.big_f(s))
    }

    pub fn eval_df(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.df(s))
    }

    pub(crate) fn f<S: Scalar>(&self, s: S) -> S {
        match &self.kind {
            Kind::Polynomial(c) => horner(c, s) * s,
            Kind::Saturable(a) => s / (s * *a + 1.0),
            Kind::Custom(m) => S::from_f64(m.f(s.re())),
        }
    }

    pub(crate) fn big_f<S: Scalar>(&self, s: S) -> S {
        match &self.kind {
            Kind::Polynomial(c) => {
                let scaled: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .map(|(k, ck)| ck / (k + 2) as f64)
                    .collect();
                horner(&scaled, s) * s * s
            }
            Kind::Saturable(a) => {
                let x = s * *a;
                (x - x.ln_1p()) / (a * a)
            }
            Kind::Custom(m) => S::from_f64(m.big_f(s.re())),
        }
    }

    pub(crate) fn df(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Polynomial(c) => c
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, ck)| acc * s + (k + 1) as f64 * ck),
            Kind::Saturable(a) => 1.0 / (1.0 + a * s).powi(2),
            Kind::Custom(m) => m.df(s),
        }
    }

    /// `(F(s) − F(t))/(s − t)`, continuous across `s = t`.
    pub(crate) fn big_f_slope<S: Scalar>(&self, s: S, t: S) -> S {
        match &self.kind {
            Kind::Polynomial(c) => {
                // (sⁿ − tⁿ)/(s − t) = Σ_{i<n} sⁱ t^{n−1−i}
                let mut total = S::from_f64(0.0);
                for (k, ck) in c.iter().enumerate() {
                    let n = k + 2;
                    let mut term = S::from_f64(0.0);
                    for i in 0..n {
                        term = term + s.powi(i as u32) * t.powi((n - 1 - i) as u32);
                    }
                    total = total + term * (ck / n as f64);
                }
                total
            }
            Kind::Saturable(a) => {
                let (x, y) = (s * *a, t * *a);
                let d = x - y;
                let one_plus_y = y + 1.0;
                let u = d / one_plus_y;
                // ln((1+x)/(1+y))/(x−y), series once the log would cancel.
                let l = if u.abs() < 1e-3 {
                    // ln(1+u)/u = 1 − u/2 + u²/3 − u³/4 + u⁴/5 − u⁵/6 + O(u⁶)
                    let tail = (u * (-1.0 / 6.0) + 0.2) * u - 0.25;
                    let poly = ((tail * u + 1.0 / 3.0) * u - 0.5) * u + 1.0;
                    poly / one_plus_y
                } else {
                    u.ln_1p() / d
                };
                (-l + 1.0) / *a
            }
            Kind::Custom(m) => S::from_f64(m.big_f_slope(s.re(), t.re())),
        }
    }

    /// Collocation determinant of `{F, 1, x, 1/x}` at four points, columns
    /// normalised. Non-zero means `F` is not in the span of the other three.
    pub fn basis_independence(&self) -> f64 {
        let xs = [0.5, 1.0, 2.0, 3.5];
        let mut m = Matrix4::from_fn(|i, j| {
            let x = xs[i];
            match j {
                0 => self.big_f(x),
                1 => 1.0,
                2 => x,
                _ => 1.0 / x,
            }
        });
        for mut col in m.column_iter_mut() {
            let n = col.norm();
            if n > 0.0 {
                col /= n;
            }
        }
        m.determinant()
    }
}

fn horner<S: Scalar>(c: &[f64], s: S) -> S {
    c.iter()
        .rev()
        .fold(S::from_f64(0.0), |acc, ck| acc * s + *ck)
}
