//! Real/complex abstraction so the quadrature can run on complex-perturbed
//! parameters (complex-step differentiation) without a second implementation.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn re(self) -> f64;
    fn sqrt(self) -> Self;
    fn ln_1p(self) -> Self;
    fn recip(self) -> Self {
        Self::from_f64(1.0) / self
    }
    fn powi(self, n: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn powi(self, n: u32) -> Self {
        f64::powi(self, n as i32)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn ln_1p(self) -> Self {
        // ln|1+z| = ln1p(x) + ½ ln1p(y²/(1+x)²) keeps the real part accurate near 0.
        let (x, y) = (self.re, self.im);
        let t = y / (1.0 + x);
        Complex64::new(x.ln_1p() + 0.5 * (t * t).ln_1p(), y.atan2(1.0 + x))
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}
