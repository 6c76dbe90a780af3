use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Bounded continuous test functions for weak-* comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// `exp(-x^2 / 2)`
    Gauss,
    /// `1 / (1 + x^2)`
    Lorentz,
    /// `tanh(x)`
    Tanh,
}

impl TestFunction {
    pub const DEFAULTS: [TestFunction; 3] =
        [TestFunction::Gauss, TestFunction::Lorentz, TestFunction::Tanh];

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Gauss => (-0.5 * x * x).exp(),
            TestFunction::Lorentz => 1.0 / (1.0 + x * x),
            TestFunction::Tanh => x.tanh(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    /// An antiderivative, used for exact integrals against piecewise constants.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::Gauss => {
                (std::f64::consts::PI / 2.0).sqrt() * erf(x / std::f64::consts::SQRT_2)
            }
            TestFunction::Lorentz => x.atan(),
            // ln cosh x, written to avoid overflow
            TestFunction::Tanh => {
                let a = x.abs();
                a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
            }
        }
    }

    /// `∫_a^b θ(x) dx`
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Gauss => "gauss",
            TestFunction::Lorentz => "lorentz",
            TestFunction::Tanh => "tanh",
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gauss" => Ok(TestFunction::Gauss),
            "lorentz" => Ok(TestFunction::Lorentz),
            "tanh" => Ok(TestFunction::Tanh),
            other => Err(Error::InvalidArgument(format!(
                "unknown test function `{other}`"
            ))),
        }
    }
}
