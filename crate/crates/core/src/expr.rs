//! The fixed whitelist of one-variable expressions used for scale factors
//! and for time functions of the form `φ(t)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of `const c`, `t`, `t^2`, `exp(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TimeExpr {
    Const(f64),
    T,
    TSquared,
    ExpT,
}

impl TimeExpr {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeExpr::Const(c) => c,
            TimeExpr::T => t,
            TimeExpr::TSquared => t * t,
            TimeExpr::ExpT => t.exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeExpr::Const(_) => 0.0,
            TimeExpr::T => 1.0,
            TimeExpr::TSquared => 2.0 * t,
            TimeExpr::ExpT => t.exp(),
        }
    }

    /// Open interval of times on which the expression is used as a scale factor.
    ///
    /// `t` and `t^2` live on `(0, ∞)`; the others on the whole line.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            TimeExpr::T | TimeExpr::TSquared => (0.0, f64::INFINITY),
            TimeExpr::Const(_) | TimeExpr::ExpT => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Conformal time `u(t) = ∫ dt / f(t)`, with a fixed choice of constant.
    pub fn conformal_time(&self, t: f64) -> f64 {
        match *self {
            TimeExpr::Const(c) => t / c,
            TimeExpr::T => t.ln(),
            TimeExpr::TSquared => -1.0 / t,
            TimeExpr::ExpT => -(-t).exp(),
        }
    }

    pub fn from_conformal_time(&self, u: f64) -> f64 {
        match *self {
            TimeExpr::Const(c) => c * u,
            TimeExpr::T => u.exp(),
            TimeExpr::TSquared => -1.0 / u,
            TimeExpr::ExpT => -(-u).ln(),
        }
    }

    /// Open range of conformal time covered by [`TimeExpr::interval`].
    pub fn conformal_range(&self) -> (f64, f64) {
        match self {
            TimeExpr::Const(_) | TimeExpr::T => (f64::NEG_INFINITY, f64::INFINITY),
            TimeExpr::TSquared | TimeExpr::ExpT => (f64::NEG_INFINITY, 0.0),
        }
    }

    /// Whether `f(t) → 0` as `t → 0⁺` (the spatial slices collapse).
    pub fn vanishes_at_zero(&self) -> bool {
        matches!(self, TimeExpr::T | TimeExpr::TSquared)
    }

    pub fn is_positive_scale(&self) -> bool {
        match *self {
            TimeExpr::Const(c) => c > 0.0 && c.is_finite(),
            _ => true,
        }
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeExpr::Const(c) => write!(f, "const {c}"),
            TimeExpr::T => write!(f, "t"),
            TimeExpr::TSquared => write!(f, "t^2"),
            TimeExpr::ExpT => write!(f, "exp(t)"),
        }
    }
}

impl FromStr for TimeExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "t" => return Ok(TimeExpr::T),
            "t^2" | "t**2" => return Ok(TimeExpr::TSquared),
            "exp(t)" => return Ok(TimeExpr::ExpT),
            _ => {}
        }
        let value = compact
            .strip_prefix("const")
            .map(|rest| rest.trim_start_matches('(').trim_end_matches(')'))
            .unwrap_or(&compact);
        value
            .parse::<f64>()
            .map(TimeExpr::Const)
            .map_err(|_| Error::Argument(format!("expression `{s}` is not one of: const c, t, t^2, exp(t)")))
    }
}

impl TryFrom<String> for TimeExpr {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<TimeExpr> for String {
    fn from(value: TimeExpr) -> Self {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_whitelist() {
        assert_eq!("t".parse::<TimeExpr>().unwrap(), TimeExpr::T);
        assert_eq!(" t ^ 2".parse::<TimeExpr>().unwrap(), TimeExpr::TSquared);
        assert_eq!("exp(t)".parse::<TimeExpr>().unwrap(), TimeExpr::ExpT);
        assert_eq!("const 2.5".parse::<TimeExpr>().unwrap(), TimeExpr::Const(2.5));
        assert_eq!("const(1)".parse::<TimeExpr>().unwrap(), TimeExpr::Const(1.0));
        assert!("sin(t)".parse::<TimeExpr>().is_err());
        assert!("t^3".parse::<TimeExpr>().is_err());
    }

    #[test]
    fn conformal_time_roundtrips() {
        for expr in [TimeExpr::Const(2.0), TimeExpr::T, TimeExpr::TSquared, TimeExpr::ExpT] {
            for t in [0.05, 0.3, 1.0, 2.7] {
                let u = expr.conformal_time(t);
                assert_relative_eq!(expr.from_conformal_time(u), t, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn conformal_time_derivative_is_reciprocal_scale() {
        let h = 1e-6;
        for expr in [TimeExpr::Const(2.0), TimeExpr::T, TimeExpr::TSquared, TimeExpr::ExpT] {
            for t in [0.2, 1.0, 1.9] {
                let du = (expr.conformal_time(t + h) - expr.conformal_time(t - h)) / (2.0 * h);
                assert_relative_eq!(du, 1.0 / expr.eval(t), max_relative = 1e-7);
            }
        }
    }
}
