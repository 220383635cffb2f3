//! Regularization schedules with exact analytic derivative and integral.
//! Closed forms keep the decay-bound diagnostics free of quadrature error.

use crate::error::{Error, Result};
use serde::Serialize;

/// The two schedule shapes: constant eps > 0, and the decaying power law
/// eps(t) = c1/(c0+t)^b with 0 < b < 1. The exponent is validated strictly
/// inside the interval: b >= 1 would make the integral of eps converge and
/// b <= 0 would stop t*eps(t) from diverging, and the limit theory needs both
/// divergences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EpsilonSchedule {
    Constant { eps: f64 },
    PowerLaw { c0: f64, c1: f64, b: f64 },
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constant schedule needs eps > 0, got {eps}"
            )));
        }
        Ok(EpsilonSchedule::Constant { eps })
    }

    pub fn power_law(c0: f64, c1: f64, b: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law schedule needs c0 > 0, got {c0}"
            )));
        }
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law schedule needs c1 > 0, got {c1}"
            )));
        }
        if !(b.is_finite() && b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law schedule needs b strictly inside (0,1), got {b}"
            )));
        }
        Ok(EpsilonSchedule::PowerLaw { c0, c1, b })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, EpsilonSchedule::Constant { .. })
    }

    /// eps(t).
    pub fn eps(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match *self {
            EpsilonSchedule::Constant { eps } => eps,
            EpsilonSchedule::PowerLaw { c0, c1, b } => c1 * (c0 + t).powf(-b),
        })
    }

    /// d(eps)/dt; nonpositive for both shapes.
    pub fn eps_dot(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match *self {
            EpsilonSchedule::Constant { .. } => 0.0,
            EpsilonSchedule::PowerLaw { c0, c1, b } => -b * c1 * (c0 + t).powf(-b - 1.0),
        })
    }

    /// Integral of eps over [0, t]; strictly increasing and unbounded in t.
    pub fn eps_integral(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match *self {
            EpsilonSchedule::Constant { eps } => eps * t,
            EpsilonSchedule::PowerLaw { c0, c1, b } => {
                let a = 1.0 - b;
                c1 * ((c0 + t).powf(a) - c0.powf(a)) / a
            }
        })
    }

    /// t * eps(t); for the power law this grows like t^(1-b).
    pub fn t_eps_product(&self, t: f64) -> Result<f64> {
        Ok(t * self.eps(t)?)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}
