use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius of the confining ball as a function of the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RadiusFunction {
    /// `c * t^alpha` with `0 < alpha < 1/2`.
    Power { c: f64, alpha: f64 },
    /// `c * (log t)^(1/dim)`.
    LogPower { c: f64, dim: usize },
    Constant { r0: f64 },
}

impl RadiusFunction {
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        let f = RadiusFunction::Power { c, alpha };
        f.validate()?;
        Ok(f)
    }

    pub fn log_power(c: f64, dim: usize) -> Result<Self> {
        let f = RadiusFunction::LogPower { c, dim };
        f.validate()?;
        Ok(f)
    }

    pub fn constant(r0: f64) -> Result<Self> {
        let f = RadiusFunction::Constant { r0 };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            RadiusFunction::Power { c, alpha } => {
                positive("radius.c", c)?;
                if !(alpha > 0.0 && alpha < 0.5) {
                    return Err(Error::param(
                        "radius.alpha",
                        format!("must lie in (0, 1/2), got {alpha}"),
                    ));
                }
                Ok(())
            }
            RadiusFunction::LogPower { c, dim } => {
                positive("radius.c", c)?;
                if dim == 0 {
                    return Err(Error::param("radius.dim", "must be at least 1"));
                }
                Ok(())
            }
            RadiusFunction::Constant { r0 } => positive("radius.r0", r0),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            RadiusFunction::Power { c, alpha } => {
                if !(t > 0.0) {
                    return Err(Error::param("t", format!("must be positive, got {t}")));
                }
                Ok(c * t.powf(alpha))
            }
            RadiusFunction::LogPower { c, dim } => {
                if !(t > 1.0) {
                    return Err(Error::param("t", format!("must exceed 1, got {t}")));
                }
                Ok(c * t.ln().powf(1.0 / dim as f64))
            }
            RadiusFunction::Constant { r0 } => Ok(r0),
        }
    }
}
