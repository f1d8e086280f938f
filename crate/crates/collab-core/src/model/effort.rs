//! Effort-to-quality maps.
//!
//! Players choose target qualities; the effort required to reach quality `q`
//! is an increasing convex function `x(q)` with `x(0) = 0`. The quality side
//! `q(x)` is its concave inverse.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Convex effort requirement `x(q)` for one (player, project) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffortMap {
    /// Quality is linear in effort: `q = a·x`, so `x(q) = q/a`.
    LinearAbility { ability: f64 },
    /// Convex effort requirement `x(q) = c·q^p` with `p >= 1`, `c > 0`.
    PowerConvex { exponent: f64, scale: f64 },
}

impl EffortMap {
    /// Identity map (`q = x`), the common case in the worked examples.
    pub fn identity() -> Self {
        EffortMap::LinearAbility { ability: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EffortMap::LinearAbility { ability } => {
                if !(ability > 0.0) {
                    return Err(Error::NonPositive { what: "ability", value: ability });
                }
            }
            EffortMap::PowerConvex { exponent, scale } => {
                if !(scale > 0.0) {
                    return Err(Error::NonPositive { what: "effort map scale", value: scale });
                }
                if !(exponent >= 1.0) {
                    return Err(Error::Domain(format!(
                        "effort map exponent must be >= 1, got {exponent}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Effort needed to produce quality `q`.
    pub fn effort_of_quality(&self, q: f64) -> Result<f64> {
        if q < 0.0 {
            return Err(Error::Domain(format!("quality must be nonnegative, got {q}")));
        }
        Ok(match *self {
            EffortMap::LinearAbility { ability } => q / ability,
            EffortMap::PowerConvex { exponent, scale } => scale * q.powf(exponent),
        })
    }

    /// Quality produced by effort `x`; inverse of [`Self::effort_of_quality`].
    pub fn quality_of_effort(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("effort must be nonnegative, got {x}")));
        }
        Ok(match *self {
            EffortMap::LinearAbility { ability } => ability * x,
            EffortMap::PowerConvex { exponent, scale } => (x / scale).powf(1.0 / exponent),
        })
    }

    /// Marginal effort `x'(q)`; nondecreasing by convexity.
    pub fn effort_derivative(&self, q: f64) -> f64 {
        match *self {
            EffortMap::LinearAbility { ability } => 1.0 / ability,
            EffortMap::PowerConvex { exponent, scale } => {
                if exponent == 1.0 {
                    scale
                } else {
                    scale * exponent * q.max(0.0).powf(exponent - 1.0)
                }
            }
        }
    }
}
