//! Project value functions.
//!
//! All kinds are zero at zero and submodular over the coordinate lattice;
//! all except `SinglePeaked` are monotone. The concave-of-sum kinds expose
//! the total value `v(Q)`, its derivative `v'(Q)`, and the mean value
//! `v̄(Q) = v(Q)/Q` used throughout the proportional-sharing analysis.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueFunction {
    /// Constant-elasticity value `w·Q^alpha`, `w > 0`, `0 < alpha <= 1`.
    Power { weight: f64, alpha: f64 },
    /// Saturating value `kappa·(1 − e^(−beta·Q))`.
    Saturating { kappa: f64, beta: f64 },
    /// `Q^(1/2)`; shorthand for `Power { weight: 1, alpha: 0.5 }`.
    Sqrt,
    /// Highest submitted quality, `max_i q_i`.
    MaxQuality,
    /// Non-monotone single-peaked family `r·Q·(1 − Q)` with `r > 0`;
    /// peaks at `Q = 1/2` and returns to zero at `Q = 1`.
    SinglePeaked { r: f64 },
}

impl ValueFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ValueFunction::Power { weight, alpha } => {
                if !(weight > 0.0) {
                    return Err(Error::NonPositive { what: "value weight", value: weight });
                }
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::AlphaOutOfRange(alpha));
                }
            }
            ValueFunction::Saturating { kappa, beta } => {
                if !(kappa > 0.0) {
                    return Err(Error::NonPositive { what: "value kappa", value: kappa });
                }
                if !(beta > 0.0) {
                    return Err(Error::NonPositive { what: "value beta", value: beta });
                }
            }
            ValueFunction::SinglePeaked { r } => {
                if !(r > 0.0) {
                    return Err(Error::NonPositive { what: "single-peaked r", value: r });
                }
            }
            ValueFunction::Sqrt | ValueFunction::MaxQuality => {}
        }
        Ok(())
    }

    /// True for every kind whose value depends on the qualities only through
    /// their sum (everything except `MaxQuality`).
    pub fn is_concave_of_sum(&self) -> bool {
        !matches!(self, ValueFunction::MaxQuality)
    }

    /// True for every kind except the single-peaked family.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, ValueFunction::SinglePeaked { .. })
    }

    /// Project value for a vector of submitted qualities.
    pub fn value(&self, q: &[f64]) -> f64 {
        match self {
            ValueFunction::MaxQuality => q.iter().copied().fold(0.0, f64::max),
            _ => self.value_of_total(q.iter().sum()),
        }
    }

    /// `v(Q)` for the concave-of-sum kinds. For `MaxQuality` the total is
    /// meaningless; callers gate on [`Self::is_concave_of_sum`], and the
    /// single-participant case (where total == max) is the only path here.
    pub fn value_of_total(&self, total: f64) -> f64 {
        let q = total.max(0.0);
        match *self {
            ValueFunction::Power { weight, alpha } => weight * q.powf(alpha),
            ValueFunction::Saturating { kappa, beta } => kappa * (1.0 - (-beta * q).exp()),
            ValueFunction::Sqrt => q.sqrt(),
            ValueFunction::MaxQuality => q,
            ValueFunction::SinglePeaked { r } => r * q * (1.0 - q),
        }
    }

    /// `v'(Q)`; returns `+inf` at `Q = 0` for kinds with unbounded slope.
    pub fn total_derivative(&self, total: f64) -> f64 {
        let q = total.max(0.0);
        match *self {
            ValueFunction::Power { weight, alpha } => {
                if alpha == 1.0 {
                    weight
                } else if q == 0.0 {
                    f64::INFINITY
                } else {
                    weight * alpha * q.powf(alpha - 1.0)
                }
            }
            ValueFunction::Saturating { kappa, beta } => kappa * beta * (-beta * q).exp(),
            ValueFunction::Sqrt => {
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    0.5 / q.sqrt()
                }
            }
            ValueFunction::MaxQuality => 1.0,
            ValueFunction::SinglePeaked { r } => r * (1.0 - 2.0 * q),
        }
    }

    /// Mean value `v̄(Q) = v(Q)/Q`; continuously extended by `v'(0)` at zero.
    pub fn mean_value(&self, total: f64) -> f64 {
        let q = total.max(0.0);
        if q == 0.0 {
            return self.total_derivative(0.0);
        }
        self.value_of_total(q) / q
    }

    /// Derivative of the mean value, `v̄'(Q) = (v'(Q)·Q − v(Q)) / Q²`;
    /// nonpositive for the concave kinds.
    pub fn mean_value_derivative(&self, total: f64) -> f64 {
        let q = total.max(0.0);
        if q == 0.0 {
            return 0.0;
        }
        (self.total_derivative(q) * q - self.value_of_total(q)) / (q * q)
    }

    /// Marginal contribution of participant `i`: `v(q) − v(q with q_i = 0)`.
    pub fn marginal_contribution(&self, q: &[f64], i: usize) -> Result<f64> {
        if i >= q.len() {
            return Err(Error::IndexOutOfRange { index: i, len: q.len() });
        }
        if q[i] == 0.0 {
            return Ok(0.0);
        }
        match self {
            ValueFunction::MaxQuality => {
                let full = self.value(q);
                let rest = q
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, &v)| v)
                    .fold(0.0, f64::max);
                Ok(full - rest)
            }
            _ => {
                let total: f64 = q.iter().sum();
                Ok(self.value_of_total(total) - self.value_of_total(total - q[i]))
            }
        }
    }
}
