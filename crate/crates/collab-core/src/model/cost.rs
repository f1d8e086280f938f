//! Player cost models: a hard budget of effort, or a soft convex cost of
//! total effort.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    /// Hard constraint: total effort at most `budget`.
    HardBudget { budget: f64 },
    /// Soft cost `c(x) = kappa·x^(1+mu)` with constant elasticity `1 + mu`.
    SoftPower { kappa: f64, mu: f64 },
    /// Soft linear cost `c(x) = x` (elasticity exactly 1).
    SoftLinear,
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostModel::HardBudget { budget } => {
                if !(budget > 0.0) {
                    return Err(Error::NonPositive { what: "budget", value: budget });
                }
            }
            CostModel::SoftPower { kappa, mu } => {
                if !(kappa > 0.0) {
                    return Err(Error::NonPositive { what: "cost kappa", value: kappa });
                }
                if !(mu >= 0.0) {
                    return Err(Error::Negative { what: "cost mu", value: mu });
                }
            }
            CostModel::SoftLinear => {}
        }
        Ok(())
    }

    pub fn is_hard(&self) -> bool {
        matches!(self, CostModel::HardBudget { .. })
    }

    /// Budget for hard-budget players.
    pub fn budget(&self) -> Option<f64> {
        match *self {
            CostModel::HardBudget { budget } => Some(budget),
            _ => None,
        }
    }

    /// Cost of total effort `x`; zero for hard-budget players (the
    /// constraint lives in the strategy space, not the utility).
    pub fn cost(&self, x: f64) -> f64 {
        match *self {
            CostModel::HardBudget { .. } => 0.0,
            CostModel::SoftPower { kappa, mu } => kappa * x.powf(1.0 + mu),
            CostModel::SoftLinear => x,
        }
    }

    /// Marginal cost `c'(x)`.
    pub fn marginal_cost(&self, x: f64) -> f64 {
        match *self {
            CostModel::HardBudget { .. } => 0.0,
            CostModel::SoftPower { kappa, mu } => {
                if mu == 0.0 {
                    kappa
                } else {
                    kappa * (1.0 + mu) * x.max(0.0).powf(mu)
                }
            }
            CostModel::SoftLinear => 1.0,
        }
    }
}
