//! Text instance format.
//!
//! Instances are JSON documents with top-level `players`, `projects`,
//! `sharing`, and `epsilon_floor` fields:
//!
//! ```json
//! {
//!   "sharing": "proportional",
//!   "epsilon_floor": null,
//!   "players": [
//!     {
//!       "id": "alice",
//!       "cost": { "kind": "hard_budget", "budget": 1.0 },
//!       "projects": { "docs": { "kind": "linear_ability", "ability": 2.0 } }
//!     }
//!   ],
//!   "projects": [
//!     { "id": "docs", "value": { "kind": "power", "weight": 1.0, "alpha": 0.5 } }
//!   ]
//! }
//! ```
//!
//! Sharing rules are selected by string: `proportional`,
//! `marginal_proportional`, `shapley_exact`, `shapley_sampled:S`,
//! `ranking_harmonic`, `ranking_harmonic_quality`, `winner_take_all`.
//! A project may override the instance-wide rule with its own `sharing`
//! field. Players may carry an optional `types` list (finite type support
//! for the incomplete-information simulation); each entry holds `prob`, a
//! `cost`, and `projects` maps over the same participation set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CostModel, EffortMap, Instance, PlayerSpec, ProjectSpec, ValueFunction};
use crate::sharing::{RankingOrder, SharingRule};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawInstance {
    pub players: Vec<RawPlayer>,
    pub projects: Vec<RawProject>,
    #[serde(default = "default_sharing")]
    pub sharing: String,
    #[serde(default)]
    pub epsilon_floor: Option<f64>,
}

fn default_sharing() -> String {
    "proportional".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPlayer {
    pub id: String,
    pub cost: CostModel,
    pub projects: BTreeMap<String, EffortMap>,
    /// Optional finite type support: `[{prob, cost, projects}, ...]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<RawPlayerType>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPlayerType {
    pub prob: f64,
    pub cost: CostModel,
    pub projects: BTreeMap<String, EffortMap>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawProject {
    pub id: String,
    pub value: ValueFunction,
    #[serde(default)]
    pub sharing: Option<String>,
}

/// Parses a sharing-rule selection string.
pub fn parse_sharing_rule(s: &str) -> Result<SharingRule> {
    match s {
        "proportional" => Ok(SharingRule::Proportional),
        "marginal_proportional" => Ok(SharingRule::MarginalProportional),
        "shapley_exact" => Ok(SharingRule::ShapleyExact),
        "ranking_harmonic" => {
            Ok(SharingRule::RankingHarmonic { order: RankingOrder::MarginalContribution })
        }
        "ranking_harmonic_quality" => {
            Ok(SharingRule::RankingHarmonic { order: RankingOrder::Quality })
        }
        "winner_take_all" => Ok(SharingRule::WinnerTakeAll),
        other => {
            if let Some(rest) = other.strip_prefix("shapley_sampled:") {
                let samples: usize = rest
                    .parse()
                    .map_err(|_| Error::UnknownSharingRule(other.to_string()))?;
                if samples == 0 {
                    return Err(Error::Domain(
                        "shapley_sampled requires at least one sample".into(),
                    ));
                }
                return Ok(SharingRule::ShapleySampled { samples, seed: 0 });
            }
            Err(Error::UnknownSharingRule(other.to_string()))
        }
    }
}

impl RawInstance {
    /// Validates into an [`Instance`], building both participation indices.
    pub fn validate(&self) -> Result<Instance> {
        let default_rule = parse_sharing_rule(&self.sharing)?;
        let players = self
            .players
            .iter()
            .map(|p| PlayerSpec {
                id: p.id.clone(),
                cost: p.cost,
                projects: p.projects.clone(),
            })
            .collect();
        let projects = self
            .projects
            .iter()
            .map(|p| {
                Ok(ProjectSpec {
                    id: p.id.clone(),
                    value: p.value,
                    sharing: p.sharing.as_deref().map(parse_sharing_rule).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(players, projects, default_rule, self.epsilon_floor)
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text)?;
    raw.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "sharing": "proportional",
        "players": [
            {"id": "a", "cost": {"kind": "hard_budget", "budget": 1.0},
             "projects": {"p": {"kind": "linear_ability", "ability": 1.0},
                          "q": {"kind": "power_convex", "exponent": 2.0, "scale": 1.0}}},
            {"id": "b", "cost": {"kind": "soft_power", "kappa": 1.0, "mu": 1.0},
             "projects": {"p": {"kind": "linear_ability", "ability": 2.0}}}
        ],
        "projects": [
            {"id": "p", "value": {"kind": "power", "weight": 1.0, "alpha": 0.5}},
            {"id": "q", "value": {"kind": "max_quality"}, "sharing": "winner_take_all"}
        ]
    }"#;

    #[test]
    fn parses_sample() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.n_players(), 2);
        assert_eq!(inst.n_projects(), 2);
        assert!(matches!(inst.project(1).sharing, SharingRule::WinnerTakeAll));
        assert!(matches!(inst.project(0).sharing, SharingRule::Proportional));
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        let bad = SAMPLE.replace("\"alpha\": 0.5", "\"alpha\": 1.5");
        let err = parse_instance(&bad).unwrap_err();
        assert!(matches!(err, Error::AlphaOutOfRange(_)), "{err}");
    }

    #[test]
    fn rule_strings_round_trip() {
        for s in [
            "proportional",
            "marginal_proportional",
            "shapley_exact",
            "shapley_sampled:500",
            "ranking_harmonic",
            "ranking_harmonic_quality",
            "winner_take_all",
        ] {
            parse_sharing_rule(s).unwrap();
        }
        assert!(parse_sharing_rule("equal_split").is_err());
        assert!(parse_sharing_rule("shapley_sampled:0").is_err());
        assert!(parse_sharing_rule("shapley_sampled:x").is_err());
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(parse_instance("{not json"), Err(Error::Parse(_))));
    }
}
