//! Game instances: players, projects, the bipartite participation
//! structure, quality profiles, feasibility, and welfare accounting.

mod cost;
mod effort;
mod parse;
mod value;

pub use cost::CostModel;
pub use effort::EffortMap;
pub use parse::{parse_instance, parse_sharing_rule, RawInstance};
pub use value::ValueFunction;

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::sharing::SharingRule;
use crate::{Error, Result};

/// Absolute slack allowed on hard budgets; floating-point headroom for
/// projected profiles.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Default total-quality floor implementing the exclusive-player device:
/// share gradients are evaluated at `max(Q_j, eps)` so they exist at zero.
pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-9;

/// Raw description of one player, before validation.
#[derive(Debug, Clone)]
pub struct PlayerSpec {
    pub id: String,
    pub cost: CostModel,
    /// Participated projects with the effort map used on each.
    pub projects: BTreeMap<String, EffortMap>,
}

/// Raw description of one project, before validation.
#[derive(Debug, Clone)]
pub struct ProjectSpec {
    pub id: String,
    pub value: ValueFunction,
    /// Overrides the instance-wide default sharing rule when set.
    pub sharing: Option<SharingRule>,
}

#[derive(Debug, Clone)]
pub struct Player {
    pub id: String,
    pub cost: CostModel,
}

#[derive(Debug, Clone)]
pub struct Project {
    pub id: String,
    pub value: ValueFunction,
    pub sharing: SharingRule,
}

/// A validated instance with both sides of the participation index built.
///
/// Immutable after validation; safe to share across worker threads.
#[derive(Debug, Clone)]
pub struct Instance {
    players: Vec<Player>,
    projects: Vec<Project>,
    /// `M_i`: sorted project indices per player.
    projects_of: Vec<Vec<usize>>,
    /// `N_j`: sorted player indices per project.
    players_of: Vec<Vec<usize>>,
    /// Effort maps aligned with `projects_of`.
    maps: Vec<Vec<EffortMap>>,
    /// Flattened participation pairs `(player, project)`, row-major by player.
    pairs: Vec<(usize, usize)>,
    pair_lookup: HashMap<(usize, usize), usize>,
    epsilon_floor: Option<f64>,
}

impl Instance {
    /// Validates a raw description and builds the participation indices.
    pub fn new(
        players: Vec<PlayerSpec>,
        projects: Vec<ProjectSpec>,
        default_sharing: SharingRule,
        epsilon_floor: Option<f64>,
    ) -> Result<Self> {
        if let Some(eps) = epsilon_floor {
            if !(eps >= 0.0) {
                return Err(Error::Negative { what: "epsilon floor", value: eps });
            }
        }
        let mut project_index: HashMap<&str, usize> = HashMap::new();
        for (j, p) in projects.iter().enumerate() {
            p.value.validate()?;
            if let Some(rule) = &p.sharing {
                rule.validate()?;
            }
            if project_index.insert(&p.id, j).is_some() {
                return Err(Error::DuplicateId { kind: "project", id: p.id.clone() });
            }
        }
        default_sharing.validate()?;

        let mut seen_players = HashSet::new();
        let mut projects_of = Vec::with_capacity(players.len());
        let mut maps = Vec::with_capacity(players.len());
        let mut players_of = vec![Vec::new(); projects.len()];
        for (i, spec) in players.iter().enumerate() {
            if !seen_players.insert(spec.id.clone()) {
                return Err(Error::DuplicateId { kind: "player", id: spec.id.clone() });
            }
            spec.cost.validate()?;
            if spec.projects.is_empty() {
                return Err(Error::EmptyParticipation { player: spec.id.clone() });
            }
            let mut mine: Vec<(usize, EffortMap)> = Vec::with_capacity(spec.projects.len());
            for (pid, map) in &spec.projects {
                map.validate()?;
                let &j = project_index.get(pid.as_str()).ok_or_else(|| Error::UnknownProject {
                    player: spec.id.clone(),
                    project: pid.clone(),
                })?;
                mine.push((j, *map));
            }
            mine.sort_by_key(|&(j, _)| j);
            for &(j, _) in &mine {
                players_of[j].push(i);
            }
            projects_of.push(mine.iter().map(|&(j, _)| j).collect::<Vec<_>>());
            maps.push(mine.into_iter().map(|(_, m)| m).collect::<Vec<_>>());
        }
        for (j, members) in players_of.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::EmptyProject { project: projects[j].id.clone() });
            }
        }

        let mut pairs = Vec::new();
        let mut pair_lookup = HashMap::new();
        for (i, mine) in projects_of.iter().enumerate() {
            for &j in mine {
                pair_lookup.insert((i, j), pairs.len());
                pairs.push((i, j));
            }
        }

        Ok(Instance {
            players: players
                .into_iter()
                .map(|p| Player { id: p.id, cost: p.cost })
                .collect(),
            projects: projects
                .into_iter()
                .map(|p| Project {
                    id: p.id,
                    value: p.value,
                    sharing: p.sharing.unwrap_or_else(|| default_sharing.clone()),
                })
                .collect(),
            projects_of,
            players_of,
            maps,
            pairs,
            pair_lookup,
            epsilon_floor,
        })
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn n_projects(&self) -> usize {
        self.projects.len()
    }

    pub fn player(&self, i: usize) -> &Player {
        &self.players[i]
    }

    pub fn project(&self, j: usize) -> &Project {
        &self.projects[j]
    }

    /// `M_i`, sorted ascending.
    pub fn projects_of(&self, i: usize) -> &[usize] {
        &self.projects_of[i]
    }

    /// `N_j`, sorted ascending.
    pub fn players_of(&self, j: usize) -> &[usize] {
        &self.players_of[j]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair_index(&self, player: usize, project: usize) -> Option<usize> {
        self.pair_lookup.get(&(player, project)).copied()
    }

    /// Effort map of player `i` on project `j`; `None` if not participating.
    pub fn effort_map(&self, i: usize, j: usize) -> Option<&EffortMap> {
        let pos = self.projects_of[i].binary_search(&j).ok()?;
        Some(&self.maps[i][pos])
    }

    pub fn epsilon_floor(&self) -> Option<f64> {
        self.epsilon_floor
    }

    /// Copy of this instance with the floor replaced.
    pub fn with_epsilon_floor(&self, eps: Option<f64>) -> Self {
        let mut out = self.clone();
        out.epsilon_floor = eps;
        out
    }

    /// Copy of this instance with every project using `rule`.
    pub fn with_sharing_everywhere(&self, rule: &SharingRule) -> Self {
        let mut out = self.clone();
        for project in &mut out.projects {
            project.sharing = rule.clone();
        }
        out
    }

    /// Copy of this instance with each player's cost model and effort maps
    /// replaced; `types[i].1` must align with `projects_of(i)`.
    pub fn with_player_types(&self, types: &[(CostModel, Vec<EffortMap>)]) -> Result<Self> {
        if types.len() != self.n_players() {
            return Err(Error::Domain(format!(
                "expected {} player types, got {}",
                self.n_players(),
                types.len()
            )));
        }
        let mut out = self.clone();
        for (i, (cost, maps)) in types.iter().enumerate() {
            if maps.len() != self.projects_of[i].len() {
                return Err(Error::Domain(format!(
                    "player {i}: expected {} effort maps, got {}",
                    self.projects_of[i].len(),
                    maps.len()
                )));
            }
            out.players[i].cost = *cost;
            out.maps[i] = maps.clone();
        }
        Ok(out)
    }

    pub fn zero_profile(&self) -> QualityProfile {
        QualityProfile { values: vec![0.0; self.pairs.len()] }
    }

    /// Quality vector of project `j`, aligned with `players_of(j)`.
    pub fn project_qualities(&self, profile: &QualityProfile, j: usize) -> Vec<f64> {
        self.players_of[j]
            .iter()
            .map(|&i| profile.values[self.pair_lookup[&(i, j)]])
            .collect()
    }

    /// Total quality submitted to project `j`.
    pub fn project_total(&self, profile: &QualityProfile, j: usize) -> f64 {
        self.players_of[j]
            .iter()
            .map(|&i| profile.values[self.pair_lookup[&(i, j)]])
            .sum()
    }

    /// Total effort `X_i` exerted by player `i` under `profile`.
    pub fn player_effort(&self, profile: &QualityProfile, i: usize) -> Result<f64> {
        let mut total = 0.0;
        for (pos, &j) in self.projects_of[i].iter().enumerate() {
            let q = profile.values[self.pair_lookup[&(i, j)]];
            total += self.maps[i][pos].effort_of_quality(q)?;
        }
        Ok(total)
    }

    /// Feasibility of a profile with per-player budget slack.
    pub fn feasibility(&self, profile: &QualityProfile) -> Result<FeasibilityReport> {
        let mut slacks = Vec::with_capacity(self.n_players());
        let mut feasible = true;
        for i in 0..self.n_players() {
            match self.players[i].cost.budget() {
                Some(b) => {
                    let slack = b - self.player_effort(profile, i)?;
                    if slack < -FEASIBILITY_TOL {
                        feasible = false;
                    }
                    slacks.push(Some(slack));
                }
                None => slacks.push(None),
            }
        }
        Ok(FeasibilityReport { feasible, slacks })
    }

    /// Total produced value `V(q)` and total soft cost `C(q)`; the flag is
    /// true when every player has a hard budget (costs identically zero).
    pub fn production_and_cost(&self, profile: &QualityProfile) -> Result<(f64, f64, bool)> {
        let production: f64 = (0..self.n_projects())
            .map(|j| self.projects[j].value.value(&self.project_qualities(profile, j)))
            .sum();
        let mut cost = 0.0;
        let mut all_hard = true;
        for i in 0..self.n_players() {
            if self.players[i].cost.is_hard() {
                continue;
            }
            all_hard = false;
            cost += self.players[i].cost.cost(self.player_effort(profile, i)?);
        }
        Ok((production, cost, all_hard))
    }

    /// Social welfare: `Σ_j v_j(q^j)` under hard budgets (value is fully
    /// shared), `V(q) − C(q)` with soft costs. Errors if a hard-budget
    /// player is infeasible.
    pub fn social_welfare(&self, profile: &QualityProfile) -> Result<f64> {
        let report = self.feasibility(profile)?;
        if !report.feasible {
            for (i, slack) in report.slacks.iter().enumerate() {
                if let Some(s) = slack {
                    if *s < -FEASIBILITY_TOL {
                        return Err(Error::Infeasible {
                            player: self.players[i].id.clone(),
                            excess: -s,
                        });
                    }
                }
            }
        }
        let (v, c, _) = self.production_and_cost(profile)?;
        Ok(v - c)
    }
}

/// Joint action: one quality per participation pair, aligned with
/// [`Instance::pairs`]. Entries are nonnegative by construction in every
/// solver path.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityProfile {
    pub values: Vec<f64>,
}

impl QualityProfile {
    pub fn get(&self, inst: &Instance, player: usize, project: usize) -> f64 {
        inst.pair_index(player, project).map_or(0.0, |k| self.values[k])
    }

    pub fn set(&mut self, inst: &Instance, player: usize, project: usize, q: f64) {
        if let Some(k) = inst.pair_index(player, project) {
            self.values[k] = q;
        }
    }

    /// Largest coordinate-wise difference against another profile.
    pub fn max_delta(&self, other: &QualityProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `B_i − Σ_j x_i^j(q_i^j)` per hard-budget player, `None` for soft-cost
    /// players (always feasible).
    pub slacks: Vec<Option<f64>>,
}

/// Effective total quality used when evaluating share gradients: the
/// epsilon floor keeps proportional shares differentiable at zero.
pub(crate) fn floored_total(inst: &Instance, total: f64) -> f64 {
    match inst.epsilon_floor() {
        Some(eps) => total.max(eps),
        None => total,
    }
}
