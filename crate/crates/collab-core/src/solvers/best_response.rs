//! Exact per-player best responses.
//!
//! Every concave sharing rule yields a per-player problem with a concave
//! objective over a convex set, so each coordinate's first-order condition
//! has a monotone derivative and bisection solves it. Hard-budget players
//! get a Lagrangian outer bisection on the budget multiplier; soft-cost
//! players get cyclic coordinate ascent against marginal cost.

use crate::model::{Instance, QualityProfile, ValueFunction};
use crate::sharing::{self, SharingRule};
use crate::solvers::onedim::{decreasing_root, golden_max};
use crate::solvers::SolverConfig;
use crate::{Error, Result};

/// Marginal payoff of one coordinate of one player's block problem, with
/// the rest of the profile frozen.
pub(crate) enum CoordMarginal {
    /// d/dq of the proportional share `q·v̄(q + s)`.
    ProportionalConcave { vf: ValueFunction, others_total: f64 },
    /// d/dq of the Shapley share for concave-of-sum values:
    /// precomputed `(weight, subset sum)` terms over the other participants.
    ShapleySums { vf: ValueFunction, terms: Vec<(f64, f64)> },
    /// d/dq of the project value itself, `v'(q + s)`; used when maximizing
    /// social welfare instead of own utility.
    Welfare { vf: ValueFunction, others_total: f64 },
    /// Mean of several marginals; used for best fixed responses against an
    /// empirical distribution of opponent profiles.
    Average(Vec<CoordMarginal>),
}

impl CoordMarginal {
    pub(crate) fn eval(&self, q: f64, floor: f64) -> f64 {
        match self {
            CoordMarginal::ProportionalConcave { vf, others_total } => {
                let total = others_total + q;
                if total <= 0.0 && floor == 0.0 {
                    return vf.total_derivative(0.0);
                }
                if total < floor {
                    return vf.mean_value(floor);
                }
                vf.mean_value(total) + q * vf.mean_value_derivative(total)
            }
            CoordMarginal::ShapleySums { vf, terms } => terms
                .iter()
                .map(|&(w, sum)| w * vf.total_derivative((sum + q).max(floor)))
                .sum(),
            CoordMarginal::Welfare { vf, others_total } => {
                vf.total_derivative((others_total + q).max(floor))
            }
            CoordMarginal::Average(parts) => {
                parts.iter().map(|m| m.eval(q, floor)).sum::<f64>() / parts.len() as f64
            }
        }
    }
}

/// Weighted subset sums of the other participants' qualities, for the
/// Shapley derivative. `n_total` counts all participants including the
/// owner.
pub(crate) fn shapley_terms(others: &[f64], n_total: usize) -> Vec<(f64, f64)> {
    let m = others.len();
    let mut fact = vec![1.0; n_total + 1];
    for k in 1..=n_total {
        fact[k] = fact[k - 1] * k as f64;
    }
    let mut terms = Vec::with_capacity(1 << m);
    for mask in 0..(1usize << m) {
        let mut sum = 0.0;
        for (k, &x) in others.iter().enumerate() {
            if mask & (1 << k) != 0 {
                sum += x;
            }
        }
        let s = mask.count_ones() as usize;
        let w = fact[s] * fact[n_total - 1 - s] / fact[n_total];
        terms.push((w, sum));
    }
    terms
}

/// Builds the own-share marginal for player `i`'s coordinate on project `j`,
/// freezing everyone else at `profile`.
pub(crate) fn own_share_marginal(
    inst: &Instance,
    profile: &QualityProfile,
    i: usize,
    j: usize,
) -> Result<CoordMarginal> {
    let project = inst.project(j);
    if !project.sharing.is_concave_for(&project.value) {
        return Err(Error::NonConcaveRule);
    }
    let members = inst.players_of(j);
    let others_total: f64 = members
        .iter()
        .filter(|&&k| k != i)
        .map(|&k| profile.get(inst, k, j))
        .sum();
    match project.sharing {
        SharingRule::Proportional => {
            Ok(CoordMarginal::ProportionalConcave { vf: project.value, others_total })
        }
        SharingRule::ShapleyExact | SharingRule::ShapleySampled { .. } => {
            let others: Vec<f64> = members
                .iter()
                .filter(|&&k| k != i)
                .map(|&k| profile.get(inst, k, j))
                .collect();
            Ok(CoordMarginal::ShapleySums {
                vf: project.value,
                terms: shapley_terms(&others, members.len()),
            })
        }
        _ => Err(Error::NonConcaveRule),
    }
}

/// Builds the welfare marginal `v'(Q_j)` for player `i` on project `j`.
pub(crate) fn welfare_marginal(
    inst: &Instance,
    profile: &QualityProfile,
    i: usize,
    j: usize,
) -> CoordMarginal {
    let others_total: f64 = inst
        .players_of(j)
        .iter()
        .filter(|&&k| k != i)
        .map(|&k| profile.get(inst, k, j))
        .sum();
    CoordMarginal::Welfare { vf: inst.project(j).value, others_total }
}

/// Solves player `i`'s block problem `max Σ_pos payoff(pos, q_pos) − cost`
/// against frozen marginals, honoring the player's cost model.
pub(crate) fn solve_player_block(
    inst: &Instance,
    i: usize,
    marginals: &[CoordMarginal],
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let floor = inst.epsilon_floor().unwrap_or(0.0);
    match inst.player(i).cost.budget() {
        Some(budget) => solve_hard_block(inst, i, marginals, budget, floor, cfg),
        None => solve_soft_block(inst, i, marginals, start, floor, cfg),
    }
}

fn solve_hard_block(
    inst: &Instance,
    i: usize,
    marginals: &[CoordMarginal],
    budget: f64,
    floor: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let projects = inst.projects_of(i);
    let mut caps = Vec::with_capacity(projects.len());
    for &j in projects {
        caps.push(inst.effort_map(i, j).expect("participant").quality_of_effort(budget)?);
    }
    let solve_at = |lambda: f64| -> Result<(Vec<f64>, f64)> {
        let mut q = Vec::with_capacity(projects.len());
        let mut total = 0.0;
        for (pos, &j) in projects.iter().enumerate() {
            let map = inst.effort_map(i, j).expect("participant");
            let g = |t: f64| marginals[pos].eval(t, floor) - lambda * map.effort_derivative(t);
            let root = decreasing_root(g, caps[pos], cfg.inner_tol);
            total += map.effort_of_quality(root)?;
            q.push(root);
        }
        Ok((q, total))
    };

    let budget_tol = 1e-10 * (1.0 + budget);
    let (q0, total0) = solve_at(0.0)?;
    if total0 <= budget + budget_tol {
        return Ok(q0);
    }
    let mut hi = 1.0;
    for _ in 0..400 {
        let (_, total) = solve_at(hi)?;
        if total < budget {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (q, total) = solve_at(mid)?;
        let err = total - budget;
        // Accept from the feasible side only, so the result never
        // overshoots the budget whatever its scale.
        if err <= 0.0 && -err <= budget_tol {
            return Ok(q);
        }
        if err > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            best = Some(q);
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    // Plateau in the multiplier (piecewise-linear payoffs): rescale the last
    // over-budget iterate onto the budget surface.
    let (q, total) = solve_at(lo)?;
    if total <= budget + budget_tol {
        return Ok(q);
    }
    if total > 0.0 {
        let mut scaled = Vec::with_capacity(q.len());
        for (pos, &j) in projects.iter().enumerate() {
            let map = inst.effort_map(i, j).expect("participant");
            let effort = map.effort_of_quality(q[pos])? * (budget / total);
            scaled.push(map.quality_of_effort(effort)?);
        }
        return Ok(scaled);
    }
    Ok(best.unwrap_or(q))
}

fn solve_soft_block(
    inst: &Instance,
    i: usize,
    marginals: &[CoordMarginal],
    start: &[f64],
    floor: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let projects = inst.projects_of(i);
    let cost = inst.player(i).cost;
    let mut q = start.to_vec();
    let mut efforts: Vec<f64> = Vec::with_capacity(q.len());
    for (pos, &j) in projects.iter().enumerate() {
        efforts.push(inst.effort_map(i, j).expect("participant").effort_of_quality(q[pos])?);
    }
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for (pos, &j) in projects.iter().enumerate() {
            let map = inst.effort_map(i, j).expect("participant");
            let x_rest: f64 =
                efforts.iter().enumerate().filter(|&(k, _)| k != pos).map(|(_, &x)| x).sum();
            let g = |t: f64| {
                let x_t = map.effort_of_quality(t).unwrap_or(f64::INFINITY);
                marginals[pos].eval(t, floor)
                    - cost.marginal_cost(x_rest + x_t) * map.effort_derivative(t)
            };
            let mut hi = (2.0 * q[pos]).max(1.0);
            let mut doublings = 0;
            while g(hi) > 0.0 && doublings < 80 {
                hi *= 2.0;
                doublings += 1;
            }
            let root = decreasing_root(g, hi, cfg.inner_tol);
            delta = delta.max((root - q[pos]).abs());
            q[pos] = root;
            efforts[pos] = map.effort_of_quality(root)?;
        }
        if delta < cfg.profile_tol {
            break;
        }
    }
    Ok(q)
}

/// Player `i`'s utility when they deviate to `own` (aligned with
/// `projects_of(i)`) and everyone else stays at `profile`.
pub fn utility_with_own(
    inst: &Instance,
    profile: &QualityProfile,
    i: usize,
    own: &[f64],
) -> Result<f64> {
    let mut scratch = profile.clone();
    for (pos, &j) in inst.projects_of(i).iter().enumerate() {
        scratch.set(inst, i, j, own[pos]);
    }
    sharing::player_utility(inst, &scratch, i)
}

/// Best response of player `i` to `profile`: the utility-maximizing quality
/// vector over `projects_of(i)`.
///
/// Requires every participated project to use a concave sharing rule; with
/// `allow_nonconcave_fallback` set, a golden-section coordinate search is
/// used instead (slower and heuristic, no optimality certificate).
pub fn best_response(
    inst: &Instance,
    profile: &QualityProfile,
    i: usize,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let projects = inst.projects_of(i);
    let concave = projects.iter().all(|&j| {
        let p = inst.project(j);
        p.sharing.is_concave_for(&p.value)
    });
    if !concave {
        if !cfg.allow_nonconcave_fallback {
            return Err(Error::NonConcaveRule);
        }
        return fallback_response(inst, profile, i, cfg);
    }
    let marginals: Vec<CoordMarginal> = projects
        .iter()
        .map(|&j| own_share_marginal(inst, profile, i, j))
        .collect::<Result<_>>()?;
    let start: Vec<f64> = projects.iter().map(|&j| profile.get(inst, i, j)).collect();
    solve_player_block(inst, i, &marginals, &start, cfg)
}

/// Golden-section fallback for non-concave rules: per-coordinate line
/// searches within the remaining budget, plus pairwise budget transfers for
/// hard-budget players.
fn fallback_response(
    inst: &Instance,
    profile: &QualityProfile,
    i: usize,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let projects = inst.projects_of(i);
    let m = projects.len();
    let mut own: Vec<f64> = projects.iter().map(|&j| profile.get(inst, i, j)).collect();
    let maps: Vec<_> =
        projects.iter().map(|&j| *inst.effort_map(i, j).expect("participant")).collect();
    let budget = inst.player(i).cost.budget();

    let line_tol = cfg.inner_tol.max(1e-12);
    for _pass in 0..60 {
        let mut moved: f64 = 0.0;
        for pos in 0..m {
            let others_effort: f64 = (0..m)
                .filter(|&k| k != pos)
                .map(|k| maps[k].effort_of_quality(own[k]).unwrap_or(0.0))
                .sum();
            let hi = match budget {
                Some(b) => maps[pos].quality_of_effort((b - others_effort).max(0.0))?,
                None => {
                    let mut h = (2.0 * own[pos]).max(1.0);
                    // Expand until more quality stops paying.
                    let mut trial = own.clone();
                    for _ in 0..60 {
                        trial[pos] = h;
                        let up = utility_with_own(inst, profile, i, &trial)?;
                        trial[pos] = 2.0 * h;
                        let upper = utility_with_own(inst, profile, i, &trial)?;
                        if upper <= up {
                            break;
                        }
                        h *= 2.0;
                    }
                    2.0 * h
                }
            };
            if hi <= 0.0 {
                continue;
            }
            let objective = |t: f64| {
                let mut trial = own.clone();
                trial[pos] = t;
                utility_with_own(inst, profile, i, &trial).unwrap_or(f64::NEG_INFINITY)
            };
            let (t_star, _) = golden_max(objective, 0.0, hi, line_tol);
            let t_star = if objective(0.0) >= objective(t_star) { 0.0 } else { t_star };
            moved = moved.max((t_star - own[pos]).abs());
            own[pos] = t_star;
        }
        // Budget transfers keep the search on the simplex for hard budgets.
        if budget.is_some() && m > 1 {
            for a in 0..m {
                for b in (a + 1)..m {
                    let x_a = maps[a].effort_of_quality(own[a])?;
                    let x_b = maps[b].effort_of_quality(own[b])?;
                    let objective = |d: f64| {
                        let mut trial = own.clone();
                        trial[a] = maps[a].quality_of_effort((x_a - d).max(0.0)).unwrap();
                        trial[b] = maps[b].quality_of_effort((x_b + d).max(0.0)).unwrap();
                        utility_with_own(inst, profile, i, &trial)
                            .unwrap_or(f64::NEG_INFINITY)
                    };
                    let (d_star, _) = golden_max(objective, -x_b, x_a, line_tol);
                    if objective(d_star) > objective(0.0) {
                        moved = moved.max(d_star.abs());
                        own[a] = maps[a].quality_of_effort((x_a - d_star).max(0.0))?;
                        own[b] = maps[b].quality_of_effort((x_b + d_star).max(0.0))?;
                    }
                }
            }
        }
        if moved < cfg.profile_tol {
            break;
        }
    }
    Ok(own)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, EffortMap, PlayerSpec, ProjectSpec, ValueFunction};
    use crate::solvers::SolverConfig;

    fn single_project_soft(n: usize) -> Instance {
        let players = (0..n)
            .map(|i| PlayerSpec {
                id: format!("p{i}"),
                cost: CostModel::SoftLinear,
                projects: [("s".to_string(), EffortMap::identity())].into_iter().collect(),
            })
            .collect();
        let projects =
            vec![ProjectSpec { id: "s".into(), value: ValueFunction::Sqrt, sharing: None }];
        Instance::new(players, projects, SharingRule::Proportional, None).unwrap()
    }

    #[test]
    fn symmetric_fixed_point_of_sqrt_linear() {
        // Opponent total 0.28125 makes q* = 0.28125 the stationary response.
        let inst = single_project_soft(2);
        let mut profile = inst.zero_profile();
        profile.set(&inst, 1, 0, 0.28125);
        let cfg = SolverConfig::default();
        let q = best_response(&inst, &profile, 0, &cfg).unwrap();
        assert!((q[0] - 0.28125).abs() < 1e-9, "{q:?}");
    }

    #[test]
    fn monotone_single_player_spends_budget() {
        let players = vec![PlayerSpec {
            id: "a".into(),
            cost: CostModel::HardBudget { budget: 1.0 },
            projects: [("p".to_string(), EffortMap::identity())].into_iter().collect(),
        }];
        let projects = vec![ProjectSpec {
            id: "p".into(),
            value: ValueFunction::Power { weight: 1.0, alpha: 0.5 },
            sharing: None,
        }];
        let inst = Instance::new(players, projects, SharingRule::Proportional, None).unwrap();
        let cfg = SolverConfig::default();
        let q = best_response(&inst, &inst.zero_profile(), 0, &cfg).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_identical_projects_split_evenly() {
        // Grid-oracle-verified split for one player over two symmetric
        // power projects under a unit budget.
        let players = vec![PlayerSpec {
            id: "a".into(),
            cost: CostModel::HardBudget { budget: 1.0 },
            projects: [
                ("p".to_string(), EffortMap::identity()),
                ("q".to_string(), EffortMap::identity()),
            ]
            .into_iter()
            .collect(),
        }];
        let value = ValueFunction::Power { weight: 1.0, alpha: 0.5 };
        let projects = ["p", "q"]
            .iter()
            .map(|id| ProjectSpec { id: id.to_string(), value, sharing: None })
            .collect();
        let inst = Instance::new(players, projects, SharingRule::Proportional, None).unwrap();
        let cfg = SolverConfig::default();
        let q = best_response(&inst, &inst.zero_profile(), 0, &cfg).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-8 && (q[1] - 0.5).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn non_concave_rule_needs_fallback_flag() {
        let players = vec![PlayerSpec {
            id: "a".into(),
            cost: CostModel::HardBudget { budget: 1.0 },
            projects: [("p".to_string(), EffortMap::identity())].into_iter().collect(),
        }];
        let projects = vec![ProjectSpec {
            id: "p".into(),
            value: ValueFunction::MaxQuality,
            sharing: Some(SharingRule::WinnerTakeAll),
        }];
        let inst = Instance::new(players, projects, SharingRule::Proportional, None).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(
            best_response(&inst, &inst.zero_profile(), 0, &cfg),
            Err(Error::NonConcaveRule)
        ));
        let cfg = SolverConfig { allow_nonconcave_fallback: true, ..SolverConfig::default() };
        let q = best_response(&inst, &inst.zero_profile(), 0, &cfg).unwrap();
        // Sole winner-take-all participant claims the whole budget.
        assert!((q[0] - 1.0).abs() < 1e-6, "{q:?}");
    }

    #[test]
    fn br_step_never_decreases_utility() {
        let inst = single_project_soft(3);
        let mut profile = inst.zero_profile();
        profile.set(&inst, 0, 0, 0.1);
        profile.set(&inst, 1, 0, 0.4);
        profile.set(&inst, 2, 0, 0.05);
        let cfg = SolverConfig::default();
        for i in 0..3 {
            let before = sharing::player_utility(&inst, &profile, i).unwrap();
            let q = best_response(&inst, &profile, i, &cfg).unwrap();
            let after = utility_with_own(&inst, &profile, i, &q).unwrap();
            assert!(after >= before - 1e-12, "player {i}: {after} < {before}");
        }
    }
}
