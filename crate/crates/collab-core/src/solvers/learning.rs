//! No-regret learning: online projected gradient ascent per player.
//!
//! Each round every player takes a gradient step on their own utility from
//! a frozen snapshot of the profile, then projects back onto their feasible
//! set — a Euclidean projection onto the budget set via Lagrangian
//! bisection for hard budgets (a weighted simplex projection under linear
//! effort maps), a clip at zero for soft costs. The round machinery is
//! shared with the incomplete-information simulation so degenerate type
//! distributions reproduce complete-information runs bit for bit.

use crate::model::{Instance, QualityProfile, DEFAULT_EPSILON_FLOOR};
use crate::sharing;
use crate::solvers::best_response::{
    own_share_marginal, solve_player_block, utility_with_own, CoordMarginal,
};
use crate::solvers::onedim::decreasing_root;
use crate::solvers::SolverConfig;
use crate::Result;

const GRADIENT_CLAMP: f64 = 1e8;

/// Number of profile snapshots kept for regret estimation.
const TRACE_SAMPLES: usize = 512;

/// Per-player online gradient learner.
#[derive(Debug, Clone)]
pub(crate) struct Learner {
    /// Current play, aligned with `projects_of(i)`.
    pub q: Vec<f64>,
    /// Updates taken so far; the step size decays as `eta0/sqrt(t)`.
    pub steps: usize,
    pub eta0: f64,
}

pub(crate) fn learner_init(inst: &Instance, i: usize, cfg: &SolverConfig) -> Result<Learner> {
    let projects = inst.projects_of(i);
    let mut q = Vec::with_capacity(projects.len());
    let eta0;
    match inst.player(i).cost.budget() {
        Some(b) => {
            eta0 = cfg.step_scale * b;
            let per = b / projects.len() as f64;
            for &j in projects {
                q.push(inst.effort_map(i, j).expect("participant").quality_of_effort(per)?);
            }
        }
        None => {
            eta0 = cfg.step_scale;
            q.resize(projects.len(), 0.01);
        }
    }
    Ok(Learner { q, steps: 0, eta0 })
}

/// One projected-gradient update for player `i` against a frozen snapshot.
/// The epsilon floor keeps share gradients finite at empty projects.
pub(crate) fn gradient_update(
    inst: &Instance,
    snapshot: &QualityProfile,
    i: usize,
    learner: &mut Learner,
    floor: f64,
) -> Result<Vec<f64>> {
    learner.steps += 1;
    let eta = learner.eta0 / (learner.steps as f64).sqrt();
    let projects = inst.projects_of(i);
    let soft_cost = !inst.player(i).cost.is_hard();
    let effort = if soft_cost {
        let mut x = 0.0;
        for (pos, &j) in projects.iter().enumerate() {
            x += inst.effort_map(i, j).expect("participant").effort_of_quality(learner.q[pos])?;
        }
        x
    } else {
        0.0
    };
    let marginal_cost = inst.player(i).cost.marginal_cost(effort);
    let mut stepped = Vec::with_capacity(projects.len());
    for (pos, &j) in projects.iter().enumerate() {
        let marginal = own_share_marginal(inst, snapshot, i, j)?;
        let mut g = marginal.eval(learner.q[pos], floor);
        if soft_cost {
            let map = inst.effort_map(i, j).expect("participant");
            g -= marginal_cost * map.effort_derivative(learner.q[pos]);
        }
        let g = g.clamp(-GRADIENT_CLAMP, GRADIENT_CLAMP);
        stepped.push(learner.q[pos] + eta * g);
    }
    let projected = match inst.player(i).cost.budget() {
        Some(_) => project_budget(inst, i, &stepped)?,
        None => stepped.iter().map(|&q| q.max(0.0)).collect(),
    };
    learner.q.clone_from(&projected);
    Ok(projected)
}

/// Euclidean projection of `y` onto player `i`'s budget set
/// `{q >= 0 : Σ_j x_j(q_j) <= B}` by bisection on the constraint
/// multiplier. For linear effort maps the per-coordinate solve is the
/// closed-form shift `max(0, y_j − θ/a_j)`.
pub fn project_budget(inst: &Instance, i: usize, y: &[f64]) -> Result<Vec<f64>> {
    let projects = inst.projects_of(i);
    let budget = inst.player(i).cost.budget().expect("hard-budget player");
    let clip: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
    let mut total = 0.0;
    for (pos, &j) in projects.iter().enumerate() {
        total += inst.effort_map(i, j).expect("participant").effort_of_quality(clip[pos])?;
    }
    let budget_tol = 1e-10 * (1.0 + budget);
    if total <= budget + budget_tol {
        return Ok(clip);
    }

    let coord = |pos: usize, theta: f64| -> f64 {
        let j = projects[pos];
        let map = inst.effort_map(i, j).expect("participant");
        // Stationarity of (q − y)²/2 + θ·x(q): q − y + θ·x'(q) = 0.
        match *map {
            crate::model::EffortMap::LinearAbility { ability } => {
                (y[pos] - theta / ability).max(0.0)
            }
            _ => {
                let g = |q: f64| y[pos] - q - theta * map.effort_derivative(q);
                decreasing_root(g, clip[pos], 1e-13)
            }
        }
    };
    let total_at = |theta: f64| -> Result<f64> {
        let mut t = 0.0;
        for (pos, &j) in projects.iter().enumerate() {
            let map = inst.effort_map(i, j).expect("participant");
            t += map.effort_of_quality(coord(pos, theta))?;
        }
        Ok(t)
    };
    let mut hi = 1.0;
    for _ in 0..200 {
        if total_at(hi)? <= budget {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let t = total_at(mid)?;
        if t > budget {
            lo = mid;
        } else {
            hi = mid;
            // Feasible-side acceptance keeps the projection inside the
            // budget set at any scale.
            if budget - t <= budget_tol {
                break;
            }
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    Ok((0..projects.len()).map(|pos| coord(pos, hi)).collect())
}

/// Outcome of a no-regret run.
#[derive(Debug, Clone)]
pub struct LearningTrace {
    /// Evenly thinned snapshots of the played profiles.
    pub sampled_profiles: Vec<QualityProfile>,
    /// Mean per-round social welfare over the whole horizon.
    pub avg_welfare: f64,
    /// Per-player external regret estimates, clamped at zero.
    pub regrets: Vec<f64>,
    /// Time-averaged total quality per project.
    pub avg_project_quality: Vec<f64>,
    pub rounds: usize,
}

/// Runs `cfg.horizon` rounds of simultaneous online projected gradient
/// ascent. Requires concave sharing rules on every project; the epsilon
/// floor (instance-level, or the default) keeps gradients defined at empty
/// projects.
pub fn no_regret_play(inst: &Instance, cfg: &SolverConfig) -> Result<LearningTrace> {
    let n = inst.n_players();
    let floor = inst.epsilon_floor().unwrap_or(DEFAULT_EPSILON_FLOOR);
    let mut learners = Vec::with_capacity(n);
    for i in 0..n {
        learners.push(learner_init(inst, i, cfg)?);
    }
    let mut profile = inst.zero_profile();
    for (i, learner) in learners.iter().enumerate() {
        for (pos, &j) in inst.projects_of(i).iter().enumerate() {
            profile.set(inst, i, j, learner.q[pos]);
        }
    }

    let horizon = cfg.horizon;
    let thin = (horizon / TRACE_SAMPLES).max(1);
    let mut sampled = Vec::with_capacity(horizon / thin + 1);
    let mut welfare_sum = 0.0;
    let mut quality_sum = vec![0.0; inst.n_projects()];
    for t in 1..=horizon {
        let snapshot = profile.clone();
        for (i, learner) in learners.iter_mut().enumerate() {
            let q = gradient_update(inst, &snapshot, i, learner, floor)?;
            for (pos, &j) in inst.projects_of(i).iter().enumerate() {
                profile.set(inst, i, j, q[pos]);
            }
        }
        welfare_sum += inst.social_welfare(&profile)?;
        for (j, slot) in quality_sum.iter_mut().enumerate() {
            *slot += inst.project_total(&profile, j);
        }
        if t % thin == 0 {
            sampled.push(profile.clone());
        }
    }

    let regrets = estimate_regrets(inst, &sampled, cfg)?;
    Ok(LearningTrace {
        sampled_profiles: sampled,
        avg_welfare: welfare_sum / horizon as f64,
        regrets,
        avg_project_quality: quality_sum.iter().map(|s| s / horizon as f64).collect(),
        rounds: horizon,
    })
}

/// External regret against the best fixed action, estimated on the thinned
/// trace: the best fixed response maximizes the sample-averaged utility,
/// which stays concave, so the exact block solver applies with averaged
/// marginals.
pub(crate) fn estimate_regrets(
    inst: &Instance,
    samples: &[QualityProfile],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let n = inst.n_players();
    let mut regrets = Vec::with_capacity(n);
    let s = samples.len();
    if s == 0 {
        return Ok(vec![0.0; n]);
    }
    // Cap the per-player cost of the averaged marginals.
    let stride = (s / 256).max(1);
    let used: Vec<&QualityProfile> = samples.iter().step_by(stride).collect();
    for i in 0..n {
        let projects = inst.projects_of(i);
        let marginals: Vec<CoordMarginal> = projects
            .iter()
            .map(|&j| {
                let parts = used
                    .iter()
                    .map(|p| own_share_marginal(inst, p, i, j))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CoordMarginal::Average(parts))
            })
            .collect::<Result<_>>()?;
        let start: Vec<f64> = projects.iter().map(|&j| used[0].get(inst, i, j)).collect();
        let fixed = solve_player_block(inst, i, &marginals, &start, cfg)?;
        let mut fixed_avg = 0.0;
        let mut realized_avg = 0.0;
        for p in &used {
            fixed_avg += utility_with_own(inst, p, i, &fixed)?;
            realized_avg += sharing::player_utility(inst, p, i)?;
        }
        fixed_avg /= used.len() as f64;
        realized_avg /= used.len() as f64;
        regrets.push((fixed_avg - realized_avg).max(0.0));
    }
    Ok(regrets)
}
