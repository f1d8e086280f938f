//! Incomplete-information play over finite type supports.
//!
//! A player's type bundles their cost model and effort maps. Types are
//! drawn independently each round from commonly known finite supports, and
//! each (player, type) pair runs its own online-gradient learner, updated
//! only on rounds where that type is drawn. The round arithmetic is shared
//! with the complete-information learner, so degenerate (single-type)
//! supports reproduce `no_regret_play` exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::model::{
    CostModel, EffortMap, Instance, QualityProfile, RawInstance, DEFAULT_EPSILON_FLOOR,
};
use crate::solvers::{
    estimate_regrets, gradient_update, learner_init, solve_opt, Learner, SolverConfig,
};
use crate::{Error, Result};

/// One support point of a player's type distribution.
#[derive(Debug, Clone)]
pub struct PlayerType {
    pub cost: CostModel,
    /// Effort maps aligned with the player's participation list.
    pub maps: Vec<EffortMap>,
}

/// Independent per-player type distributions with finite support.
#[derive(Debug, Clone)]
pub struct TypeDistribution {
    support: Vec<Vec<(f64, PlayerType)>>,
}

impl TypeDistribution {
    pub fn new(inst: &Instance, support: Vec<Vec<(f64, PlayerType)>>) -> Result<Self> {
        if support.len() != inst.n_players() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} players, got {}",
                inst.n_players(),
                support.len()
            )));
        }
        for (i, types) in support.iter().enumerate() {
            if types.is_empty() {
                return Err(Error::InvalidDistribution(format!("player {i} has empty support")));
            }
            let mut total = 0.0;
            for (prob, ty) in types {
                if !(*prob >= 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "player {i}: negative probability {prob}"
                    )));
                }
                total += prob;
                ty.cost.validate()?;
                if ty.maps.len() != inst.projects_of(i).len() {
                    return Err(Error::InvalidDistribution(format!(
                        "player {i}: type has {} maps for {} projects",
                        ty.maps.len(),
                        inst.projects_of(i).len()
                    )));
                }
                for map in &ty.maps {
                    map.validate()?;
                }
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "player {i}: probabilities sum to {total}"
                )));
            }
        }
        Ok(TypeDistribution { support })
    }

    /// Single-type supports taken from the instance itself.
    pub fn degenerate(inst: &Instance) -> Self {
        let support = (0..inst.n_players())
            .map(|i| {
                let maps = inst
                    .projects_of(i)
                    .iter()
                    .map(|&j| *inst.effort_map(i, j).expect("participant"))
                    .collect();
                vec![(1.0, PlayerType { cost: inst.player(i).cost, maps })]
            })
            .collect();
        TypeDistribution { support }
    }

    /// Builds from the `types` blocks of a parsed instance document.
    /// Players without a block get a degenerate support.
    pub fn from_raw(inst: &Instance, raw: &RawInstance) -> Result<Self> {
        let mut support = Vec::with_capacity(inst.n_players());
        for (i, player) in raw.players.iter().enumerate() {
            if player.types.is_empty() {
                let maps = inst
                    .projects_of(i)
                    .iter()
                    .map(|&j| *inst.effort_map(i, j).expect("participant"))
                    .collect();
                support.push(vec![(1.0, PlayerType { cost: inst.player(i).cost, maps })]);
                continue;
            }
            let mut entries = Vec::with_capacity(player.types.len());
            for ty in &player.types {
                let mut maps = Vec::with_capacity(inst.projects_of(i).len());
                for &j in inst.projects_of(i) {
                    let pid = &inst.project(j).id;
                    let map = ty.projects.get(pid).ok_or_else(|| {
                        Error::InvalidDistribution(format!(
                            "player `{}`: type is missing a map for project `{pid}`",
                            player.id
                        ))
                    })?;
                    maps.push(*map);
                }
                entries.push((ty.prob, PlayerType { cost: ty.cost, maps }));
            }
            support.push(entries);
        }
        TypeDistribution::new(inst, support)
    }

    pub fn support(&self, i: usize) -> &[(f64, PlayerType)] {
        &self.support[i]
    }

    pub fn n_players(&self) -> usize {
        self.support.len()
    }

    fn sample_one(&self, i: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, (prob, _)) in self.support[i].iter().enumerate() {
            acc += prob;
            if u < acc {
                return k;
            }
        }
        self.support[i].len() - 1
    }

    /// Swaps the sampled types into the base instance.
    pub fn realize(&self, inst: &Instance, indices: &[usize]) -> Result<Instance> {
        let types: Vec<(CostModel, Vec<EffortMap>)> = indices
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let ty = &self.support[i][k].1;
                (ty.cost, ty.maps.clone())
            })
            .collect();
        inst.with_player_types(&types)
    }
}

/// Draws one type index per player; reproducible from the caller's RNG.
pub fn sample_type_profile(dist: &TypeDistribution, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..dist.n_players()).map(|i| dist.sample_one(i, rng)).collect()
}

/// Monte Carlo estimate of `E_t[OPT(t)]` with its standard error.
pub fn expected_opt(
    inst: &Instance,
    dist: &TypeDistribution,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::Domain("expected_opt needs at least one sample".into()));
    }
    let values = exec::map_indexed(samples, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(exec::substream_seed(seed, s as u64));
        let indices = sample_type_profile(dist, &mut rng);
        let realized = dist.realize(inst, &indices)?;
        Ok::<f64, Error>(solve_opt(&realized)?.1)
    });
    let mut collected = Vec::with_capacity(samples);
    for v in values {
        collected.push(v?);
    }
    let mean = collected.iter().sum::<f64>() / samples as f64;
    let stderr = if samples > 1 {
        let var = collected.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (samples as f64 - 1.0);
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

/// Outcome of repeated incomplete-information play.
#[derive(Debug, Clone)]
pub struct BayesOutcome {
    /// Time-averaged welfare over the last half of the horizon.
    pub avg_welfare: f64,
    /// Time-averaged welfare over the whole horizon.
    pub avg_welfare_all: f64,
    /// Per-(player, type) external regret estimates.
    pub regrets: Vec<Vec<f64>>,
    pub rounds: usize,
}

/// Repeated play with per-(player, type) online-gradient learners: each
/// round draws a type profile, the drawn learners step against the frozen
/// realized profile, and welfare is recorded under the realized types.
pub fn bayes_learning_welfare(
    inst: &Instance,
    dist: &TypeDistribution,
    rounds: usize,
    cfg: &SolverConfig,
) -> Result<BayesOutcome> {
    if rounds == 0 {
        return Err(Error::Domain("need at least one round".into()));
    }
    let n = inst.n_players();
    let floor = inst.epsilon_floor().unwrap_or(DEFAULT_EPSILON_FLOOR);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // One learner per support point, initialized under its own type.
    let mut learners: Vec<Vec<Learner>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut per_type = Vec::with_capacity(dist.support(i).len());
        for k in 0..dist.support(i).len() {
            let realized = dist.realize(inst, &fixed_indices(dist, i, k))?;
            per_type.push(learner_init(&realized, i, cfg)?);
        }
        learners.push(per_type);
    }

    // Realized instances per type combination, precomputed when the
    // product of support sizes is small (it is, for finite-support runs).
    let radices: Vec<usize> = (0..n).map(|i| dist.support(i).len()).collect();
    let combos: usize = radices.iter().product();
    let combo_index = |indices: &[usize]| -> usize {
        indices.iter().zip(&radices).fold(0, |acc, (&k, &r)| acc * r + k)
    };
    let prebuilt: Option<Vec<Instance>> = if combos <= 256 {
        let mut all = Vec::with_capacity(combos);
        let mut indices = vec![0usize; n];
        loop {
            all.push(dist.realize(inst, &indices)?);
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                indices[pos] += 1;
                if indices[pos] < radices[pos] {
                    break;
                }
                indices[pos] = 0;
            }
            if indices.iter().all(|&k| k == 0) {
                break;
            }
        }
        Some(all)
    } else {
        None
    };

    let thin = (rounds / 512).max(1);
    let mut trace: Vec<(Vec<usize>, QualityProfile)> = Vec::with_capacity(rounds / thin + 1);
    let mut welfare_sum_all = 0.0;
    let mut welfare_sum_tail = 0.0;
    let tail_start = rounds / 2 + 1;
    let mut scratch_realized;
    for t in 1..=rounds {
        let indices = sample_type_profile(dist, &mut rng);
        let realized = match &prebuilt {
            Some(all) => &all[combo_index(&indices)],
            None => {
                scratch_realized = dist.realize(inst, &indices)?;
                &scratch_realized
            }
        };
        let mut profile = inst.zero_profile();
        for i in 0..n {
            let learner = &learners[i][indices[i]];
            for (pos, &j) in inst.projects_of(i).iter().enumerate() {
                profile.set(inst, i, j, learner.q[pos]);
            }
        }
        let snapshot = profile.clone();
        for i in 0..n {
            let q =
                gradient_update(realized, &snapshot, i, &mut learners[i][indices[i]], floor)?;
            for (pos, &j) in inst.projects_of(i).iter().enumerate() {
                profile.set(inst, i, j, q[pos]);
            }
        }
        let welfare = realized.social_welfare(&profile)?;
        welfare_sum_all += welfare;
        if t >= tail_start {
            welfare_sum_tail += welfare;
        }
        if t % thin == 0 {
            trace.push((indices, profile));
        }
    }

    // Regret per (player, type) over the rounds where that type was drawn.
    let mut regrets = Vec::with_capacity(n);
    for i in 0..n {
        let mut per_type = Vec::with_capacity(dist.support(i).len());
        for k in 0..dist.support(i).len() {
            let samples: Vec<QualityProfile> = trace
                .iter()
                .filter(|(indices, _)| indices[i] == k)
                .map(|(_, p)| p.clone())
                .collect();
            if samples.is_empty() {
                per_type.push(0.0);
                continue;
            }
            let realized = dist.realize(inst, &fixed_indices(dist, i, k))?;
            let all = estimate_regrets(&realized, &samples, cfg)?;
            per_type.push(all[i]);
        }
        regrets.push(per_type);
    }

    let tail_len = (rounds - tail_start + 1) as f64;
    Ok(BayesOutcome {
        avg_welfare: welfare_sum_tail / tail_len,
        avg_welfare_all: welfare_sum_all / rounds as f64,
        regrets,
        rounds,
    })
}

/// Index vector putting player `i` at type `k` and everyone else at their
/// first support point; used where only player `i`'s type matters.
fn fixed_indices(dist: &TypeDistribution, i: usize, k: usize) -> Vec<usize> {
    let mut indices = vec![0; dist.n_players()];
    indices[i] = k;
    indices
}
