//! Seeded random instance and profile generators shared by the test
//! corpora and the experiment driver.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bayes::{PlayerType, TypeDistribution};
use crate::model::{
    CostModel, EffortMap, Instance, PlayerSpec, ProjectSpec, QualityProfile, ValueFunction,
};
use crate::sharing::SharingRule;

/// Symmetric benchmark family: full participation, unit budgets and
/// abilities, every project a unit-weight power value.
pub fn uniform_power_instance(n_players: usize, m_projects: usize, alpha: f64) -> Instance {
    let project_ids: Vec<String> = (0..m_projects).map(|j| format!("proj{j}")).collect();
    let players = (0..n_players)
        .map(|i| PlayerSpec {
            id: format!("p{i}"),
            cost: CostModel::HardBudget { budget: 1.0 },
            projects: project_ids
                .iter()
                .map(|id| (id.clone(), EffortMap::identity()))
                .collect(),
        })
        .collect();
    let projects = project_ids
        .iter()
        .map(|id| ProjectSpec {
            id: id.clone(),
            value: ValueFunction::Power { weight: 1.0, alpha },
            sharing: None,
        })
        .collect();
    Instance::new(players, projects, SharingRule::Proportional, None).expect("well-formed")
}

fn random_map(rng: &mut ChaCha8Rng) -> EffortMap {
    if rng.random_bool(0.7) {
        EffortMap::LinearAbility { ability: rng.random_range(0.5..2.0) }
    } else {
        // Exponents bounded away from one: near-linear power maps put
        // first-order ratios beyond what any root bisection can resolve.
        EffortMap::PowerConvex {
            exponent: rng.random_range(1.15..2.0),
            scale: rng.random_range(0.5..2.0),
        }
    }
}

/// Random participation structure where every player joins at least one
/// project and every project has at least one participant.
fn random_participation(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    join_prob: f64,
) -> Vec<Vec<usize>> {
    let mut member_of: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..m).filter(|_| rng.random_bool(join_prob)).collect::<Vec<_>>())
        .collect();
    for mine in member_of.iter_mut() {
        if mine.is_empty() {
            mine.push(rng.random_range(0..m));
        }
    }
    for j in 0..m {
        if !member_of.iter().any(|mine| mine.contains(&j)) {
            let i = rng.random_range(0..n);
            member_of[i].push(j);
            member_of[i].sort_unstable();
            member_of[i].dedup();
        }
    }
    member_of
}

fn build(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    join_prob: f64,
    cost: impl Fn(&mut ChaCha8Rng) -> CostModel,
    value: impl Fn(&mut ChaCha8Rng) -> ValueFunction,
) -> Instance {
    let member_of = random_participation(rng, n, m, join_prob);
    let project_ids: Vec<String> = (0..m).map(|j| format!("proj{j}")).collect();
    let players = (0..n)
        .map(|i| PlayerSpec {
            id: format!("p{i}"),
            cost: cost(rng),
            projects: member_of[i]
                .iter()
                .map(|&j| (project_ids[j].clone(), random_map(rng)))
                .collect(),
        })
        .collect();
    let projects = (0..m)
        .map(|j| ProjectSpec { id: project_ids[j].clone(), value: value(rng), sharing: None })
        .collect();
    Instance::new(players, projects, SharingRule::Proportional, None).expect("well-formed")
}

/// Constant-elasticity corpus: hard budgets, every project `w·Q^alpha`.
pub fn random_power_instance(rng: &mut ChaCha8Rng, alpha: f64) -> Instance {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..=6);
    build(
        rng,
        n,
        m,
        0.6,
        |rng| CostModel::HardBudget { budget: rng.random_range(0.5..2.0) },
        |rng| ValueFunction::Power { weight: rng.random_range(0.5..2.0), alpha },
    )
}

/// Monotone concave-of-sum corpus with mixed value kinds, hard budgets.
pub fn random_concave_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(2..=5);
    let m = rng.random_range(1..=4);
    build(
        rng,
        n,
        m,
        0.6,
        |rng| CostModel::HardBudget { budget: rng.random_range(0.5..2.0) },
        |rng| match rng.random_range(0..3) {
            0 => ValueFunction::Power {
                weight: rng.random_range(0.5..2.0),
                alpha: rng.random_range(0.3..1.0),
            },
            1 => ValueFunction::Saturating {
                kappa: rng.random_range(0.5..2.0),
                beta: rng.random_range(0.3..2.0),
            },
            _ => ValueFunction::Sqrt,
        },
    )
}

/// Small max-quality corpus (at most eight participation pairs) so the grid
/// oracle can certify its optimum.
pub fn random_max_quality_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(2..=4);
    let m = rng.random_range(1..=2);
    build(
        rng,
        n,
        m,
        0.5,
        |rng| CostModel::HardBudget { budget: rng.random_range(0.5..2.0) },
        |_| ValueFunction::MaxQuality,
    )
}

/// Soft-cost corpus with power costs of elasticity `1 + mu` and monotone
/// concave values.
pub fn random_soft_instance(rng: &mut ChaCha8Rng, mu: f64) -> Instance {
    let n = rng.random_range(2..=4);
    let m = rng.random_range(1..=3);
    build(
        rng,
        n,
        m,
        0.6,
        |rng| CostModel::SoftPower { kappa: rng.random_range(0.5..2.0), mu },
        |rng| match rng.random_range(0..3) {
            0 => ValueFunction::Power {
                weight: rng.random_range(0.5..2.0),
                alpha: rng.random_range(0.35..0.85),
            },
            1 => ValueFunction::Saturating {
                kappa: rng.random_range(0.5..2.0),
                beta: rng.random_range(0.3..1.5),
            },
            _ => ValueFunction::Sqrt,
        },
    )
}

/// The five hard-budget instances used for the learning-guarantee runs;
/// all sharing rules award at least the marginal contribution.
pub fn learning_corpus() -> Vec<Instance> {
    let shapley_pair = {
        let players = vec![
            PlayerSpec {
                id: "p0".into(),
                cost: CostModel::HardBudget { budget: 1.0 },
                projects: [("s".to_string(), EffortMap::identity())].into_iter().collect(),
            },
            PlayerSpec {
                id: "p1".into(),
                cost: CostModel::HardBudget { budget: 1.5 },
                projects: [("s".to_string(), EffortMap::LinearAbility { ability: 0.8 })]
                    .into_iter()
                    .collect(),
            },
        ];
        let projects = vec![ProjectSpec {
            id: "s".into(),
            value: ValueFunction::Saturating { kappa: 2.0, beta: 0.8 },
            sharing: None,
        }];
        Instance::new(players, projects, SharingRule::ShapleyExact, None).expect("well-formed")
    };
    vec![
        uniform_power_instance(2, 2, 0.5),
        uniform_power_instance(3, 2, 0.7),
        random_concave_instance(&mut ChaCha8Rng::seed_from_u64(101)),
        random_concave_instance(&mut ChaCha8Rng::seed_from_u64(202)),
        shapley_pair,
    ]
}

/// Five small incomplete-information cases: each player carries a two-type
/// budget distribution over the base instance's participation structure.
pub fn bayes_corpus() -> Vec<(Instance, TypeDistribution)> {
    let shapes = [(1usize, 1usize, 0.5), (2, 1, 0.5), (2, 2, 0.5), (3, 2, 0.6), (2, 2, 0.8)];
    shapes
        .iter()
        .enumerate()
        .map(|(case, &(n, m, alpha))| {
            let inst = uniform_power_instance(n, m, alpha);
            let support = (0..n)
                .map(|i| {
                    let maps =
                        vec![EffortMap::identity(); inst.projects_of(i).len()];
                    let lo = 0.8 + 0.1 * case as f64;
                    let hi = 1.6 + 0.2 * i as f64;
                    vec![
                        (
                            0.5,
                            PlayerType {
                                cost: CostModel::HardBudget { budget: lo },
                                maps: maps.clone(),
                            },
                        ),
                        (
                            0.5,
                            PlayerType { cost: CostModel::HardBudget { budget: hi }, maps },
                        ),
                    ]
                })
                .collect();
            let dist = TypeDistribution::new(&inst, support).expect("valid support");
            (inst, dist)
        })
        .collect()
}

/// A feasible profile: hard-budget players spend a random fraction of
/// their budget over a random split; soft-cost players pick bounded
/// qualities.
pub fn random_feasible_profile(inst: &Instance, rng: &mut ChaCha8Rng) -> QualityProfile {
    let mut profile = inst.zero_profile();
    for i in 0..inst.n_players() {
        let projects = inst.projects_of(i);
        match inst.player(i).cost.budget() {
            Some(b) => {
                let mut weights: Vec<f64> =
                    (0..projects.len()).map(|_| rng.random_range(0.0..1.0)).collect();
                let total: f64 = weights.iter().sum();
                if total == 0.0 {
                    continue;
                }
                let spend: f64 = rng.random_range(0.0..1.0);
                for w in &mut weights {
                    *w *= spend * b / total;
                }
                for (pos, &j) in projects.iter().enumerate() {
                    let map = inst.effort_map(i, j).expect("participant");
                    let q = map.quality_of_effort(weights[pos]).expect("nonnegative");
                    profile.set(inst, i, j, q);
                }
            }
            None => {
                for &j in projects {
                    profile.set(inst, i, j, rng.random_range(0.0..2.0));
                }
            }
        }
    }
    profile
}
