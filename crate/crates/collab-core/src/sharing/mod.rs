//! Local value-sharing rules.
//!
//! A sharing rule splits each project's value among its participants,
//! budget-balanced by construction: shares always sum to `v_j(q^j)`. The
//! rules here are the ones with provable local guarantees — proportional
//! (concave-of-sum values), marginal-proportional and Shapley (submodular
//! values), winner-take-all (max-quality values), and ranking rules with
//! fixed position portions.

mod shapley;

pub use shapley::{
    exact_shares as shapley_exact_shares, sampled_shares as shapley_sampled_shares,
    sampled_shares_detailed as shapley_sampled_shares_detailed,
    sampled_shares_seq as shapley_sampled_shares_seq, SHAPLEY_EXACT_CAP,
};

use crate::model::{floored_total, Instance, QualityProfile, ValueFunction};
use crate::{Error, Result};

/// Per-player slack below which the marginal-contribution property is
/// considered violated.
pub const MC_SLACK_TOL: f64 = 1e-9;

/// How a ranking rule orders submissions before paying out fixed portions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingOrder {
    /// Decreasing marginal contribution (the order with the `1/H_n`
    /// guarantee); ties broken by ascending player position.
    MarginalContribution,
    /// Decreasing submitted quality; equivalent guarantee for values that
    /// depend only on the total quality.
    Quality,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SharingRule {
    /// `u_i = q_i / Q · v(q)`; all-zero profiles get all-zero shares.
    Proportional,
    /// `u_i = MC_i / Σ_k MC_k · v(q)`, uniform split when all marginals
    /// vanish.
    MarginalProportional,
    /// Exact Shapley value over participant orderings.
    ShapleyExact,
    /// Shapley value estimated over `samples` random permutations.
    ShapleySampled { samples: usize, seed: u64 },
    /// Fixed portions `coefficients[t]` paid by rank position.
    Ranking { coefficients: Vec<f64>, order: RankingOrder },
    /// Harmonic portions `1/(t·H_n)` derived from the participant count.
    RankingHarmonic { order: RankingOrder },
    /// Full value to the highest-quality participant, ties to the lowest
    /// player position.
    WinnerTakeAll,
}

impl SharingRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            SharingRule::ShapleySampled { samples, .. } => {
                if *samples == 0 {
                    return Err(Error::Domain("shapley sample count must be >= 1".into()));
                }
            }
            SharingRule::Ranking { coefficients, .. } => {
                validate_ranking_coefficients(coefficients)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// True when the per-player share is a concave function of own quality
    /// that vanishes at zero, so first-order solvers apply.
    pub fn is_concave_for(&self, vf: &ValueFunction) -> bool {
        match self {
            SharingRule::Proportional
            | SharingRule::ShapleyExact
            | SharingRule::ShapleySampled { .. } => vf.is_concave_of_sum(),
            _ => false,
        }
    }
}

fn validate_ranking_coefficients(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidCoefficients("empty coefficient vector".into()));
    }
    let mut sum = 0.0;
    for (t, &c) in a.iter().enumerate() {
        if c < 0.0 {
            return Err(Error::InvalidCoefficients(format!("negative coefficient {c}")));
        }
        if t > 0 && c > a[t - 1] + 1e-15 {
            return Err(Error::InvalidCoefficients("coefficients must be nonincreasing".into()));
        }
        sum += c;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidCoefficients(format!("coefficients sum to {sum}, not 1")));
    }
    Ok(())
}

/// Harmonic ranking portions `a_t = 1/(t·H_n)`, which sum to one.
pub fn harmonic_coefficients(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("harmonic coefficients need n >= 1".into()));
    }
    let h_n: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    Ok((1..=n).map(|t| 1.0 / (t as f64 * h_n)).collect())
}

/// The `n`-th harmonic number `H_n`.
pub fn harmonic_number(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Splits `v(q)` among the participants of one project.
pub fn shares(rule: &SharingRule, vf: &ValueFunction, q: &[f64]) -> Result<Vec<f64>> {
    for &qi in q {
        if qi < 0.0 {
            return Err(Error::Domain(format!("negative quality {qi}")));
        }
    }
    let n = q.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let v = vf.value(q);
    match rule {
        SharingRule::Proportional => {
            let total: f64 = q.iter().sum();
            if total == 0.0 {
                Ok(vec![0.0; n])
            } else {
                Ok(q.iter().map(|&qi| qi / total * v).collect())
            }
        }
        SharingRule::MarginalProportional => {
            let mcs: Vec<f64> =
                (0..n).map(|i| vf.marginal_contribution(q, i)).collect::<Result<_>>()?;
            let sum: f64 = mcs.iter().sum();
            if sum == 0.0 {
                Ok(vec![v / n as f64; n])
            } else {
                Ok(mcs.iter().map(|&mc| mc / sum * v).collect())
            }
        }
        SharingRule::ShapleyExact => shapley::exact_shares(vf, q),
        SharingRule::ShapleySampled { samples, seed } => {
            Ok(shapley::sampled_shares(vf, q, *samples, *seed))
        }
        SharingRule::Ranking { coefficients, order } => {
            if coefficients.len() != n {
                return Err(Error::CoefficientLength { expected: n, got: coefficients.len() });
            }
            ranked_shares(vf, q, coefficients, *order, v)
        }
        SharingRule::RankingHarmonic { order } => {
            let coefficients = harmonic_coefficients(n)?;
            ranked_shares(vf, q, &coefficients, *order, v)
        }
        SharingRule::WinnerTakeAll => {
            let mut winner = 0;
            for i in 1..n {
                if q[i] > q[winner] {
                    winner = i;
                }
            }
            let mut out = vec![0.0; n];
            out[winner] = v;
            Ok(out)
        }
    }
}

fn ranked_shares(
    vf: &ValueFunction,
    q: &[f64],
    coefficients: &[f64],
    order: RankingOrder,
    v: f64,
) -> Result<Vec<f64>> {
    let n = q.len();
    let keys: Vec<f64> = match order {
        RankingOrder::MarginalContribution => {
            (0..n).map(|i| vf.marginal_contribution(q, i)).collect::<Result<_>>()?
        }
        RankingOrder::Quality => q.to_vec(),
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    let mut out = vec![0.0; n];
    for (t, &i) in idx.iter().enumerate() {
        out[i] = coefficients[t] * v;
    }
    Ok(out)
}

/// One participant's entry in a marginal-contribution report.
#[derive(Debug, Clone, Copy)]
pub struct McEntry {
    pub share: f64,
    pub marginal_contribution: f64,
    /// `share − MC`; the property asks for this to be nonnegative.
    pub slack: f64,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub entries: Vec<McEntry>,
    pub min_slack: f64,
    pub holds: bool,
}

/// Checks `u_i(q) >= v(q) − v(q_{-i})` participant by participant.
pub fn check_mc_property(
    rule: &SharingRule,
    vf: &ValueFunction,
    q: &[f64],
) -> Result<McReport> {
    let share_vec = shares(rule, vf, q)?;
    let mut entries = Vec::with_capacity(q.len());
    let mut min_slack = f64::INFINITY;
    for (i, &share) in share_vec.iter().enumerate() {
        let mc = vf.marginal_contribution(q, i)?;
        let slack = share - mc;
        min_slack = min_slack.min(slack);
        entries.push(McEntry { share, marginal_contribution: mc, slack });
    }
    if q.is_empty() {
        min_slack = 0.0;
    }
    Ok(McReport { entries, min_slack, holds: min_slack >= -MC_SLACK_TOL })
}

/// Worst ratio `MC_i / (H_n · share_i)` under the harmonic ranking rule in
/// marginal-contribution order. The approximate-marginal-contribution
/// guarantee holds iff the result is at most `1 + 1e-9`.
pub fn ranking_approx_factor(vf: &ValueFunction, q: &[f64]) -> Result<f64> {
    if q.is_empty() {
        return Ok(0.0);
    }
    let rule = SharingRule::RankingHarmonic { order: RankingOrder::MarginalContribution };
    let share_vec = shares(&rule, vf, q)?;
    let h_n = harmonic_number(q.len());
    let mut worst: f64 = 0.0;
    for (i, &share) in share_vec.iter().enumerate() {
        let mc = vf.marginal_contribution(q, i)?;
        let ratio = if mc == 0.0 {
            0.0
        } else if share == 0.0 {
            f64::INFINITY
        } else {
            mc / (h_n * share)
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Derivative of participant `i`'s share with respect to their own quality,
/// for the concave sharing rules. `floor` is the epsilon device keeping the
/// derivative finite when the project total is zero.
pub fn share_derivative(
    rule: &SharingRule,
    vf: &ValueFunction,
    q: &[f64],
    i: usize,
    floor: Option<f64>,
) -> Result<f64> {
    if !rule.is_concave_for(vf) {
        return Err(Error::NonConcaveRule);
    }
    match rule {
        SharingRule::Proportional => {
            let total: f64 = q.iter().sum();
            let eps = floor.unwrap_or(0.0);
            if total <= 0.0 && eps == 0.0 {
                return Ok(vf.total_derivative(0.0));
            }
            if total < eps {
                // In the floored region the share is q_i·v̄(eps).
                return Ok(vf.mean_value(eps));
            }
            Ok(vf.mean_value(total) + q[i] * vf.mean_value_derivative(total))
        }
        SharingRule::ShapleyExact | SharingRule::ShapleySampled { .. } => {
            shapley::share_derivative_concave(vf, q, i, floor)
        }
        _ => Err(Error::NonConcaveRule),
    }
}

/// Shares on project `j` of an instance under the project's own rule.
pub fn project_shares(inst: &Instance, profile: &QualityProfile, j: usize) -> Result<Vec<f64>> {
    let q = inst.project_qualities(profile, j);
    shares(&inst.project(j).sharing, &inst.project(j).value, &q)
}

/// Utility of player `i`: the sum of their shares minus any soft effort
/// cost.
pub fn player_utility(inst: &Instance, profile: &QualityProfile, i: usize) -> Result<f64> {
    let mut total = 0.0;
    for &j in inst.projects_of(i) {
        let members = inst.players_of(j);
        let pos = members.binary_search(&i).expect("participant");
        total += project_shares(inst, profile, j)?[pos];
    }
    let cost = inst.player(i).cost.cost(inst.player_effort(profile, i)?);
    Ok(total - cost)
}

/// Derivative of player `i`'s share on project `j` with respect to their own
/// quality there, holding everyone else fixed at `profile`.
pub fn own_share_derivative(
    inst: &Instance,
    profile: &QualityProfile,
    i: usize,
    j: usize,
    own_q: f64,
) -> Result<f64> {
    let members = inst.players_of(j);
    let pos = members.binary_search(&i).expect("participant");
    let mut q = inst.project_qualities(profile, j);
    q[pos] = own_q;
    let floor = inst.epsilon_floor().map(|eps| floored_total(inst, eps));
    share_derivative(&inst.project(j).sharing, &inst.project(j).value, &q, pos, floor)
}
