//! Efficiency analysis: smoothness verification, price-of-anarchy bounds,
//! elasticity, and the worked instance families with their predicted
//! values.

pub mod corpus;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::model::{
    CostModel, EffortMap, Instance, PlayerSpec, ProjectSpec, QualityProfile, ValueFunction,
};
use crate::sharing::SharingRule;
use crate::solvers::{
    self, brute_force_opt, golden_min, solve_opt, utility_with_own, EquilibriumResult,
};
use crate::{Error, Result};

/// Relative slack below which a smoothness inequality counts as violated.
pub const SMOOTHNESS_SLACK_TOL: f64 = 1e-8;

/// Smoothness parameters; the induced welfare guarantee is `λ/(1+μ)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothnessParams {
    pub lambda: f64,
    pub mu: f64,
}

impl SmoothnessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::NonPositive { what: "lambda", value: self.lambda });
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Negative { what: "mu", value: self.mu });
        }
        let g = self.guarantee();
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Domain(format!("guarantee {g} outside (0, 1]")));
        }
        Ok(())
    }

    pub fn guarantee(&self) -> f64 {
        self.lambda / (1.0 + self.mu)
    }
}

/// `Σ_i u_i(q*_i, q_{−i})`: every player deviates unilaterally to their
/// coordinate of `q_star` while the rest stay at `q`.
pub fn deviation_utility_sum(
    inst: &Instance,
    q_star: &QualityProfile,
    q: &QualityProfile,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..inst.n_players() {
        let own: Vec<f64> = inst.projects_of(i).iter().map(|&j| q_star.get(inst, i, j)).collect();
        total += utility_with_own(inst, q, i, &own)?;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct SmoothnessReport {
    /// Smallest slack of the smoothness inequality over the test profiles.
    pub min_slack: f64,
    pub violations: usize,
    pub checked: usize,
    pub holds: bool,
    /// Welfare of the deviation profile used as `OPT`.
    pub opt: f64,
}

/// Checks the universal `(λ, μ)`-smoothness inequality
/// `Σ_i u_i(q*_i, q_{−i}) >= λ·OPT − μ·SW(q)` over the given test
/// profiles. The deviation profile defaults to the welfare maximizer
/// (grid oracle when the objective is not concave); an infeasible `q_star`
/// is an error.
pub fn check_universal_smoothness(
    inst: &Instance,
    params: SmoothnessParams,
    q_star: Option<&QualityProfile>,
    test_profiles: &[QualityProfile],
) -> Result<SmoothnessReport> {
    params.validate()?;
    let (q_star, opt) = match q_star {
        Some(p) => (p.clone(), inst.social_welfare(p)?),
        None => match solve_opt(inst) {
            Ok(pair) => pair,
            Err(Error::NonConcaveObjective) => brute_force_opt(inst, 40)?,
            Err(e) => return Err(e),
        },
    };
    let slacks = exec::map_indexed(test_profiles.len(), |t| {
        let q = &test_profiles[t];
        let dev = deviation_utility_sum(inst, &q_star, q)?;
        let sw = inst.social_welfare(q)?;
        Ok::<f64, Error>(dev - params.lambda * opt + params.mu * sw)
    });
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    let tol = SMOOTHNESS_SLACK_TOL * (1.0 + opt.abs());
    for slack in slacks {
        let slack = slack?;
        if slack < -tol {
            violations += 1;
        }
        min_slack = min_slack.min(slack);
    }
    if test_profiles.is_empty() {
        min_slack = 0.0;
    }
    Ok(SmoothnessReport {
        min_slack,
        violations,
        checked: test_profiles.len(),
        holds: violations == 0,
        opt,
    })
}

/// Upper bound on `Σ_i x_i(y_i − x_i)` given the totals `x = Σ x_i` and
/// `y = Σ y_i`.
pub fn k_fun(x: f64, y: f64) -> f64 {
    if x >= y / 2.0 {
        y * y / 4.0
    } else {
        x * (y - x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KFactReport {
    pub trials: usize,
    pub violations: usize,
    /// Worst observed excess of the sum over the bound.
    pub max_excess: f64,
    /// Saw a case with `x >= y/2` meeting the bound exactly.
    pub tight_upper_branch: bool,
    /// Saw a case with `x < y/2` meeting the bound exactly.
    pub tight_lower_branch: bool,
}

/// Verifies the split inequality on random nonnegative splits of up to
/// eight coordinates, seeding two exact tight witnesses (one per branch).
pub fn check_k_fact(trials: usize, seed: u64) -> KFactReport {
    // (x_i), (y_i), expected-tight branch.
    let witnesses: [(&[f64], &[f64]); 2] = [
        (&[1.0], &[2.0]), // x = y/2: sum = 1 = y²/4
        (&[1.0], &[4.0]), // x < y/2: sum = 3 = x(y−x)
    ];
    let mut report = KFactReport {
        trials: trials + witnesses.len(),
        violations: 0,
        max_excess: f64::NEG_INFINITY,
        tight_upper_branch: false,
        tight_lower_branch: false,
    };
    let consider = |xs: &[f64], ys: &[f64], report: &mut KFactReport| {
        let x: f64 = xs.iter().sum();
        let y: f64 = ys.iter().sum();
        let sum: f64 = xs.iter().zip(ys).map(|(&a, &b)| a * (b - a)).sum();
        let bound = k_fun(x, y);
        let excess = sum - bound;
        report.max_excess = report.max_excess.max(excess);
        if excess > 1e-12 {
            report.violations += 1;
        }
        if (sum - bound).abs() <= 1e-9 * (1.0 + bound.abs()) {
            if x >= y / 2.0 {
                report.tight_upper_branch = true;
            } else {
                report.tight_lower_branch = true;
            }
        }
    };
    for (xs, ys) in witnesses {
        consider(xs, ys, &mut report);
    }
    let cases = exec::map_indexed(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(exec::substream_seed(seed, t as u64));
        let n = rng.random_range(1..=8);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..scale)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..scale)).collect();
        (xs, ys)
    });
    for (xs, ys) in &cases {
        consider(xs, ys, &mut report);
    }
    report
}

/// Which piece of the piecewise bound function applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HBranch {
    /// `z − (1−α)/4·z² − λ·z^α + μ`, the `z <= 2` case.
    Low,
    /// `α·z − λ·z^α + μ`, the `z > 2` case.
    High,
}

/// Evaluates one branch of the piecewise function behind the constant-
/// elasticity price-of-anarchy program. The two branches need not agree at
/// `z = 2`; the two cases are analyzed separately.
pub fn h_alpha_branch(z: f64, lambda: f64, mu: f64, alpha: f64, branch: HBranch) -> f64 {
    match branch {
        HBranch::Low => z - (1.0 - alpha) / 4.0 * z * z - lambda * z.powf(alpha) + mu,
        HBranch::High => alpha * z - lambda * z.powf(alpha) + mu,
    }
}

/// The piecewise function itself: the low branch for `z <= 2`, the high
/// branch beyond.
pub fn h_alpha(z: f64, lambda: f64, mu: f64, alpha: f64) -> f64 {
    if z <= 2.0 {
        h_alpha_branch(z, lambda, mu, alpha, HBranch::Low)
    } else {
        h_alpha_branch(z, lambda, mu, alpha, HBranch::High)
    }
}

/// Closed-form price of anarchy for constant-elasticity values under
/// proportional sharing, with the pair `(λ, μ)` achieving it.
#[derive(Debug, Clone, Copy)]
pub struct PoaAlpha {
    /// `(2−α)/2^(1−α)`, the worst-case OPT/equilibrium ratio.
    pub poa: f64,
    /// `2^(1−α)/(2−α)`, the welfare guarantee.
    pub guarantee: f64,
    pub lambda: f64,
    pub mu: f64,
}

pub fn poa_alpha_analytic(alpha: f64) -> Result<PoaAlpha> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let lambda = 2f64.powf(1.0 - alpha);
    let poa = (2.0 - alpha) / lambda;
    Ok(PoaAlpha { poa, guarantee: 1.0 / poa, lambda, mu: 1.0 - alpha })
}

#[derive(Debug, Clone, Copy)]
pub struct PoaSearchConfig {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub z_max: f64,
    pub grid_points: usize,
    /// Coarse scan resolution used to bracket the golden-section refine.
    pub scan_points: usize,
}

impl Default for PoaSearchConfig {
    fn default() -> Self {
        PoaSearchConfig {
            lambda_lo: 0.05,
            lambda_hi: 4.0,
            z_max: 50.0,
            grid_points: 20_001,
            scan_points: 200,
        }
    }
}

/// Numerically solves the case-resolved program `min (1+μ)/λ` behind the
/// constant-elasticity bound: over the branch `λ >= 2^(1−α)` (where the
/// case analysis places the global minimum), the minimal feasible `μ(λ)`
/// is the largest violation over the grid's `z >= 2` region of the
/// continuous bound `α·z + (1−α) − λ·z^α + μ >= 0`, whose `z = 2` value
/// coincides with the low branch's boundary value — the binding low-branch
/// point in that λ range. The result is cross-checked against the closed
/// form; a mismatch beyond `1e-3` reports a too-coarse grid.
pub fn poa_alpha_numeric(alpha: f64, cfg: &PoaSearchConfig) -> Result<f64> {
    let analytic = poa_alpha_analytic(alpha)?;
    let zs: Vec<f64> = (0..cfg.grid_points)
        .map(|k| cfg.z_max * k as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    // h >= 0 rearranges to a per-z lower bound on mu.
    let needed_mu = |lambda: f64| -> f64 {
        let mut need = 0.0f64;
        for &z in zs.iter().filter(|&&z| z >= 2.0) {
            let gap = lambda * z.powf(alpha) - alpha * z - (1.0 - alpha);
            need = need.max(gap);
        }
        // The low branch evaluated at its boundary point.
        need.max(lambda * 2f64.powf(alpha) - 1.0 - alpha)
    };
    let objective = |lambda: f64| (1.0 + needed_mu(lambda)) / lambda;
    let branch_lo = 2f64.powf(1.0 - alpha).max(cfg.lambda_lo);
    let mut best_idx = 0;
    let mut best = f64::INFINITY;
    let lambdas: Vec<f64> = (0..cfg.scan_points)
        .map(|k| {
            branch_lo + (cfg.lambda_hi - branch_lo) * k as f64 / (cfg.scan_points - 1) as f64
        })
        .collect();
    let values = exec::map_indexed(lambdas.len(), |k| objective(lambdas[k]));
    for (k, &v) in values.iter().enumerate() {
        if v < best {
            best = v;
            best_idx = k;
        }
    }
    let lo = lambdas[best_idx.saturating_sub(1)];
    let hi = lambdas[(best_idx + 1).min(lambdas.len() - 1)];
    let (_, poa) = golden_min(objective, lo, hi, 1e-9);
    if (poa - analytic.poa).abs() > 1e-3 {
        return Err(Error::GridGuard(format!(
            "z-grid too coarse: numeric PoA {poa} vs analytic {}",
            analytic.poa
        )));
    }
    Ok(poa)
}

/// Minimum of the constant-elasticity welfare guarantee over the exponent,
/// returned as `(argmin alpha, min guarantee)`.
pub fn poa_guarantee_minimum() -> (f64, f64) {
    let (alpha, g) =
        golden_min(|a| poa_alpha_analytic(a).expect("alpha in range").guarantee, 0.05, 1.0, 1e-10);
    (alpha, g)
}

/// Elasticity `|f'(x)·x/f(x)|` by central differences.
pub fn elasticity_numeric(f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("elasticity needs x > 0, got {x}")));
    }
    let fx = f(x);
    if fx == 0.0 {
        return Err(Error::Domain("elasticity undefined where f(x) = 0".into()));
    }
    let h = 1e-6 * x;
    let d = (f(x + h) - f(x - h)) / (2.0 * h);
    Ok((d * x / fx).abs())
}

/// The congestion lower-bound family: `n` players with unit budgets on `n`
/// projects, one fast-saturating project and `n−1` slow ones weighted so
/// the unique equilibrium stacks everything on project one.
pub fn lower_bound_instance(n: usize, alpha: f64, beta: f64) -> Result<Instance> {
    if n < 2 {
        return Err(Error::Domain("lower-bound instance needs n >= 2".into()));
    }
    if !(alpha > 1.0) {
        return Err(Error::Domain(format!("lower-bound instance needs alpha > 1, got {alpha}")));
    }
    if !(beta > 0.0) {
        return Err(Error::NonPositive { what: "beta", value: beta });
    }
    let nf = n as f64;
    let kappa = (nf - 1.0) / (beta * nf * nf);
    let project_ids: Vec<String> = (0..n).map(|j| format!("proj{j}")).collect();
    let players = (0..n)
        .map(|i| PlayerSpec {
            id: format!("p{i}"),
            cost: CostModel::HardBudget { budget: 1.0 },
            projects: project_ids
                .iter()
                .map(|id| (id.clone(), EffortMap::identity()))
                .collect(),
        })
        .collect();
    let projects = (0..n)
        .map(|j| ProjectSpec {
            id: project_ids[j].clone(),
            value: if j == 0 {
                ValueFunction::Saturating { kappa: 1.0, beta: alpha }
            } else {
                ValueFunction::Saturating { kappa, beta }
            },
            sharing: None,
        })
        .collect();
    Instance::new(players, projects, SharingRule::Proportional, None)
}

#[derive(Debug, Clone, Copy)]
pub struct LowerBoundPrediction {
    /// Equilibrium welfare `1 − e^(−α·n)`.
    pub eq_welfare: f64,
    /// Assignment lower bound on the optimum,
    /// `1 − e^(−α) + (n−1)²/(β·n²)·(1 − e^(−β))`.
    pub opt_bound: f64,
    /// Predicted ratio `1 + (1 − 1/n)²·(1 − e^(−β))/β`.
    pub ratio: f64,
}

pub fn lower_bound_prediction(n: usize, alpha: f64, beta: f64) -> LowerBoundPrediction {
    let nf = n as f64;
    let eq_welfare = 1.0 - (-alpha * nf).exp();
    let opt_bound = 1.0 - (-alpha).exp()
        + (nf - 1.0) * (nf - 1.0) / (beta * nf * nf) * (1.0 - (-beta).exp());
    let ratio = 1.0 + (1.0 - 1.0 / nf) * (1.0 - 1.0 / nf) * (1.0 - (-beta).exp()) / beta;
    LowerBoundPrediction { eq_welfare, opt_bound, ratio }
}

/// The assignment profile witnessing the optimum lower bound: player `i`
/// devotes their whole budget to project `i`.
pub fn lower_bound_assignment_profile(inst: &Instance) -> QualityProfile {
    let mut profile = inst.zero_profile();
    for i in 0..inst.n_players() {
        profile.set(inst, i, i, 1.0);
    }
    profile
}

/// `n` players with linear effort cost on one square-root project under
/// proportional sharing.
pub fn linear_cost_instance(n: usize) -> Instance {
    let players = (0..n)
        .map(|i| PlayerSpec {
            id: format!("p{i}"),
            cost: CostModel::SoftLinear,
            projects: [("s".to_string(), EffortMap::identity())].into_iter().collect(),
        })
        .collect();
    let projects =
        vec![ProjectSpec { id: "s".into(), value: ValueFunction::Sqrt, sharing: None }];
    Instance::new(players, projects, SharingRule::Proportional, None).expect("well-formed")
}

/// Exact OPT/equilibrium ratio of the linear-cost family: `n²/(2n−1)`.
pub fn linear_cost_poa(n: usize) -> f64 {
    let nf = n as f64;
    nf * nf / (2.0 * nf - 1.0)
}

/// Closed-form efficiency bounds under soft costs of elasticity `1 + μ`:
/// welfare at least `μ/(1+2μ)` of optimal, production at least
/// `μ/(2(1+μ))` of the production at the welfare maximizer. Both tend to
/// one half as `μ → ∞`, the hard-budget limit.
pub fn soft_budget_bounds(mu: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(Error::Domain(
            "soft-budget bounds need elasticity strictly above 1 (mu > 0); \
             the linear case degrades linearly with n"
                .into(),
        ));
    }
    Ok((mu / (1.0 + 2.0 * mu), 0.5 * mu / (1.0 + mu)))
}

#[derive(Debug, Clone, Copy)]
pub struct NonmonotoneReport {
    /// Total equilibrium quality; exceeds `1 − 1/n`.
    pub q_tilde: f64,
    /// Peak location (the socially optimal total).
    pub q_star: f64,
    /// Closed-form anarchy lower bound `n/(−v'(1))`.
    pub bound: f64,
    /// Realized `v(Q*)/v(Q̃)`.
    pub realized_poa: f64,
}

/// Anarchy growth on the normalized single-peaked family: solves the
/// zero-cost symmetric equilibrium and reports the realized ratio next to
/// the `n/(−v'(1))` bound.
pub fn nonmonotone_poa_bound(vf: &ValueFunction, n: usize) -> Result<NonmonotoneReport> {
    let ValueFunction::SinglePeaked { .. } = vf else {
        return Err(Error::Domain("bound applies to the single-peaked family".into()));
    };
    let peak = 0.5;
    let peak_value = vf.value_of_total(peak);
    if (peak_value - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "family must be normalized to peak value 1 (got {peak_value}); use r = 4"
        )));
    }
    let q_tilde = solvers::symmetric_single_project_eq(vf, None, n)?;
    let slope_at_one = vf.total_derivative(1.0);
    let bound = n as f64 / (-slope_at_one);
    let realized_poa = peak_value / vf.value_of_total(q_tilde);
    Ok(NonmonotoneReport { q_tilde, q_star: peak, bound, realized_poa })
}

/// Slack of `SW(eq) + V(eq) >= OPT`: nonnegative at every equilibrium of a
/// marginal-contribution rule under soft budgets.
pub fn welfare_plus_production_check(inst: &Instance, eq: &EquilibriumResult) -> Result<f64> {
    let (production, _, _) = inst.production_and_cost(&eq.profile)?;
    let (_, opt) = solve_opt(inst)?;
    Ok(eq.welfare + production - opt)
}

/// One row of a price-of-anarchy comparison.
#[derive(Debug, Clone)]
pub struct PoaReport {
    pub instance: String,
    pub eq_welfare: f64,
    pub opt_welfare: f64,
    /// `OPT / eq`, at least one up to solver tolerance.
    pub ratio: f64,
    /// The theoretical bound this instance is checked against.
    pub bound: f64,
    pub satisfied: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::SolverConfig;

    #[test]
    fn k_fun_branches() {
        assert_eq!(k_fun(1.0, 1.0), 0.25);
        assert_eq!(k_fun(1.0, 4.0), 3.0);
        assert_eq!(k_fun(0.0, 7.0), 0.0);
    }

    #[test]
    fn k_fact_sweep_with_tight_witnesses() {
        let report = check_k_fact(10_000, 99);
        assert_eq!(report.violations, 0);
        assert!(report.tight_upper_branch);
        assert!(report.tight_lower_branch);
        assert!(report.max_excess <= 1e-12);
    }

    #[test]
    fn k_fact_equal_splits_are_nonpositive() {
        let xs = [0.3, 1.1, 0.7];
        let sum: f64 = xs.iter().map(|&a| a * (a - a)).sum();
        assert_eq!(sum, 0.0);
        let x: f64 = xs.iter().sum();
        assert!(k_fun(x, x) >= 0.0);
    }

    #[test]
    fn h_alpha_values() {
        // Both terms vanish at z = 0.
        assert_eq!(h_alpha(0.0, 3.0, 0.7, 0.5), 0.7);
        // Optimal pair at the branch point: 1 + μ + α − 2^α·λ = 0.
        let alpha = 0.5f64;
        let lambda = 2f64.powf(1.0 - alpha);
        let mu = 1.0 - alpha;
        let at2 = h_alpha_branch(2.0, lambda, mu, alpha, HBranch::Low);
        assert!(at2.abs() < 1e-12, "{at2}");
        // The two branches differ by 1 − α at z = 2.
        let low = h_alpha_branch(2.0, 1.3, 0.4, 0.3, HBranch::Low);
        let high = h_alpha_branch(2.0, 1.3, 0.4, 0.3, HBranch::High);
        assert!((low - high - (1.0 - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn poa_analytic_values() {
        assert!((poa_alpha_analytic(1.0).unwrap().poa - 1.0).abs() < 1e-15);
        let half = poa_alpha_analytic(0.5).unwrap();
        assert!((half.poa - 1.5 / 2f64.sqrt()).abs() < 1e-12);
        assert!((half.poa - 1.06066).abs() < 1e-5);
        assert!((half.guarantee - 0.94281).abs() < 1e-5);
        assert!(poa_alpha_analytic(0.0).is_err());
        assert!(poa_alpha_analytic(1.2).is_err());
    }

    #[test]
    fn poa_numeric_matches_analytic() {
        let cfg = PoaSearchConfig::default();
        for &alpha in &[0.25, 0.5, 1.0] {
            let numeric = poa_alpha_numeric(alpha, &cfg).unwrap();
            let analytic = poa_alpha_analytic(alpha).unwrap().poa;
            assert!((numeric - analytic).abs() < 1e-3, "alpha={alpha}: {numeric} vs {analytic}");
        }
    }

    #[test]
    fn guarantee_minimum_is_above_094() {
        let (alpha, g) = poa_guarantee_minimum();
        assert!((alpha - 0.557).abs() < 0.01, "alpha* = {alpha}");
        assert!(g >= 0.94, "min guarantee {g}");
        assert!((g - 0.9423).abs() < 1e-3);
    }

    #[test]
    fn elasticity_examples() {
        for &x in &[0.3, 1.0, 12.0] {
            let e = elasticity_numeric(|t| 2.0 * t.powf(0.7), x).unwrap();
            assert!((e - 0.7).abs() < 1e-6);
            let e = elasticity_numeric(|t| 0.4 * t.powf(1.8), x).unwrap();
            assert!((e - 1.8).abs() < 1e-6);
        }
        // Saturating value approaches unit elasticity as x → 0; the
        // tolerance tracks the O(x) Taylor remainder.
        for &x in &[1e-2, 1e-3, 1e-4] {
            let e = elasticity_numeric(|t| 1.0 - (-t).exp(), x).unwrap();
            assert!((e - 1.0).abs() < x, "x={x}: {e}");
        }
        assert!(elasticity_numeric(|_| 0.0, 1.0).is_err());
        assert!(elasticity_numeric(|t| t, 0.0).is_err());
    }

    #[test]
    fn lower_bound_predictions() {
        let p = lower_bound_prediction(2, 50.0, 1e-3);
        assert!((p.ratio - 1.24988).abs() < 1e-4, "{}", p.ratio);
        let p = lower_bound_prediction(100, 50.0, 1e-3);
        assert!((p.ratio - 1.9796).abs() < 1e-3, "{}", p.ratio);
        // The beta → 0, n → ∞ limit approaches 2.
        let p = lower_bound_prediction(100_000, 50.0, 1e-9);
        assert!((p.ratio - 2.0).abs() < 1e-3);
        assert!(lower_bound_instance(1, 50.0, 1e-3).is_err());
        assert!(lower_bound_instance(4, 0.5, 1e-3).is_err());
    }

    // The exact optimizer dominates the assignment lower bound on the
    // congestion family.
    #[test]
    fn lower_bound_solver_opt_exceeds_assignment_bound() {
        let inst = lower_bound_instance(4, 50.0, 1e-3).unwrap();
        let bound = inst.social_welfare(&lower_bound_assignment_profile(&inst)).unwrap();
        let predicted = lower_bound_prediction(4, 50.0, 1e-3);
        assert!((bound - predicted.opt_bound).abs() < 1e-9);
        let (_, opt) = solve_opt(&inst).unwrap();
        assert!(opt >= bound - 1e-9, "{opt} < {bound}");
        assert!(opt >= 1.0 + 0.5625 * 0.9995, "{opt}");
    }

    #[test]
    fn linear_cost_ratio_formula() {
        assert_eq!(linear_cost_poa(1), 1.0);
        assert!((linear_cost_poa(2) - 4.0 / 3.0).abs() < 1e-15);
        assert!((linear_cost_poa(10) - 100.0 / 19.0).abs() < 1e-12);
    }

    #[test]
    fn soft_budget_bound_values() {
        let (sw, prod) = soft_budget_bounds(1.0).unwrap();
        assert!((sw - 1.0 / 3.0).abs() < 1e-15);
        assert!((prod - 0.25).abs() < 1e-15);
        let (sw, prod) = soft_budget_bounds(0.5).unwrap();
        assert!((sw - 0.25).abs() < 1e-15);
        assert!((prod - 1.0 / 6.0).abs() < 1e-15);
        let (sw, prod) = soft_budget_bounds(1e9).unwrap();
        assert!((sw - 0.5).abs() < 1e-8 && (prod - 0.5).abs() < 1e-8);
        assert!(soft_budget_bounds(0.0).is_err());
    }

    #[test]
    fn nonmonotone_family_closed_forms() {
        let vf = ValueFunction::SinglePeaked { r: 4.0 };
        let rep = nonmonotone_poa_bound(&vf, 3).unwrap();
        assert!((rep.q_tilde - 0.75).abs() < 1e-10);
        assert!((rep.realized_poa - 4.0 / 3.0).abs() < 1e-9);
        assert!((rep.bound - 0.75).abs() < 1e-12);
        assert!(rep.realized_poa >= rep.bound);

        let rep = nonmonotone_poa_bound(&vf, 8).unwrap();
        assert!((rep.q_tilde - 8.0 / 9.0).abs() < 1e-10);
        assert!(rep.q_tilde >= 1.0 - 1.0 / 8.0);

        let rep = nonmonotone_poa_bound(&vf, 1).unwrap();
        assert!((rep.realized_poa - 1.0).abs() < 1e-9);

        assert!(nonmonotone_poa_bound(&ValueFunction::Sqrt, 3).is_err());
        assert!(
            nonmonotone_poa_bound(&ValueFunction::SinglePeaked { r: 2.0 }, 3).is_err()
        );
    }

    #[test]
    fn smoothness_holds_for_proportional_and_fails_for_equal_split() {
        // Proportional + concave values: (1,1)-smooth, slack stays
        // nonnegative including at the all-zero profile.
        let inst = corpus::uniform_power_instance(2, 2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut profiles = vec![inst.zero_profile()];
        for _ in 0..50 {
            profiles.push(corpus::random_feasible_profile(&inst, &mut rng));
        }
        let params = SmoothnessParams { lambda: 1.0, mu: 1.0 };
        let rep = check_universal_smoothness(&inst, params, None, &profiles).unwrap();
        assert!(rep.holds, "min slack {}", rep.min_slack);

        // Equal split on a linear value admits a violation at q = 0.
        let players = vec![
            PlayerSpec {
                id: "big".into(),
                cost: CostModel::HardBudget { budget: 9.0 },
                projects: [("p".to_string(), EffortMap::identity())].into_iter().collect(),
            },
            PlayerSpec {
                id: "small".into(),
                cost: CostModel::HardBudget { budget: 1.0 },
                projects: [("p".to_string(), EffortMap::identity())].into_iter().collect(),
            },
        ];
        let projects = vec![ProjectSpec {
            id: "p".into(),
            value: ValueFunction::Power { weight: 1.0, alpha: 1.0 },
            sharing: Some(SharingRule::Ranking {
                coefficients: vec![0.5, 0.5],
                order: crate::sharing::RankingOrder::MarginalContribution,
            }),
        }];
        let inst =
            Instance::new(players, projects, SharingRule::Proportional, None).unwrap();
        let mut q_star = inst.zero_profile();
        q_star.set(&inst, 0, 0, 9.0);
        q_star.set(&inst, 1, 0, 1.0);
        let zero = inst.zero_profile();
        let rep =
            check_universal_smoothness(&inst, params, Some(&q_star), &[zero]).unwrap();
        assert!(!rep.holds, "equal split should violate: slack {}", rep.min_slack);
    }

    // A rule paying a 1/H_n fraction of the marginal contribution makes
    // the game (1/H_n, 1/H_n)-smooth, hence an (H_n + 1)-approximation.
    #[test]
    fn harmonic_ranking_is_inverse_harmonic_smooth() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for case in 0..6 {
            let inst = corpus::random_concave_instance(&mut rng).with_sharing_everywhere(
                &SharingRule::RankingHarmonic {
                    order: crate::sharing::RankingOrder::MarginalContribution,
                },
            );
            let n_max = (0..inst.n_projects())
                .map(|j| inst.players_of(j).len())
                .max()
                .unwrap();
            let h = crate::sharing::harmonic_number(n_max);
            let params = SmoothnessParams { lambda: 1.0 / h, mu: 1.0 / h };
            let mut profiles = vec![inst.zero_profile()];
            for _ in 0..100 {
                profiles.push(corpus::random_feasible_profile(&inst, &mut rng));
            }
            let rep = check_universal_smoothness(&inst, params, None, &profiles).unwrap();
            assert!(rep.holds, "case {case}: min slack {:.3e}", rep.min_slack);
        }
    }

    #[test]
    fn single_player_smoothness_is_trivially_nonnegative() {
        let inst = corpus::uniform_power_instance(1, 2, 0.5);
        let (opt_profile, _) = solve_opt(&inst).unwrap();
        let params = SmoothnessParams { lambda: 1.0, mu: 1.0 };
        let rep = check_universal_smoothness(
            &inst,
            params,
            Some(&opt_profile),
            std::slice::from_ref(&opt_profile),
        )
        .unwrap();
        assert!(rep.min_slack >= 0.0);
    }

    // Converged equilibria of power-value instances never leave a project
    // empty: unbounded marginals at zero pull some quality everywhere.
    #[test]
    fn power_equilibria_have_positive_totals() {
        let cfg = SolverConfig::default();
        for case in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::exec::substream_seed(0x9051, case));
            let inst = corpus::random_power_instance(&mut rng, 0.6);
            let eq = solvers::br_dynamics(&inst, &cfg, None).unwrap();
            if !eq.converged {
                continue;
            }
            for j in 0..inst.n_projects() {
                let total = inst.project_total(&eq.profile, j);
                assert!(total > 0.0, "case {case}: project {j} empty at equilibrium");
            }
        }
    }

    #[test]
    fn welfare_plus_production_examples() {
        let inst = linear_cost_instance(2);
        let eq = solvers::br_dynamics(&inst, &SolverConfig::default(), None).unwrap();
        let slack = welfare_plus_production_check(&inst, &eq).unwrap();
        // SW + V = 0.1875 + 0.75 against OPT = 0.25.
        assert!((slack - (0.9375 - 0.25)).abs() < 1e-5, "{slack}");
    }
}
