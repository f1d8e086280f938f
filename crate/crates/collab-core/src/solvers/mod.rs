//! Equilibrium and welfare solvers.

mod best_response;
mod dynamics;
mod learning;
mod onedim;
mod opt;
mod symmetric;

pub use best_response::{best_response, utility_with_own};
pub use dynamics::{br_dynamics, default_init, EquilibriumResult};
pub use learning::{no_regret_play, project_budget, LearningTrace};
pub use opt::{brute_force_opt, kkt_residual, solve_opt, KKT_TOL};
pub use symmetric::{symmetric_single_project_eq, symmetric_single_project_opt};

pub(crate) use learning::{estimate_regrets, gradient_update, learner_init, Learner};
pub(crate) use onedim::golden_min;

/// Solver settings; the defaults are the ones used by every reported
/// experiment.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Cap on best-response rounds.
    pub max_iters: usize,
    /// Convergence threshold on the largest coordinate change per round.
    pub profile_tol: f64,
    /// Utility improvement below which a deviation does not count.
    pub utility_tol: f64,
    /// Width tolerance of the inner one-dimensional bisections.
    pub inner_tol: f64,
    /// Rounds of online learning.
    pub horizon: usize,
    /// Learning step scale: the initial step is `step_scale·B_i` for
    /// hard budgets, `step_scale` for soft costs, decaying as `1/sqrt(t)`.
    pub step_scale: f64,
    pub seed: u64,
    /// Permute the best-response order each round (seeded).
    pub random_player_order: bool,
    /// Allow the golden-section fallback on non-concave sharing rules.
    pub allow_nonconcave_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 10_000,
            profile_tol: 1e-8,
            utility_tol: 1e-10,
            inner_tol: 1e-12,
            horizon: 50_000,
            step_scale: 0.1,
            seed: 0,
            random_player_order: false,
            allow_nonconcave_fallback: false,
        }
    }
}
