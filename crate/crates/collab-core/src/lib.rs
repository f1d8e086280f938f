//! Contribution games on a bipartite player/project structure.
//!
//! Players split a budget of effort (or pay a convex effort cost) across
//! projects. Each project turns the submitted qualities into a common value
//! through a monotone submodular value function, and a local sharing rule
//! redistributes that value among the participants. This crate builds the
//! game model, the sharing rules, equilibrium and welfare solvers, and the
//! efficiency analysis used to check how far equilibria fall from the
//! social optimum.
//!
//! Layout:
//! - [`model`]: instances, quality profiles, value functions, effort maps,
//!   cost models, welfare accounting, and the text instance format.
//! - [`sharing`]: proportional / marginal-proportional / Shapley / ranking /
//!   winner-take-all rules and the marginal-contribution checks.
//! - [`solvers`]: best-response dynamics, no-regret learning, welfare
//!   optimization, and closed-form symmetric solvers.
//! - [`analysis`]: smoothness verification, price-of-anarchy bounds,
//!   elasticity, and the worked lower-bound instance families.
//! - [`bayes`]: incomplete-information simulation over finite type
//!   distributions.
//!
//! All randomized routines take explicit seeds and produce identical output
//! for identical inputs, with or without the `parallel` feature.

// Validation uses `!(x > 0.0)`-style checks on purpose: they reject NaN
// parameters, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bayes;
mod error;
pub mod exec;
pub mod model;
pub mod sharing;
pub mod solvers;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
