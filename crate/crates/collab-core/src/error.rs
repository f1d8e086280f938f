use thiserror::Error;

/// Errors produced by instance validation, sharing rules, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("player `{player}` references unknown project `{project}`")]
    UnknownProject { player: String, project: String },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("player `{player}` participates in no project")]
    EmptyParticipation { player: String },

    #[error("project `{project}` has no participants")]
    EmptyProject { project: String },

    #[error("alpha out of range: {0} (power values require 0 < alpha <= 1)")]
    AlphaOutOfRange(f64),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("participant index {index} out of range for {len} participants")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("ranking coefficient length {got} does not match {expected} participants")]
    CoefficientLength { expected: usize, got: usize },

    #[error("invalid ranking coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("exact Shapley enumeration capped at {cap} participants, got {n}; use sampled mode")]
    ShapleyTooLarge { n: usize, cap: usize },

    #[error("infeasible profile: player `{player}` exceeds budget by {excess:.3e}")]
    Infeasible { player: String, excess: f64 },

    #[error(
        "sharing rule is not a concave sharing rule for this value function; \
         enable the non-concave fallback to best-respond anyway"
    )]
    NonConcaveRule,

    #[error("welfare objective is not concave (non-monotone or max-quality value); use the grid oracle")]
    NonConcaveObjective,

    #[error("grid guard exceeded: {0}")]
    GridGuard(String),

    #[error("no sign change in bracket [{lo}, {hi}] for {what}")]
    NoSignChange { what: &'static str, lo: f64, hi: f64 },

    #[error("no interior optimum: {0}")]
    NoInteriorOptimum(String),

    #[error("invalid type distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown sharing rule `{0}`")]
    UnknownSharingRule(String),

    #[error("instance parse error: {0}")]
    Parse(#[from] serde_json::Error),
}
