//! Synthesis of uniform strategies for reachability goals in concurrent game
//! structures with imperfect information.
//!
//! The pipeline: [`synthesis::strat_synth`] computes a perfect-information
//! winning strategy and splits it into per-agent partial strategies over the
//! reachable information sets; [`optimizer::optimize`] then replaces those
//! partial strategies by dominating ones until no replacement is found.

pub mod baselines;
pub mod benchgen;
pub mod dominance;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod strategy;
pub mod synthesis;

pub use baselines::{approx_bounds, brute_force_uniform, ApproxBounds, BaselineVerdict};
pub use benchgen::{gen_drone, gen_random, DroneModelSpec, InstanceSpec, RandomModelSpec};
pub use dominance::{Criterion, Dominance, Footprint, SearchLimits};
pub use harness::{run_suite, ExperimentReport, SuiteConfig};
pub use metrics::{metric_ep, metric_str};
pub use model::{
    ActionId, AgentId, GoalError, JointAction, Model, ModelError, ModelFile, ReachabilityGoal,
    StateId, StateSet, Violation,
};
pub use optimizer::{optimize, optimize_coal, OptimizationTrace, OptimizerConfig, Termination};
pub use strategy::{
    is_winning, verify_uniform, verify_winning, InfoMode, PartialStrategy, PartialStrategyRecord,
    StrategyFile, StrategyProfile,
};
pub use synthesis::{attractor, strat_synth, SynthesisOutput};
