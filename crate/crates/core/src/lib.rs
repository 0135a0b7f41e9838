//! Reliability-aware server consolidation for slotted-time datacenters.
//!
//! The crate evaluates the energy and hardware-reliability cost of moving
//! from one VM-to-PM mapping to the next, builds the exact MILP of that
//! decision, solves it by branch-and-bound, and simulates the policy over
//! consecutive slots.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod domain;
pub mod error;
pub mod milp;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod solver;

#[cfg(test)]
pub(crate) mod testkit;

pub use costs::{
    objective, Bounds, CostBreakdown, CostWeights, MigrationCostModel, ReliabilityParams,
};
pub use domain::{
    derive_transition_flags, validate_placement, DatacenterState, Placement, PmSpec, RackSpec,
    Resource, Resources, TransitionFlags, VmSpec,
};
pub use error::{Error, Result};
pub use milp::{build_model, export_lp, model_stats, MilpModel, ModelStats};
pub use scalar::Scalar;
pub use scenario::{parse_scenario, Scenario};
pub use sim::{random_initial_placement, run, step, SlotReport};
pub use solver::{
    greedy_incumbent, solve_bruteforce, solve_exact, Proof, SolveResult, SolverChoice,
};

pub type Datacenter = DatacenterState<f64>;
pub type Pm = PmSpec<f64>;
pub type Vm = VmSpec<f64>;
pub type Rack = RackSpec<f64>;
pub type Weights = CostWeights<f64>;
pub type Reliability = ReliabilityParams<f64>;
pub type Migration = MigrationCostModel<f64>;
pub type Breakdown = CostBreakdown<f64>;
pub type Model = MilpModel<f64>;
pub type Solution = SolveResult<f64>;
pub type Report = SlotReport<f64>;
pub type ScenarioSpec = Scenario<f64>;
