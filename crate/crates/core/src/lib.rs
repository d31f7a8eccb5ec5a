//! Generalized multistage knapsack: data model, objective evaluation, the
//! schedule reduction to a single-shot packing problem, horizon cutting and
//! exact desk-scale oracles.

pub mod cutting;
pub mod error;
pub mod generators;
pub mod instance;
pub mod interval;
pub mod io;
pub mod mkcp;
pub mod numeric;
pub mod oracle;
pub mod packing;
pub mod ratio;
pub mod reduction;
pub mod submodular;

pub use cutting::{
    combine_cut_solutions, cut_instances, cut_points, cut_points_with_spacing, solve_bounded_horizon, solve_general,
    CutPointSet, SchemeParams, SolveConfig, SubSolver,
};
pub use error::{GmkError, Result};
pub use instance::{
    check_feasible, evaluate_objective, evaluate_sub_objective, sub_instance, GmkInstance, MultistageSolution,
    SubInstanceView, Variant,
};
pub use io::{validate_instance, InstanceDoc, SolutionDoc};
pub use oracle::brute_force_gmk;
pub use ratio::{profit_cost_ratio, ExtendedRatio};
pub use submodular::ItemSet;
