//! Variants of the myopic discrete-choice process: switching costs,
//! ε-deviations from a deterministic strategy, a central planner and
//! forward-looking agents.

mod epsilon;
mod mpe;
mod planner;
mod switching_cost;

pub use epsilon::{epsilon_aggregating, epsilon_phi, log_ratio, optimal_additions, EpsilonDeviation, EpsilonOutcome};
pub use mpe::{mpe_solve, mpe_stationary, present_values, MpeOptions, MpeProblem, MpeSolution, MpeStationary};
pub use planner::central_planner_table;
pub use switching_cost::{switching_cost_chi, switching_cost_probability, SwitchingCost};
