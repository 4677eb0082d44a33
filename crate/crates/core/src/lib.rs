//! Stochastic best-response network formation.
//!
//! Agents meet along directed dyads and flip the dyad when a noisy utility
//! comparison favours it. This crate decides when such a process is
//! reversible, builds its Gibbs stationary law `π(g) ∝ exp Φ(g)`, solves
//! and simulates the dynamics, evaluates large-population limits, and
//! solves the applied and extended models built on the same machinery.
//!
//! Modules, bottom up:
//! - [`graph`]: bitset networks, dyads, state spaces and type profiles;
//! - [`choice`]: utilities, shocks, meeting processes and switching rules;
//! - [`potential`]: conservativeness checks, `Φ` and Gibbs tables;
//! - [`dynamics`]: exact transition operators and Monte Carlo trajectories;
//! - [`asymptotics`]: the limiting partition function ζ and its functionals;
//! - [`applications`]: trade routes and linear response;
//! - [`extensions`]: switching costs, ε-deviations, planner, forward-looking agents.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` deliberately rejects NaN

pub mod applications;
pub mod asymptotics;
pub mod choice;
pub mod dynamics;
pub mod error;
pub mod extensions;
pub mod graph;
pub mod potential;

pub use error::{Error, Result};
pub use graph::{Dyad, Network, StateSpace, TypeProfile};
