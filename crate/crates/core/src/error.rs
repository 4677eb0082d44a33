use thiserror::Error;

use crate::potential::ConservativenessReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dyad ({i}, {j}) for a network on {n_nodes} nodes")]
    InvalidDyad { i: usize, j: usize, n_nodes: usize },

    #[error("node {node} out of range for a network on {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },

    #[error("unsupported node count {0} (need 2..={max})", max = crate::graph::MAX_NODES)]
    UnsupportedNodeCount(usize),

    #[error("state space 2^{log2_states} exceeds the exhaustive cap 2^{cap}")]
    StateSpaceOverflow { log2_states: u32, cap: u32 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid shock distribution: {0}")]
    InvalidShock(String),

    #[error("degenerate switching probability {value} at utility difference {delta}")]
    DegenerateProbability { delta: f64, value: f64 },

    #[error("model is not conservative: {0}")]
    NotConservative(Box<ConservativenessReport>),

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureFailure { error: f64, tolerance: f64 },

    #[error("link density {0:e} too small for a mean distance")]
    EmptyNetworkRegime(f64),

    #[error("cannot parse network {0:?}")]
    ParseNetwork(String),
}
