use crate::error::Result;
use crate::graph::{Network, StateSpace};
use crate::potential::GibbsTable;

/// Logit planner: the aggregating function is the welfare itself,
/// `Φ(g) = W(g) − W(∅)`.
pub fn central_planner_table(welfare: impl Fn(Network) -> f64, space: &StateSpace) -> Result<GibbsTable> {
    let base = welfare(space.network(0));
    let phi = space.iter().map(|g| welfare(g) - base).collect();
    GibbsTable::from_potential(space.n_nodes(), phi)
}
