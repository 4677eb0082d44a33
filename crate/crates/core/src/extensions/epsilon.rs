use std::fmt;
use std::sync::Arc;

use crate::choice::SwitchingRule;
use crate::error::{Error, Result};
use crate::graph::{Network, StateSpace};
use crate::potential::{build_aggregating_function, check_conservative, ConservativenessReport, GibbsTable};

/// `Λ(p) = ln(p / (1 − p))`.
pub fn log_ratio(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

type Strategy = Arc<dyn Fn(usize, Network) -> bool + Send + Sync>;

/// A deterministic pure strategy implemented with error probability `ε`.
/// The strategy says whether dyad `d` should be present; it is always
/// evaluated on the network with `d` removed, so `s_d(g) = s_d(σ_d g)`.
#[derive(Clone)]
pub struct EpsilonDeviation {
    n_nodes: usize,
    epsilon: f64,
    strategy: Strategy,
}

impl EpsilonDeviation {
    pub fn new(
        n_nodes: usize,
        epsilon: f64,
        strategy: impl Fn(usize, Network) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0,1)")));
        }
        Network::empty(n_nodes)?;
        Ok(Self { n_nodes, epsilon, strategy: Arc::new(strategy) })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `s_d(g)`.
    pub fn optimal(&self, dyad: usize, g: Network) -> bool {
        let absent = if g.has_index(dyad) { g.toggled(dyad) } else { g };
        (self.strategy)(dyad, absent)
    }

    /// `m_d(g) = 1{s_d(g) = g_d}`.
    pub fn matches(&self, dyad: usize, g: Network) -> bool {
        self.optimal(dyad, g) == g.has_index(dyad)
    }
}

impl fmt::Debug for EpsilonDeviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EpsilonDeviation")
            .field("n_nodes", &self.n_nodes)
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

impl SwitchingRule for EpsilonDeviation {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    fn switch_probability(&self, g: Network, dyad: usize) -> Result<f64> {
        Ok(if self.matches(dyad, g) { self.epsilon } else { 1.0 - self.epsilon })
    }

    fn log_odds(&self, g: Network, dyad: usize) -> Result<f64> {
        Ok(epsilon_phi(self, g, dyad))
    }
}

/// `φ_d(g) = Λ(ε)(2 m_d(g) − 1)`.
pub fn epsilon_phi(model: &EpsilonDeviation, g: Network, dyad: usize) -> f64 {
    let m = if model.matches(dyad, g) { 1.0 } else { -1.0 };
    log_ratio(model.epsilon) * m
}

/// Number of additions that follow the strategy when `g` is built from the
/// empty network in canonical dyad order.
pub fn optimal_additions(model: &EpsilonDeviation, g: Network) -> usize {
    let mut h = Network::empty(g.n_nodes()).expect("valid node count");
    let mut count = 0;
    for d in g.link_indices() {
        if model.optimal(d, h) {
            count += 1;
        }
        h = h.toggled(d);
    }
    count
}

#[derive(Debug, Clone)]
pub enum EpsilonOutcome {
    Gibbs(GibbsTable),
    NotConservative(ConservativenessReport),
}

/// The ε-deviation aggregating function `Φ(g) = Λ(1−ε)(2 n_opt(g) − |g|)`,
/// when the strategy makes `φ` conservative.
pub fn epsilon_aggregating(model: &EpsilonDeviation, space: &StateSpace) -> Result<EpsilonOutcome> {
    let report = check_conservative(model, space)?;
    if !report.is_conservative() {
        return Ok(EpsilonOutcome::NotConservative(report));
    }
    let table = build_aggregating_function(model, space)?;
    let weight = log_ratio(1.0 - model.epsilon);
    for g in space.iter() {
        let closed = weight * (2.0 * optimal_additions(model, g) as f64 - g.n_links() as f64);
        if (closed - table.potential(g)).abs() > 1e-9 * (1.0 + closed.abs()) {
            return Err(Error::SolverFailure(format!(
                "path-sum potential {} differs from the optimal-change count form {closed} at {g}",
                table.potential(g)
            )));
        }
    }
    Ok(EpsilonOutcome::Gibbs(table))
}
