//! Utilities, shock distributions, meeting processes and the switching rule.
//!
//! A [`SwitchingRule`] is the one abstraction the exact and Monte Carlo
//! machinery needs: the probability `p_d(g)` that a meeting on dyad `d`
//! flips it, plus the log-odds `φ_d(g) = ln(p_d(g) / p_d(σ_d g))`. The
//! discrete-choice rule here derives both from a [`Utility`] and a
//! [`ShockSpec`]; the switching-cost, ε-deviation and MPE variants live in
//! [`crate::extensions`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{n_dyads, Dyad, Network, StateSpace, TypeProfile};

/// Deterministic utility `V_i(g)`.
pub trait Utility: Send + Sync {
    fn n_nodes(&self) -> usize;

    fn value(&self, agent: usize, g: Network) -> f64;

    /// Declared capability: `V_i(g) = V_i(S_i(g))` for every agent.
    fn is_isolated(&self) -> bool {
        false
    }
}

impl<U: Utility + ?Sized> Utility for &U {
    fn n_nodes(&self) -> usize {
        (**self).n_nodes()
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        (**self).value(agent, g)
    }
    fn is_isolated(&self) -> bool {
        (**self).is_isolated()
    }
}

impl<U: Utility + ?Sized> Utility for Box<U> {
    fn n_nodes(&self) -> usize {
        (**self).n_nodes()
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        (**self).value(agent, g)
    }
    fn is_isolated(&self) -> bool {
        (**self).is_isolated()
    }
}

impl<U: Utility + ?Sized> Utility for Arc<U> {
    fn n_nodes(&self) -> usize {
        (**self).n_nodes()
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        (**self).value(agent, g)
    }
    fn is_isolated(&self) -> bool {
        (**self).is_isolated()
    }
}

/// Per-agent constant utility.
#[derive(Debug, Clone)]
pub struct ConstantUtility {
    values: Vec<f64>,
}

impl ConstantUtility {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn uniform(n_nodes: usize, value: f64) -> Self {
        Self { values: vec![value; n_nodes] }
    }
}

impl Utility for ConstantUtility {
    fn n_nodes(&self) -> usize {
        self.values.len()
    }
    fn value(&self, agent: usize, _g: Network) -> f64 {
        self.values[agent]
    }
    fn is_isolated(&self) -> bool {
        true
    }
}

/// `V_i(g) = Σ_{j ∈ N_i(g)} a_ij`: additive link values.
#[derive(Debug, Clone)]
pub struct LinearUtility {
    n_nodes: usize,
    /// Row-major `N×N`; the diagonal is ignored.
    weights: Vec<f64>,
}

impl LinearUtility {
    pub fn new(n_nodes: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n_nodes * n_nodes {
            return Err(Error::SizeMismatch(format!(
                "link weights need {} entries, got {}",
                n_nodes * n_nodes,
                weights.len()
            )));
        }
        Ok(Self { n_nodes, weights })
    }

    /// `V_i = a · outdeg_i`.
    pub fn out_degree(n_nodes: usize, a: f64) -> Self {
        Self { n_nodes, weights: vec![a; n_nodes * n_nodes] }
    }

    /// Homophily utility: `a_ij = v0 − γ D̃(θ_i, θ_j)`.
    pub fn typed(profile: &TypeProfile, v0: f64, gamma: f64, distances: &[Vec<f64>]) -> Result<Self> {
        let assignment = profile
            .assignment()
            .ok_or_else(|| Error::InvalidParameter("typed utility needs a finite-N type profile".into()))?;
        check_square(distances, profile.n_types())?;
        let n = assignment.len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                weights[i * n + j] = v0 - gamma * distances[assignment[i]][assignment[j]];
            }
        }
        Ok(Self { n_nodes: n, weights })
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n_nodes + j]
    }
}

pub(crate) fn check_square(m: &[Vec<f64>], c: usize) -> Result<()> {
    if m.len() != c || m.iter().any(|row| row.len() != c) {
        return Err(Error::SizeMismatch(format!("expected a {c}x{c} matrix")));
    }
    Ok(())
}

impl Utility for LinearUtility {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        let row = &self.weights[agent * self.n_nodes..(agent + 1) * self.n_nodes];
        g.out_subgraph(agent)
            .map(|s| s.links().map(|d| row[d.j]).sum())
            .unwrap_or(f64::NAN)
    }
    fn is_isolated(&self) -> bool {
        true
    }
}

/// Trade-route utility `V_i = Σ_{j ∈ N_i} a_ij − (c/N) |N_i|²`.
#[derive(Debug, Clone)]
pub struct ConvexCostUtility {
    linear: LinearUtility,
    c: f64,
}

impl ConvexCostUtility {
    pub fn new(linear: LinearUtility, c: f64) -> Self {
        Self { linear, c }
    }
}

impl Utility for ConvexCostUtility {
    fn n_nodes(&self) -> usize {
        self.linear.n_nodes
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        let deg = g.out_degree(agent) as f64;
        self.linear.value(agent, g) - self.c / self.linear.n_nodes as f64 * deg * deg
    }
    fn is_isolated(&self) -> bool {
        true
    }
}

/// Isolated utility given as a table over each agent's own out-row
/// (`2^{N-1}` entries per agent, indexed by [`Network::out_row`]).
#[derive(Debug, Clone)]
pub struct IsolatedTable {
    n_nodes: usize,
    table: Vec<Vec<f64>>,
}

impl IsolatedTable {
    pub fn new(n_nodes: usize, table: Vec<Vec<f64>>) -> Result<Self> {
        let rows = 1usize << (n_nodes - 1);
        if table.len() != n_nodes || table.iter().any(|t| t.len() != rows) {
            return Err(Error::SizeMismatch(format!("isolated table needs {n_nodes} rows of {rows}")));
        }
        Ok(Self { n_nodes, table })
    }

    /// Generic isolated utilities: i.i.d. uniform values on `[-scale, scale]`.
    pub fn random(n_nodes: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = 1usize << (n_nodes - 1);
        let table = (0..n_nodes)
            .map(|_| (0..rows).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect())
            .collect();
        Self { n_nodes, table }
    }
}

impl Utility for IsolatedTable {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        self.table[agent][g.out_row(agent) as usize]
    }
    fn is_isolated(&self) -> bool {
        true
    }
}

/// Every agent evaluates the same welfare `W(g)` (the planner model).
#[derive(Clone)]
pub struct SharedUtility {
    n_nodes: usize,
    welfare: Arc<dyn Fn(Network) -> f64 + Send + Sync>,
}

impl SharedUtility {
    pub fn new(n_nodes: usize, welfare: impl Fn(Network) -> f64 + Send + Sync + 'static) -> Self {
        Self { n_nodes, welfare: Arc::new(welfare) }
    }

    pub fn welfare(&self, g: Network) -> f64 {
        (self.welfare)(g)
    }
}

impl fmt::Debug for SharedUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SharedUtility").field("n_nodes", &self.n_nodes).finish_non_exhaustive()
    }
}

impl Utility for SharedUtility {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    fn value(&self, _agent: usize, g: Network) -> f64 {
        (self.welfare)(g)
    }
}

/// Closure-backed utility with a declared isolation flag.
#[derive(Clone)]
pub struct FnUtility {
    n_nodes: usize,
    isolated: bool,
    f: Arc<dyn Fn(usize, Network) -> f64 + Send + Sync>,
}

impl FnUtility {
    pub fn new(n_nodes: usize, isolated: bool, f: impl Fn(usize, Network) -> f64 + Send + Sync + 'static) -> Self {
        Self { n_nodes, isolated, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnUtility")
            .field("n_nodes", &self.n_nodes)
            .field("isolated", &self.isolated)
            .finish_non_exhaustive()
    }
}

impl Utility for FnUtility {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        (self.f)(agent, g)
    }
    fn is_isolated(&self) -> bool {
        self.isolated
    }
}

/// Full table `V_i(g)` over the state space. Also serves as the memo for
/// any other utility (see [`TabulatedUtility::from_utility`]).
#[derive(Debug, Clone)]
pub struct TabulatedUtility {
    n_nodes: usize,
    isolated: bool,
    /// `values[agent][network index]`
    values: Vec<Vec<f64>>,
}

impl TabulatedUtility {
    pub fn new(n_nodes: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        let states = 1usize << n_dyads(n_nodes);
        if values.len() != n_nodes || values.iter().any(|v| v.len() != states) {
            return Err(Error::SizeMismatch(format!("utility table needs {n_nodes} rows of {states}")));
        }
        Ok(Self { n_nodes, isolated: false, values })
    }

    pub fn from_utility<U: Utility + ?Sized>(u: &U, space: &StateSpace) -> Self {
        let n = space.n_nodes();
        let values = (0..n)
            .map(|i| (0..space.len()).into_par_iter().map(|k| u.value(i, space.network(k))).collect())
            .collect();
        Self { n_nodes: n, isolated: u.is_isolated(), values }
    }

    pub fn agent_values(&self, agent: usize) -> &[f64] {
        &self.values[agent]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}

impl Utility for TabulatedUtility {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    fn value(&self, agent: usize, g: Network) -> f64 {
        self.values[agent][g.index()]
    }
    fn is_isolated(&self) -> bool {
        self.isolated
    }
}

/// Spot-check a declared isolation flag: `V_i(g) = V_i(S_i(g))` everywhere.
pub fn verify_isolated<U: Utility + ?Sized>(u: &U, space: &StateSpace) -> bool {
    space.iter().all(|g| {
        (0..space.n_nodes()).all(|i| {
            let own = g.out_subgraph(i).expect("agent in range");
            u.value(i, g) == u.value(i, own)
        })
    })
}

/// Distribution of the shock difference `ε¹ − ε⁰`, through its CDF `F1`.
#[derive(Clone)]
pub enum ShockSpec {
    /// Type-I extreme value shocks: `F1` is the logistic CDF.
    Logit,
    Custom { name: String, cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

/// Probe grid used to validate custom CDFs: 101 points on `[-20, 20]`.
pub const PROBE_POINTS: usize = 101;
pub const PROBE_HALF_WIDTH: f64 = 20.0;
const SYMMETRY_TOL: f64 = 1e-12;

impl ShockSpec {
    /// Validates symmetry `F1(x) + F1(-x) = 1`, range `(0,1)` and strict
    /// monotonicity on the probe grid.
    pub fn custom(name: impl Into<String>, cdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        let probe: Vec<f64> = (0..PROBE_POINTS)
            .map(|k| -PROBE_HALF_WIDTH + 2.0 * PROBE_HALF_WIDTH * k as f64 / (PROBE_POINTS - 1) as f64)
            .collect();
        let mut prev = f64::NEG_INFINITY;
        for &x in &probe {
            let f = cdf(x);
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidShock(format!("{name}: F1({x}) = {f} outside (0,1)")));
            }
            if f <= prev {
                return Err(Error::InvalidShock(format!("{name}: F1 not strictly increasing at {x}")));
            }
            let asym = f + cdf(-x) - 1.0;
            if asym.abs() > SYMMETRY_TOL {
                return Err(Error::InvalidShock(format!("{name}: F1({x}) + F1(-{x}) - 1 = {asym:e}")));
            }
            prev = f;
        }
        Ok(Self::Custom { name, cdf: Arc::new(cdf) })
    }

    /// Cauchy-distributed shock difference with the given scale.
    pub fn cauchy(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("cauchy scale {scale} must be positive")));
        }
        Self::custom(format!("cauchy({scale})"), move |x| 0.5 + (x / scale).atan() / std::f64::consts::PI)
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Logit => "logit",
            Self::Custom { name, .. } => name,
        }
    }

    pub fn is_logit(&self) -> bool {
        matches!(self, Self::Logit)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Logit => logistic(x),
            Self::Custom { cdf, .. } => cdf(x),
        }
    }

    /// `F1(delta)`, rejecting values that are not strictly inside `(0,1)`.
    pub fn probability(&self, delta: f64) -> Result<f64> {
        let p = self.cdf(delta);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::DegenerateProbability { delta, value: p });
        }
        Ok(p)
    }

    /// `ln(F1(x) / F1(-x))`; exactly `x` for logit.
    pub fn log_odds(&self, delta: f64) -> Result<f64> {
        let p = self.probability(delta)?;
        let q = self.probability(-delta)?;
        Ok(match self {
            Self::Logit => delta,
            Self::Custom { .. } => (p / q).ln(),
        })
    }
}

impl fmt::Debug for ShockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShockSpec({})", self.name())
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Who meets whom: per-dyad meeting probabilities (discrete time) or
/// Poisson rates (continuous time), indexed by canonical dyad index.
#[derive(Debug, Clone, PartialEq)]
pub enum MeetingProcess {
    Discrete { probs: Vec<f64> },
    Continuous { rates: Vec<f64> },
}

impl MeetingProcess {
    pub fn discrete(probs: Vec<f64>) -> Result<Self> {
        check_positive(&probs)?;
        let q: f64 = probs.iter().sum();
        if q >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "total meeting probability {q} must be below 1"
            )));
        }
        Ok(Self::Discrete { probs })
    }

    pub fn continuous(rates: Vec<f64>) -> Result<Self> {
        check_positive(&rates)?;
        Ok(Self::Continuous { rates })
    }

    pub fn uniform_discrete(n_nodes: usize, total: f64) -> Result<Self> {
        let m = n_dyads(n_nodes);
        Self::discrete(vec![total / m as f64; m])
    }

    pub fn uniform_continuous(n_nodes: usize, total_rate: f64) -> Result<Self> {
        let m = n_dyads(n_nodes);
        Self::continuous(vec![total_rate / m as f64; m])
    }

    /// Per-dyad probabilities or rates.
    pub fn weights(&self) -> &[f64] {
        match self {
            Self::Discrete { probs } => probs,
            Self::Continuous { rates } => rates,
        }
    }

    /// `q` or `λ`.
    pub fn total(&self) -> f64 {
        self.weights().iter().sum()
    }

    pub fn n_dyads(&self) -> usize {
        self.weights().len()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete { .. })
    }

    /// Which dyad meets, given that some meeting happens.
    pub fn conditional_meeting_distribution(&self) -> Vec<f64> {
        let total = self.total();
        self.weights().iter().map(|w| w / total).collect()
    }
}

fn check_positive(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidParameter("meeting process needs at least one dyad".into()));
    }
    if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("meeting weight {bad} must be positive and finite")));
    }
    Ok(())
}

/// The per-meeting flip probability `p_d(g)` of a formation process.
pub trait SwitchingRule: Send + Sync {
    fn n_nodes(&self) -> usize;

    fn switch_probability(&self, g: Network, dyad: usize) -> Result<f64>;

    /// `φ_d(g) = ln(p_d(g) / p_d(σ_d g))`.
    fn log_odds(&self, g: Network, dyad: usize) -> Result<f64> {
        let p = self.switch_probability(g, dyad)?;
        let q = self.switch_probability(g.toggled(dyad), dyad)?;
        Ok((p / q).ln())
    }
}

impl<R: SwitchingRule + ?Sized> SwitchingRule for &R {
    fn n_nodes(&self) -> usize {
        (**self).n_nodes()
    }
    fn switch_probability(&self, g: Network, dyad: usize) -> Result<f64> {
        (**self).switch_probability(g, dyad)
    }
    fn log_odds(&self, g: Network, dyad: usize) -> Result<f64> {
        (**self).log_odds(g, dyad)
    }
}

impl<R: SwitchingRule + ?Sized> SwitchingRule for Box<R> {
    fn n_nodes(&self) -> usize {
        (**self).n_nodes()
    }
    fn switch_probability(&self, g: Network, dyad: usize) -> Result<f64> {
        (**self).switch_probability(g, dyad)
    }
    fn log_odds(&self, g: Network, dyad: usize) -> Result<f64> {
        (**self).log_odds(g, dyad)
    }
}

/// Myopic discrete choice: `p_ij(g) = F1(V_i(σ_ij g) − V_i(g))`.
#[derive(Debug, Clone)]
pub struct DiscreteChoice<U> {
    pub utility: U,
    pub shock: ShockSpec,
}

impl<U: Utility> DiscreteChoice<U> {
    pub fn new(utility: U, shock: ShockSpec) -> Self {
        Self { utility, shock }
    }

    pub fn logit(utility: U) -> Self {
        Self { utility, shock: ShockSpec::Logit }
    }

    /// `V_i(σ_d g) − V_i(g)` where `i` is the dyad's source.
    #[inline]
    pub fn utility_gain(&self, g: Network, dyad: usize) -> f64 {
        let i = Dyad::from_index(dyad, g.n_nodes()).i;
        self.utility.value(i, g.toggled(dyad)) - self.utility.value(i, g)
    }
}

impl<U: Utility> SwitchingRule for DiscreteChoice<U> {
    fn n_nodes(&self) -> usize {
        self.utility.n_nodes()
    }

    fn switch_probability(&self, g: Network, dyad: usize) -> Result<f64> {
        self.shock.probability(self.utility_gain(g, dyad))
    }

    fn log_odds(&self, g: Network, dyad: usize) -> Result<f64> {
        self.shock.log_odds(self.utility_gain(g, dyad))
    }
}

fn checked_dyad(g: Network, d: Dyad) -> Result<usize> {
    let n = g.n_nodes();
    Dyad::new(d.i, d.j, n)?;
    Ok(d.index(n))
}

/// `p_ij(g)` for a utility/shock pair.
pub fn switching_probability<U: Utility>(u: &U, f: &ShockSpec, g: Network, d: Dyad) -> Result<f64> {
    let k = checked_dyad(g, d)?;
    let delta = u.value(d.i, g.toggled(k)) - u.value(d.i, g);
    f.probability(delta)
}

/// `φ_ij(g)` for a utility/shock pair.
pub fn phi_value<U: Utility>(u: &U, f: &ShockSpec, g: Network, d: Dyad) -> Result<f64> {
    let k = checked_dyad(g, d)?;
    let delta = u.value(d.i, g.toggled(k)) - u.value(d.i, g);
    f.log_odds(delta)
}
