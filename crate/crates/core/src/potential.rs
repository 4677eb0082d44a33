//! Conservativeness, aggregating functions and the Gibbs measure.
//!
//! A process is conservative when its log-odds `φ` has path-independent
//! sums, which holds iff `φ_d(g) = −φ_d(σ_d g)` and
//! `φ_d(g) + φ_e(σ_d g) = φ_e(g) + φ_d(σ_e g)` for every network and dyad
//! pair. The aggregating function `Φ` is then the path sum from the empty
//! network and the stationary law is `π(g) ∝ exp Φ(g)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::choice::{MeetingProcess, SwitchingRule, Utility};
use crate::error::{Error, Result};
use crate::graph::{Dyad, Network, StateSpace};

/// Absolute tolerance (utils) for the conservativeness conditions.
pub const CONSERVATIVE_TOL: f64 = 1e-9;

/// Largest state space (log2) on which every (network, dyad pair) is checked;
/// beyond it only [`CheckMode::Sampled`] is accepted.
pub const PAIRWISE_CAP_LOG2: u32 = 12;

/// Default number of random (network, pair) draws in sampled mode.
pub const DEFAULT_SAMPLED_DRAWS: usize = 1_000_000;

/// `log Σ exp(x)` with the max factored out.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `φ_d(g)` for every network and dyad, row-major by network index.
#[derive(Debug, Clone)]
pub struct LogOddsTable {
    n_dyads: usize,
    values: Vec<f64>,
}

impl LogOddsTable {
    pub fn build<R: SwitchingRule + ?Sized>(rule: &R, space: &StateSpace) -> Result<Self> {
        check_nodes(rule.n_nodes(), space)?;
        let m = space.n_dyads();
        let rows: Vec<Vec<f64>> = (0..space.len())
            .into_par_iter()
            .map(|k| {
                let g = space.network(k);
                (0..m).map(|d| rule.log_odds(g, d)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { n_dyads: m, values: rows.concat() })
    }

    #[inline]
    pub fn get(&self, g: Network, dyad: usize) -> f64 {
        self.values[g.index() * self.n_dyads + dyad]
    }
}

fn check_nodes(n: usize, space: &StateSpace) -> Result<()> {
    if n != space.n_nodes() {
        return Err(Error::SizeMismatch(format!("model has {n} nodes, state space has {}", space.n_nodes())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Conservative,
    NotConservative,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Conservative => "conservative",
            Self::NotConservative => "not_conservative",
        })
    }
}

/// A violated condition. For antisymmetry `second` is `None` and the sums
/// are `φ_d(g)` and `−φ_d(σ_d g)`; for commutation they are
/// `φ_d(g) + φ_e(σ_d g)` and `φ_e(g) + φ_d(σ_e g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub network: Network,
    pub first: Dyad,
    pub second: Option<Dyad>,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.second {
            None => write!(
                f,
                "antisymmetry fails at {} dyad {}: phi={} vs -phi(sigma)={}",
                self.network, self.first, self.lhs, self.rhs
            ),
            Some(e) => write!(
                f,
                "path sums differ at {} dyads {},{}: {} vs {} (gap {:e})",
                self.network,
                self.first,
                e,
                self.lhs,
                self.rhs,
                self.lhs - self.rhs
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservativenessReport {
    pub verdict: Verdict,
    /// Empty iff conservative. Ordered by (network index, dyad, dyad).
    pub witnesses: Vec<Witness>,
    /// Number of (network, dyad pair) conditions evaluated.
    pub checked: usize,
}

impl ConservativenessReport {
    pub fn is_conservative(&self) -> bool {
        self.verdict == Verdict::Conservative
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.witnesses.first()
    }
}

impl fmt::Display for ConservativenessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.verdict)?;
        if let Some(w) = self.witness() {
            write!(f, " ({w})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Stop at the lowest-index violation.
    FirstWitness,
    /// List every violation.
    Exhaustive,
    /// Random (network, pair) draws from a seeded ChaCha8 stream.
    Sampled { draws: usize, seed: u64 },
}

fn violations_at(phi: &LogOddsTable, g: Network, all: bool) -> Vec<Witness> {
    let n = g.n_nodes();
    let m = phi.n_dyads;
    let mut out = Vec::new();
    for d in 0..m {
        let a = phi.get(g, d);
        let back = -phi.get(g.toggled(d), d);
        if (a - back).abs() > CONSERVATIVE_TOL {
            out.push(Witness { network: g, first: Dyad::from_index(d, n), second: None, lhs: a, rhs: back });
            if !all {
                return out;
            }
        }
    }
    for d in 0..m {
        for e in (d + 1)..m {
            if let Some(w) = pair_violation(|h, k| Ok(phi.get(h, k)), g, d, e).expect("table lookups are infallible") {
                out.push(w);
                if !all {
                    return out;
                }
            }
        }
    }
    out
}

fn pair_violation(
    phi: impl Fn(Network, usize) -> Result<f64>,
    g: Network,
    d: usize,
    e: usize,
) -> Result<Option<Witness>> {
    let lhs = phi(g, d)? + phi(g.toggled(d), e)?;
    let rhs = phi(g, e)? + phi(g.toggled(e), d)?;
    if (lhs - rhs).abs() > CONSERVATIVE_TOL {
        let n = g.n_nodes();
        return Ok(Some(Witness {
            network: g,
            first: Dyad::from_index(d, n),
            second: Some(Dyad::from_index(e, n)),
            lhs,
            rhs,
        }));
    }
    Ok(None)
}

/// Exhaustive conservativeness check, stopping at the first witness.
pub fn check_conservative<R: SwitchingRule + ?Sized>(rule: &R, space: &StateSpace) -> Result<ConservativenessReport> {
    check_conservative_with(rule, space, CheckMode::FirstWitness)
}

pub fn check_conservative_with<R: SwitchingRule + ?Sized>(
    rule: &R,
    space: &StateSpace,
    mode: CheckMode,
) -> Result<ConservativenessReport> {
    check_nodes(rule.n_nodes(), space)?;
    let m = space.n_dyads();
    let per_network = m + m * (m - 1) / 2;
    let log2 = m as u32;
    match mode {
        CheckMode::Sampled { draws, seed } => sampled_check(rule, space, draws, seed),
        _ if log2 > PAIRWISE_CAP_LOG2 => Err(Error::StateSpaceOverflow { log2_states: log2, cap: PAIRWISE_CAP_LOG2 }),
        CheckMode::FirstWitness => {
            let phi = LogOddsTable::build(rule, space)?;
            let found = (0..space.len())
                .into_par_iter()
                .find_map_first(|k| violations_at(&phi, space.network(k), false).into_iter().next());
            Ok(report(found.into_iter().collect(), space.len() * per_network))
        }
        CheckMode::Exhaustive => {
            let phi = LogOddsTable::build(rule, space)?;
            let witnesses: Vec<Witness> = (0..space.len())
                .into_par_iter()
                .flat_map_iter(|k| violations_at(&phi, space.network(k), true))
                .collect();
            Ok(report(witnesses, space.len() * per_network))
        }
    }
}

fn report(witnesses: Vec<Witness>, checked: usize) -> ConservativenessReport {
    let verdict = if witnesses.is_empty() { Verdict::Conservative } else { Verdict::NotConservative };
    ConservativenessReport { verdict, witnesses, checked }
}

fn sampled_check<R: SwitchingRule + ?Sized>(
    rule: &R,
    space: &StateSpace,
    draws: usize,
    seed: u64,
) -> Result<ConservativenessReport> {
    let m = space.n_dyads();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = |h: Network, k: usize| rule.log_odds(h, k);
    let mut witnesses = Vec::new();
    for _ in 0..draws {
        let g = space.network(rng.random_range(0..space.len()));
        let d = rng.random_range(0..m);
        let a = phi(g, d)?;
        let back = -phi(g.toggled(d), d)?;
        if (a - back).abs() > CONSERVATIVE_TOL {
            witnesses.push(Witness { network: g, first: Dyad::from_index(d, g.n_nodes()), second: None, lhs: a, rhs: back });
            break;
        }
        if m > 1 {
            let mut e = rng.random_range(0..m - 1);
            if e >= d {
                e += 1;
            }
            if let Some(w) = pair_violation(phi, g, d.min(e), d.max(e))? {
                witnesses.push(w);
                break;
            }
        }
    }
    Ok(report(witnesses, draws))
}

/// Exhaustive map network → (Φ, π) with `Φ(∅) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTable {
    n_nodes: usize,
    phi: Vec<f64>,
    log_partition: f64,
    pi: Vec<f64>,
}

impl GibbsTable {
    /// Normalizes an arbitrary network function into a Gibbs table. The
    /// gauge is shifted so that `Φ(∅) = 0`.
    pub fn from_potential(n_nodes: usize, mut phi: Vec<f64>) -> Result<Self> {
        let space = StateSpace::new(n_nodes, u32::MAX)?;
        if phi.len() != space.len() {
            return Err(Error::SizeMismatch(format!("potential needs {} entries, got {}", space.len(), phi.len())));
        }
        if let Some(bad) = phi.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite potential value {bad}")));
        }
        let base = phi[0];
        if base != 0.0 {
            phi.iter_mut().for_each(|x| *x -= base);
        }
        let log_partition = log_sum_exp(&phi);
        let pi = phi.iter().map(|x| (x - log_partition).exp()).collect();
        Ok(Self { n_nodes, phi, log_partition, pi })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn potential(&self, g: Network) -> f64 {
        self.phi[g.index()]
    }

    pub fn probability(&self, g: Network) -> f64 {
        self.pi[g.index()]
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.n_nodes, u32::MAX).expect("validated at construction")
    }
}

/// Path sums of `φ` along the canonical ordering (ascending dyad index) of
/// each network's links, without checking conservativeness. For a
/// non-conservative process this is only a candidate potential.
pub fn path_potential<R: SwitchingRule + ?Sized>(rule: &R, space: &StateSpace) -> Result<Vec<f64>> {
    let phi = LogOddsTable::build(rule, space)?;
    Ok(path_potential_from_table(&phi, space))
}

fn path_potential_from_table(phi: &LogOddsTable, space: &StateSpace) -> Vec<f64> {
    let mut out = vec![0.0; space.len()];
    // Φ(g) = Φ(g − top) + φ_top(g − top); g − top has a smaller index.
    for k in 1..space.len() {
        let top = 63 - (k as u64).leading_zeros() as usize;
        let prev = space.network(k).toggled(top);
        out[k] = out[prev.index()] + phi.get(prev, top);
    }
    out
}

/// `Φ(g)` as the sum of `φ` when `g`'s links are added in the given order.
pub fn potential_along<R: SwitchingRule + ?Sized>(rule: &R, g: Network, order: &[usize]) -> Result<f64> {
    let mut h = Network::from_raw(g.n_nodes(), 0);
    let mut total = 0.0;
    for &d in order {
        if !g.has_index(d) || h.has_index(d) {
            return Err(Error::InvalidParameter(format!("ordering is not a permutation of the links of {g}")));
        }
        total += rule.log_odds(h, d)?;
        h = h.toggled(d);
    }
    if h != g {
        return Err(Error::InvalidParameter(format!("ordering does not cover the links of {g}")));
    }
    Ok(total)
}

/// Checks conservativeness, then builds `Φ` and the Gibbs measure.
pub fn build_aggregating_function<R: SwitchingRule + ?Sized>(rule: &R, space: &StateSpace) -> Result<GibbsTable> {
    let report = check_conservative(rule, space)?;
    if !report.is_conservative() {
        return Err(Error::NotConservative(Box::new(report)));
    }
    let phi = LogOddsTable::build(rule, space)?;
    GibbsTable::from_potential(space.n_nodes(), path_potential_from_table(&phi, space))
}

/// `max |q_d p_d(g) π(g) − q_d p_d(σ_d g) π(σ_d g)|` over networks and dyads.
pub fn detailed_balance_residual<R: SwitchingRule + ?Sized>(
    table: &GibbsTable,
    rule: &R,
    meeting: &MeetingProcess,
) -> Result<f64> {
    let space = table.space();
    check_nodes(rule.n_nodes(), &space)?;
    if meeting.n_dyads() != space.n_dyads() {
        return Err(Error::SizeMismatch(format!(
            "meeting process covers {} dyads, model has {}",
            meeting.n_dyads(),
            space.n_dyads()
        )));
    }
    let q = meeting.weights();
    let pi = table.pi();
    (0..space.len())
        .into_par_iter()
        .map(|k| {
            let g = space.network(k);
            let mut worst = 0.0f64;
            for (d, &qd) in q.iter().enumerate() {
                let h = g.toggled(d);
                let forward = qd * rule.switch_probability(g, d)? * pi[k];
                let backward = qd * rule.switch_probability(h, d)? * pi[h.index()];
                worst = worst.max((forward - backward).abs());
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialGameReport {
    pub exact: bool,
    pub ordinal: bool,
    /// `max |(Φ(σg) − Φ(g)) − (V_i(σg) − V_i(g))|`.
    pub max_exact_gap: f64,
}

/// Tolerance for exact-potential comparisons.
pub const EXACT_POTENTIAL_TOL: f64 = 1e-9;

/// Does `Φ` track each deviator's utility change exactly, or in sign?
pub fn potential_game_check<U: Utility + ?Sized>(utility: &U, table: &GibbsTable) -> PotentialGameReport {
    let space = table.space();
    let n = space.n_nodes();
    let mut gap = 0.0f64;
    let mut ordinal = true;
    for g in space.iter() {
        for d in 0..space.n_dyads() {
            let h = g.toggled(d);
            let i = Dyad::from_index(d, n).i;
            let dphi = table.potential(h) - table.potential(g);
            let dv = utility.value(i, h) - utility.value(i, g);
            gap = gap.max((dphi - dv).abs());
            let same_sign = (dphi > 0.0 && dv > 0.0) || (dphi < 0.0 && dv < 0.0) || (dphi == 0.0 && dv == 0.0);
            let both_negligible = dphi.abs() <= EXACT_POTENTIAL_TOL && dv.abs() <= EXACT_POTENTIAL_TOL;
            if !(same_sign || both_negligible) {
                ordinal = false;
            }
        }
    }
    PotentialGameReport { exact: gap <= EXACT_POTENTIAL_TOL, ordinal, max_exact_gap: gap }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    pub holds: bool,
    /// Networks that no single switch improves in `Φ`.
    pub local_maxima: Vec<Network>,
    /// Local maxima where some agent gains by switching a dyad.
    pub violations: Vec<(Network, Dyad)>,
}

/// Local maxima of `Φ` are Nash equilibria of the deterministic game.
pub fn local_maxima_are_nash<U: Utility + ?Sized>(table: &GibbsTable, utility: &U) -> NashReport {
    let space = table.space();
    let n = space.n_nodes();
    let mut local_maxima = Vec::new();
    let mut violations = Vec::new();
    for g in space.iter() {
        let here = table.potential(g);
        if (0..space.n_dyads()).any(|d| table.potential(g.toggled(d)) > here) {
            continue;
        }
        local_maxima.push(g);
        for d in 0..space.n_dyads() {
            let dyad = Dyad::from_index(d, n);
            if utility.value(dyad.i, g.toggled(d)) - utility.value(dyad.i, g) > EXACT_POTENTIAL_TOL {
                violations.push((g, dyad));
            }
        }
    }
    NashReport { holds: violations.is_empty(), local_maxima, violations }
}

pub fn log_partition_exact(table: &GibbsTable) -> f64 {
    table.log_partition()
}

/// Factorized `log Z = Σ_i log Σ_{g_i ⊆ S_i(𝒟)} exp(V_i(g_i) − V_i(∅))` for
/// isolated utilities under logit shocks: `N` sums of `2^{N-1}` terms.
pub fn log_partition_factorized<U: Utility + ?Sized>(utility: &U) -> Result<f64> {
    if !utility.is_isolated() {
        return Err(Error::InvalidParameter("factorized partition function needs isolated utilities".into()));
    }
    let n = utility.n_nodes();
    let empty = Network::empty(n)?;
    let width = n - 1;
    let mut total = 0.0;
    let mut terms = Vec::with_capacity(1 << width);
    for i in 0..n {
        let base = utility.value(i, empty);
        terms.clear();
        for row in 0..(1u64 << width) {
            let g = Network::from_raw(n, row << (i * width));
            terms.push(utility.value(i, g) - base);
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// `⟨f⟩ = Σ_g π(g) f(g)`.
pub fn ensemble_average(table: &GibbsTable, observable: impl Fn(Network) -> f64) -> f64 {
    let space = table.space();
    space.iter().zip(table.pi()).map(|(g, p)| p * observable(g)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{ConstantUtility, DiscreteChoice, IsolatedTable, LinearUtility, ShockSpec, SharedUtility};
    use crate::graph::DEFAULT_CAP_LOG2;

    fn space(n: usize) -> StateSpace {
        StateSpace::new(n, DEFAULT_CAP_LOG2).unwrap()
    }

    fn ln3_model() -> DiscreteChoice<LinearUtility> {
        DiscreteChoice::logit(LinearUtility::out_degree(2, 3f64.ln()))
    }

    /// Independent brute force for the N=2, a = ln 3 benchmark: Φ = a|g|.
    fn brute_force_ln3() -> (Vec<f64>, Vec<f64>) {
        let a = 3f64.ln();
        let phi: Vec<f64> = [0.0, 1.0, 1.0, 2.0].iter().map(|k| k * a).collect();
        let z: f64 = phi.iter().map(|p| p.exp()).sum();
        let pi = phi.iter().map(|p| p.exp() / z).collect();
        (phi, pi)
    }

    #[test]
    fn two_node_benchmark_table() {
        let gt = build_aggregating_function(&ln3_model(), &space(2)).unwrap();
        let (phi, pi) = brute_force_ln3();
        for k in 0..4 {
            assert!((gt.phi()[k] - phi[k]).abs() < 1e-12);
            assert!((gt.pi()[k] - pi[k]).abs() < 1e-12);
        }
        assert!((gt.pi()[3] - 9.0 / 16.0).abs() < 1e-12);
        assert!((log_partition_exact(&gt) - 16f64.ln()).abs() < 1e-12);
        let mean_links = ensemble_average(&gt, |g| g.n_links() as f64);
        assert!((mean_links - 1.5).abs() < 1e-12);
        assert!((ensemble_average(&gt, |_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_model() {
        let rule = DiscreteChoice::logit(ConstantUtility::uniform(2, 0.3));
        let gt = build_aggregating_function(&rule, &space(2)).unwrap();
        assert!((gt.log_partition() - 4f64.ln()).abs() < 1e-15);
        assert!((ensemble_average(&gt, |g| g.n_links() as f64) - 1.0).abs() < 1e-15);
        let pg = potential_game_check(&rule.utility, &gt);
        assert!(pg.exact && pg.ordinal);
        assert!(gt.phi().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn isolated_logit_is_conservative() {
        let u = IsolatedTable::random(3, 1.5, 11);
        let report = check_conservative(&DiscreteChoice::logit(&u), &space(3)).unwrap();
        assert!(report.is_conservative(), "{report}");
        assert_eq!(report.checked, 64 * (6 + 15));
    }

    #[test]
    fn planner_is_conservative_with_phi_equal_to_welfare() {
        let w = SharedUtility::new(3, |g| g.n_links() as f64);
        let gt = build_aggregating_function(&DiscreteChoice::logit(&w), &space(3)).unwrap();
        for g in space(3).iter() {
            assert!((gt.potential(g) - g.n_links() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn factorized_partition_matches_exhaustive() {
        let u = IsolatedTable::random(3, 2.0, 5);
        let gt = build_aggregating_function(&DiscreteChoice::logit(&u), &space(3)).unwrap();
        assert!((log_partition_factorized(&u).unwrap() - gt.log_partition()).abs() < 1e-12);
        let shared = SharedUtility::new(3, |g| g.n_links() as f64);
        assert!(log_partition_factorized(&shared).is_err());
    }

    #[test]
    fn non_conservative_interaction_model_has_witness() {
        // Agent 0 likes link 01 only when 1 links back: not isolated, and
        // not a potential game.
        let u = crate::choice::FnUtility::new(3, false, |i, g| {
            if i == 0 && g.contains(Dyad { i: 0, j: 1 }) && g.contains(Dyad { i: 1, j: 0 }) { 1.0 } else { 0.0 }
        });
        let rule = DiscreteChoice::logit(u);
        let report = check_conservative(&rule, &space(3)).unwrap();
        assert_eq!(report.verdict, Verdict::NotConservative);
        let w = report.witness().unwrap();
        let (d, e) = (w.first.index(3), w.second.unwrap().index(3));
        let g = w.network;
        let lhs = rule.log_odds(g, d).unwrap() + rule.log_odds(g.toggled(d), e).unwrap();
        let rhs = rule.log_odds(g, e).unwrap() + rule.log_odds(g.toggled(e), d).unwrap();
        assert_eq!((lhs, rhs), (w.lhs, w.rhs));
        assert!(matches!(build_aggregating_function(&rule, &space(3)), Err(Error::NotConservative(_))));
        let all = check_conservative_with(&rule, &space(3), CheckMode::Exhaustive).unwrap();
        assert!(all.witnesses.len() > 1);
        assert_eq!(all.witnesses[0], *w);
    }

    #[test]
    fn pairwise_cap_and_sampled_mode() {
        let big = StateSpace::new(5, DEFAULT_CAP_LOG2).unwrap();
        let rule = DiscreteChoice::logit(LinearUtility::out_degree(5, 0.2));
        assert!(matches!(check_conservative(&rule, &big), Err(Error::StateSpaceOverflow { .. })));
        let sampled =
            check_conservative_with(&rule, &big, CheckMode::Sampled { draws: 20_000, seed: 3 }).unwrap();
        assert!(sampled.is_conservative());
    }

    #[test]
    fn path_independence_under_random_orders() {
        use rand::seq::SliceRandom;
        let u = IsolatedTable::random(3, 1.0, 99);
        let rule = DiscreteChoice::logit(&u);
        let sp = space(3);
        let gt = build_aggregating_function(&rule, &sp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in sp.iter() {
            let mut order: Vec<usize> = g.link_indices().collect();
            for _ in 0..10 {
                order.shuffle(&mut rng);
                assert!((potential_along(&rule, g, &order).unwrap() - gt.potential(g)).abs() < 1e-12);
            }
        }
        let g = sp.network(3);
        assert!(potential_along(&rule, g, &[0]).is_err());
        assert!(potential_along(&rule, g, &[0, 0]).is_err());
    }

    #[test]
    fn gibbs_invariant_under_constant_shift() {
        let phi: Vec<f64> = (0..64).map(|k| (k as f64 * 0.37).sin()).collect();
        let a = GibbsTable::from_potential(3, phi.clone()).unwrap();
        let b = GibbsTable::from_potential(3, phi.iter().map(|x| x + 123.4).collect()).unwrap();
        for (x, y) in a.pi().iter().zip(b.pi()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(GibbsTable::from_potential(3, vec![0.0; 10]).is_err());
    }

    #[test]
    fn large_potentials_do_not_overflow() {
        let u = LinearUtility::out_degree(3, 30.0);
        let gt = build_aggregating_function(&DiscreteChoice::logit(&u), &space(3)).unwrap();
        assert!(gt.log_partition().is_finite());
        assert!((gt.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_maxima_of_outdegree_models() {
        for (a, expect_complete) in [(0.8, true), (-0.8, false)] {
            let u = LinearUtility::out_degree(3, a);
            let gt = build_aggregating_function(&DiscreteChoice::logit(&u), &space(3)).unwrap();
            let nash = local_maxima_are_nash(&gt, &u);
            assert!(nash.holds);
            let expected = if expect_complete { Network::complete(3).unwrap() } else { Network::empty(3).unwrap() };
            assert_eq!(nash.local_maxima, vec![expected]);
        }
    }

    #[test]
    fn cauchy_shocks_give_ordinal_not_exact_potential() {
        let u = LinearUtility::new(3, vec![0.0, 0.5, -1.2, 2.0, 0.0, 0.3, -0.4, 1.1, 0.0]).unwrap();
        let rule = DiscreteChoice::new(&u, ShockSpec::cauchy(1.0).unwrap());
        let gt = build_aggregating_function(&rule, &space(3)).unwrap();
        let pg = potential_game_check(&u, &gt);
        assert!(pg.ordinal);
        assert!(!pg.exact);
        assert!(pg.max_exact_gap > 1e-3);
    }
}
