//! The formation Markov chain: transition operator, exact stationary law and
//! Monte Carlo simulation in discrete and continuous time.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::choice::{MeetingProcess, SwitchingRule};
use crate::error::{Error, Result};
use crate::graph::{Dyad, Network, StateSpace, DEFAULT_CAP_LOG2};

/// Identifier of the random number generator recorded in outputs.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Below this many states `stationary_exact` uses a dense LU solve.
pub const DENSE_STATE_LIMIT: usize = 1 << 12;

/// Required `‖Pπ − π‖∞` of an exact stationary solve.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

pub const DEFAULT_BURN_IN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    Discrete,
    Continuous,
}

/// Column-stochastic `P` (discrete) or generator `A` (continuous). Column
/// `g` has at most `N(N-1)+1` nonzeros: the single-flip entries
/// `w_d p_d(g)` at rows `σ_d g` and the diagonal.
#[derive(Debug, Clone)]
pub struct TransitionOperator {
    kind: TimeKind,
    n_nodes: usize,
    n_dyads: usize,
    /// `flip[g * n_dyads + d] = w_d p_d(g)` with `w = q` or `λ`.
    flip: Vec<f64>,
    /// `Σ_d flip[g, d]`.
    exit: Vec<f64>,
    total: f64,
}

pub fn build_transition_operator<R: SwitchingRule + ?Sized>(
    rule: &R,
    meeting: &MeetingProcess,
    space: &StateSpace,
) -> Result<TransitionOperator> {
    if rule.n_nodes() != space.n_nodes() {
        return Err(Error::SizeMismatch(format!(
            "model has {} nodes, state space has {}",
            rule.n_nodes(),
            space.n_nodes()
        )));
    }
    let m = space.n_dyads();
    if meeting.n_dyads() != m {
        return Err(Error::SizeMismatch(format!("meeting process covers {} dyads, model has {m}", meeting.n_dyads())));
    }
    let w = meeting.weights();
    let rows: Vec<Vec<f64>> = (0..space.len())
        .into_par_iter()
        .map(|k| {
            let g = space.network(k);
            (0..m).map(|d| Ok(w[d] * rule.switch_probability(g, d)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let exit = rows.iter().map(|r| r.iter().sum()).collect();
    Ok(TransitionOperator {
        kind: if meeting.is_discrete() { TimeKind::Discrete } else { TimeKind::Continuous },
        n_nodes: space.n_nodes(),
        n_dyads: m,
        flip: rows.concat(),
        exit,
        total: meeting.total(),
    })
}

impl TransitionOperator {
    pub fn kind(&self) -> TimeKind {
        self.kind
    }

    pub fn n_states(&self) -> usize {
        self.exit.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Total meeting probability `q` or rate `λ`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Transition weight from state `from` to `from` with dyad `d` toggled.
    #[inline]
    pub fn flip_weight(&self, from: usize, d: usize) -> f64 {
        self.flip[from * self.n_dyads + d]
    }

    /// `Σ_d w_d p_d(g)`: total outflow from state `g`.
    pub fn exit_weight(&self, g: usize) -> f64 {
        self.exit[g]
    }

    pub fn n_dyads(&self) -> usize {
        self.n_dyads
    }

    fn diagonal(&self, g: usize) -> f64 {
        match self.kind {
            TimeKind::Discrete => 1.0 - self.exit[g],
            TimeKind::Continuous => -self.exit[g],
        }
    }

    /// Matrix entry `(to, from)`.
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        if to == from {
            return self.diagonal(from);
        }
        let diff = (to ^ from) as u64;
        if diff.count_ones() == 1 {
            self.flip_weight(from, diff.trailing_zeros() as usize)
        } else {
            0.0
        }
    }

    /// `P x` or `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_states())
            .into_par_iter()
            .map(|g| {
                let mut acc = self.diagonal(g) * x[g];
                for d in 0..self.n_dyads {
                    let h = g ^ (1 << d);
                    acc += self.flip_weight(h, d) * x[h];
                }
                acc
            })
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n_states())
            .map(|g| self.diagonal(g) + (0..self.n_dyads).map(|d| self.flip_weight(g, d)).sum::<f64>())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_states();
        let mut m = DMatrix::zeros(n, n);
        for g in 0..n {
            m[(g, g)] = self.diagonal(g);
            for d in 0..self.n_dyads {
                m[(g ^ (1 << d), g)] = self.flip_weight(g, d);
            }
        }
        m
    }

    /// The generator `A = (P − I)/q` of a discrete operator, or a clone of
    /// a continuous one.
    pub fn generator(&self) -> TransitionOperator {
        match self.kind {
            TimeKind::Continuous => self.clone(),
            TimeKind::Discrete => {
                let s = 1.0 / self.total;
                TransitionOperator {
                    kind: TimeKind::Continuous,
                    n_nodes: self.n_nodes,
                    n_dyads: self.n_dyads,
                    flip: self.flip.iter().map(|x| x * s).collect(),
                    exit: self.exit.iter().map(|x| x * s).collect(),
                    total: 1.0,
                }
            }
        }
    }

    /// `‖Pπ − π‖∞`; for a generator, `‖Aπ‖∞` in units of the largest exit
    /// rate (the residual of the uniformized chain).
    pub fn stationary_residual(&self, pi: &[f64]) -> f64 {
        let y = self.apply(pi);
        match self.kind {
            TimeKind::Discrete => y.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            TimeKind::Continuous => {
                let scale = self.exit.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                y.iter().map(|a| a.abs()).fold(0.0, f64::max) / scale
            }
        }
    }
}

/// Unique stationary distribution: dense LU below [`DENSE_STATE_LIMIT`]
/// states, Gauss–Seidel on the balance equations above it.
pub fn stationary_exact(op: &TransitionOperator) -> Result<Vec<f64>> {
    let pi = if op.n_states() < DENSE_STATE_LIMIT { dense_stationary(op)? } else { gauss_seidel_stationary(op)? };
    if let Some((k, &p)) = pi.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::SolverFailure(format!("stationary mass {p} at state {k} is not positive")));
    }
    let residual = op.stationary_residual(&pi);
    if residual >= STATIONARY_RESIDUAL_TOL {
        return Err(Error::SolverFailure(format!("stationary residual {residual:e}")));
    }
    Ok(pi)
}

fn dense_stationary(op: &TransitionOperator) -> Result<Vec<f64>> {
    let n = op.n_states();
    let mut m = op.to_dense();
    if op.kind == TimeKind::Discrete {
        for k in 0..n {
            m[(k, k)] -= 1.0;
        }
    }
    // The balance equations have rank n-1; the normalization replaces one.
    for c in 0..n {
        m[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = m.lu().solve(&b).ok_or_else(|| Error::SolverFailure("singular balance system".into()))?;
    let s: f64 = x.iter().sum();
    Ok(x.iter().map(|v| v / s).collect())
}

fn gauss_seidel_stationary(op: &TransitionOperator) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 200_000;
    let n = op.n_states();
    let mut pi = vec![1.0 / n as f64; n];
    for sweep in 1..=MAX_SWEEPS {
        for g in 0..n {
            let mut inflow = 0.0;
            for d in 0..op.n_dyads {
                let h = g ^ (1 << d);
                inflow += op.flip_weight(h, d) * pi[h];
            }
            pi[g] = inflow / op.exit[g];
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= s);
        if sweep % 16 == 0 && op.stationary_residual(&pi) < STATIONARY_RESIDUAL_TOL * 1e-2 {
            return Ok(pi);
        }
    }
    Err(Error::SolverFailure(format!("Gauss-Seidel did not converge in {MAX_SWEEPS} sweeps")))
}

/// One meeting in a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Step index (discrete) or event count (continuous), starting at 1.
    pub index: u64,
    pub time: f64,
    pub dyad: Dyad,
    pub flipped: bool,
    /// State after the event.
    pub state: Network,
}

pub type Observable = Arc<dyn Fn(Network) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SimOptions {
    pub initial: Option<Network>,
    /// Leading fraction of the run excluded from the accumulators.
    pub burn_in: f64,
    pub record_events: bool,
    /// Tracked when the state space is too large for per-state occupation.
    pub observables: Vec<Observable>,
    pub cap_log2: u32,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { initial: None, burn_in: DEFAULT_BURN_IN, record_events: true, observables: Vec::new(), cap_log2: DEFAULT_CAP_LOG2 }
    }
}

impl std::fmt::Debug for SimOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimOptions")
            .field("initial", &self.initial)
            .field("burn_in", &self.burn_in)
            .field("record_events", &self.record_events)
            .field("observables", &self.observables.len())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: u64,
    pub chain: u64,
    pub kind: TimeKind,
    pub initial: Network,
    pub final_state: Network,
    pub events: Vec<Event>,
    /// Meetings (discrete) or arrivals (continuous) over the whole run.
    pub n_events: u64,
    pub n_flips: u64,
    /// Per-state visit counts or visit times after burn-in, when the state
    /// space is within the cap.
    pub occupation: Option<Vec<f64>>,
    /// Accumulated weight-averaged observables (same weights as occupation).
    pub observable_sums: Vec<f64>,
    /// Total accumulated steps or time.
    pub accumulated: f64,
}

impl Trajectory {
    pub fn occupation_distribution(&self) -> Option<Vec<f64>> {
        let occ = self.occupation.as_ref()?;
        let total: f64 = occ.iter().sum();
        Some(occ.iter().map(|x| x / total).collect())
    }

    pub fn observable_means(&self) -> Vec<f64> {
        self.observable_sums.iter().map(|s| s / self.accumulated).collect()
    }
}

struct Accumulator {
    occupation: Option<Vec<f64>>,
    observables: Vec<Observable>,
    sums: Vec<f64>,
    total: f64,
}

impl Accumulator {
    fn new(space_ok: bool, n_dyads: usize, observables: Vec<Observable>) -> Self {
        let sums = vec![0.0; observables.len()];
        Self { occupation: space_ok.then(|| vec![0.0; 1 << n_dyads]), observables, sums, total: 0.0 }
    }

    #[inline]
    fn add(&mut self, g: Network, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        if let Some(occ) = &mut self.occupation {
            occ[g.index()] += weight;
        }
        for (s, f) in self.sums.iter_mut().zip(&self.observables) {
            *s += weight * f(g);
        }
        self.total += weight;
    }
}

/// Independent stream `chain` under a master seed.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

#[inline]
fn pick(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

fn setup<R: SwitchingRule + ?Sized>(rule: &R, meeting: &MeetingProcess, opts: &SimOptions) -> Result<(Network, bool)> {
    let n = rule.n_nodes();
    let initial = match opts.initial {
        Some(g) if g.n_nodes() != n => {
            return Err(Error::SizeMismatch(format!("initial network has {} nodes, model has {n}", g.n_nodes())))
        }
        Some(g) => g,
        None => Network::empty(n)?,
    };
    let m = crate::graph::n_dyads(n);
    if meeting.n_dyads() != m {
        return Err(Error::SizeMismatch(format!("meeting process covers {} dyads, model has {m}", meeting.n_dyads())));
    }
    if !(0.0..1.0).contains(&opts.burn_in) {
        return Err(Error::InvalidParameter(format!("burn-in fraction {} outside [0,1)", opts.burn_in)));
    }
    Ok((initial, (m as u32) <= opts.cap_log2))
}

/// Discrete-time chain: each step has no meeting with probability `1 − q`,
/// otherwise dyad `d` meets with probability `q_d` and flips with `p_d(g)`.
/// Occupation counts the states `X_t` for `t ∈ [⌊b·steps⌋, steps]`.
pub fn simulate_discrete<R: SwitchingRule + ?Sized>(
    rule: &R,
    meeting: &MeetingProcess,
    steps: u64,
    seed: u64,
    chain: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let probs = match meeting {
        MeetingProcess::Discrete { probs } => probs,
        MeetingProcess::Continuous { .. } => {
            return Err(Error::InvalidParameter("discrete simulation needs a discrete meeting process".into()))
        }
    };
    let (initial, exhaustive) = setup(rule, meeting, opts)?;
    let n = rule.n_nodes();
    let cum = cumulative(probs);
    let q = meeting.total();
    let mut rng = chain_rng(seed, chain);
    let mut acc = Accumulator::new(exhaustive, crate::graph::n_dyads(n), opts.observables.clone());
    let burn = (opts.burn_in * steps as f64).floor() as u64;
    let mut g = initial;
    let mut events = Vec::new();
    let (mut n_events, mut n_flips) = (0, 0);
    if burn == 0 {
        acc.add(g, 1.0);
    }
    for t in 1..=steps {
        let u: f64 = rng.random();
        if u < q {
            let d = pick(&cum, u);
            let flipped = rng.random::<f64>() < rule.switch_probability(g, d)?;
            if flipped {
                g = g.toggled(d);
                n_flips += 1;
            }
            n_events += 1;
            if opts.record_events {
                events.push(Event { index: t, time: t as f64, dyad: Dyad::from_index(d, n), flipped, state: g });
            }
        }
        if t >= burn {
            acc.add(g, 1.0);
        }
    }
    Ok(Trajectory {
        seed,
        chain,
        kind: TimeKind::Discrete,
        initial,
        final_state: g,
        events,
        n_events,
        n_flips,
        occupation: acc.occupation,
        observable_sums: acc.sums,
        accumulated: acc.total,
    })
}

/// Continuous-time chain with constant total rate `λ`: Exp(λ)
/// inter-arrivals, dyad drawn from `λ_d/λ`, flip with `p_d(g)`. The
/// occupation measure is time-weighted over `[b·horizon, horizon]`.
pub fn simulate_continuous<R: SwitchingRule + ?Sized>(
    rule: &R,
    meeting: &MeetingProcess,
    horizon: f64,
    seed: u64,
    chain: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let rates = match meeting {
        MeetingProcess::Continuous { rates } => rates,
        MeetingProcess::Discrete { .. } => {
            return Err(Error::InvalidParameter("continuous simulation needs meeting rates".into()))
        }
    };
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be finite and non-negative")));
    }
    let (initial, exhaustive) = setup(rule, meeting, opts)?;
    let n = rule.n_nodes();
    let lambda = meeting.total();
    let cum = cumulative(&rates.iter().map(|r| r / lambda).collect::<Vec<_>>());
    let exp = Exp::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = chain_rng(seed, chain);
    let mut acc = Accumulator::new(exhaustive, crate::graph::n_dyads(n), opts.observables.clone());
    let burn = opts.burn_in * horizon;
    let mut g = initial;
    let mut t = 0.0;
    let mut events = Vec::new();
    let (mut n_events, mut n_flips) = (0, 0);
    loop {
        let next = t + exp.sample(&mut rng);
        let end = next.min(horizon);
        acc.add(g, end - t.max(burn).min(end));
        if next >= horizon {
            break;
        }
        t = next;
        let d = pick(&cum, rng.random::<f64>());
        let flipped = rng.random::<f64>() < rule.switch_probability(g, d)?;
        if flipped {
            g = g.toggled(d);
            n_flips += 1;
        }
        n_events += 1;
        if opts.record_events {
            events.push(Event { index: n_events, time: t, dyad: Dyad::from_index(d, n), flipped, state: g });
        }
    }
    Ok(Trajectory {
        seed,
        chain,
        kind: TimeKind::Continuous,
        initial,
        final_state: g,
        events,
        n_events,
        n_flips,
        occupation: acc.occupation,
        observable_sums: acc.sums,
        accumulated: acc.total,
    })
}

/// Runs `n_chains` independent chains (streams `0..n_chains` of `seed`) in
/// parallel and pools their occupation measures. `length` is steps for a
/// discrete meeting process and the time horizon for a continuous one.
pub fn simulate_chains<R: SwitchingRule + ?Sized>(
    rule: &R,
    meeting: &MeetingProcess,
    length: f64,
    seed: u64,
    n_chains: u64,
    opts: &SimOptions,
) -> Result<Vec<f64>> {
    let runs: Vec<Trajectory> = (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let o = SimOptions { record_events: false, ..opts.clone() };
            if meeting.is_discrete() {
                simulate_discrete(rule, meeting, length as u64, seed, c, &o)
            } else {
                simulate_continuous(rule, meeting, length, seed, c, &o)
            }
        })
        .collect::<Result<_>>()?;
    let mut pooled: Option<Vec<f64>> = None;
    for run in &runs {
        let occ = run
            .occupation
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("pooled occupation needs an exhaustive state space".into()))?;
        match &mut pooled {
            None => pooled = Some(occ.clone()),
            Some(p) => p.iter_mut().zip(occ).for_each(|(a, b)| *a += b),
        }
    }
    let pooled = pooled.ok_or_else(|| Error::InvalidParameter("need at least one chain".into()))?;
    let total: f64 = pooled.iter().sum();
    Ok(pooled.iter().map(|x| x / total).collect())
}

/// `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
