//! One function per subcommand. Each returns the tables to write and, for
//! runs whose output is still worth keeping, a failure to report after
//! writing.

use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use netform_core::applications::{
    finite_trade_utility, reciprocity, trade_fixed_point, typed_link_shares, zeta_trade, TradeModel,
};
use netform_core::asymptotics::{
    density_and_distance, finite_linear_expected_links, zeta_continuous_uniform_circle, zeta_discrete_homophily,
    zeta_isolated, DensityDistance, DiscreteHomophily, LimitModel, LinearCostLimit, UniformCircle,
};
use netform_core::choice::{DiscreteChoice, SwitchingRule, TabulatedUtility};
use netform_core::dynamics::{
    build_transition_operator, simulate_continuous, simulate_discrete, stationary_exact, tv_distance, Observable,
    SimOptions, Trajectory,
};
use netform_core::extensions::{epsilon_aggregating, mpe_solve, mpe_stationary, EpsilonDeviation, EpsilonOutcome};
use netform_core::extensions::{MpeOptions, MpeProblem};
use netform_core::potential::{
    check_conservative_with, detailed_balance_residual, path_potential, potential_game_check, CheckMode,
    ConservativenessReport, GibbsTable, DEFAULT_SAMPLED_DRAWS, PAIRWISE_CAP_LOG2,
};
use netform_core::{Error as CoreError, StateSpace, TypeProfile};

use crate::config::{CheckModeConfig, ExperimentConfig, RuleConfig, SurfaceConfig, TimeConfig};
use crate::error::CliError;
use crate::model;
use crate::output::{num, Summary, Table};

/// Everything a subcommand needs once overrides are applied.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub cap: u32,
}

#[derive(Debug)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Printed to stdout after the files are written.
    pub message: String,
    /// Reported (with its exit code) after the files are written.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(tables: Vec<Table>, message: String) -> Self {
        Self { tables, message, failure: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Check,
    Gibbs,
    Stationary,
    Simulate,
    Zeta,
    Sweep,
    Trade,
    Mpe,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Check => "check",
            Self::Gibbs => "gibbs",
            Self::Stationary => "stationary",
            Self::Simulate => "simulate",
            Self::Zeta => "zeta",
            Self::Sweep => "sweep",
            Self::Trade => "trade",
            Self::Mpe => "mpe",
        }
    }
}

pub fn dispatch(kind: CommandKind, ctx: &Context) -> Result<Outcome, CliError> {
    match kind {
        CommandKind::Check => check(ctx),
        CommandKind::Gibbs => gibbs(ctx),
        CommandKind::Stationary => stationary(ctx),
        CommandKind::Simulate => simulate(ctx),
        CommandKind::Zeta => zeta(ctx),
        CommandKind::Sweep => sweep(ctx),
        CommandKind::Trade => trade(ctx),
        CommandKind::Mpe => mpe(ctx),
    }
}

/// Seed of sweep cell `cell`: the first eight bytes of
/// `SHA-256("netform-cell" ‖ master ‖ cell)`, little-endian.
pub fn cell_seed(master: u64, cell: u64) -> u64 {
    let mut bytes = b"netform-cell".to_vec();
    bytes.extend_from_slice(&master.to_le_bytes());
    bytes.extend_from_slice(&cell.to_le_bytes());
    let digest = Sha256::digest(&bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

fn space(ctx: &Context, n_nodes: usize) -> Result<StateSpace, CliError> {
    Ok(StateSpace::new(n_nodes, ctx.cap)?)
}

/// Exhaustive check when the pairwise table fits, sampled otherwise.
fn conservativeness(
    rule: &dyn SwitchingRule,
    space: &StateSpace,
    seed: u64,
) -> Result<(ConservativenessReport, &'static str), CliError> {
    if space.n_dyads() as u32 <= PAIRWISE_CAP_LOG2 {
        Ok((check_conservative_with(rule, space, CheckMode::FirstWitness)?, "exhaustive"))
    } else {
        let mode = CheckMode::Sampled { draws: DEFAULT_SAMPLED_DRAWS, seed };
        Ok((check_conservative_with(rule, space, mode)?, "sampled"))
    }
}

fn not_conservative(command: &str, report: &ConservativenessReport) -> CliError {
    CliError::Validation(format!("{command} needs a conservative model; check found {report}"))
}

/// The Gibbs table of the configured model, or a validation failure
/// carrying the witness.
fn gibbs_table(ctx: &Context, command: &str) -> Result<(GibbsTable, &'static str), CliError> {
    let m = &ctx.config.model;
    let space = space(ctx, m.nodes)?;
    if let RuleConfig::Epsilon { epsilon, strategy } = &m.rule {
        let rule = EpsilonDeviation::new(m.nodes, *epsilon, model::strategy(*strategy, m.nodes))?;
        if space.n_dyads() as u32 > PAIRWISE_CAP_LOG2 {
            return Err(CoreError::StateSpaceOverflow { log2_states: space.n_dyads() as u32, cap: PAIRWISE_CAP_LOG2 }.into());
        }
        return match epsilon_aggregating(&rule, &space)? {
            EpsilonOutcome::Gibbs(table) => Ok((table, "exhaustive")),
            EpsilonOutcome::NotConservative(report) => Err(not_conservative(command, &report)),
        };
    }
    let rule = model::rule(m)?;
    let (report, mode) = conservativeness(&*rule, &space, ctx.seed)?;
    if !report.is_conservative() {
        return Err(not_conservative(command, &report));
    }
    Ok((GibbsTable::from_potential(m.nodes, path_potential(&*rule, &space)?)?, mode))
}

fn witness_table(report: &ConservativenessReport) -> Table {
    let mut t = Table::new("check", &["network", "i", "j", "k", "l", "lhs", "rhs"]);
    for w in &report.witnesses {
        let (k, l) = w.second.map_or((String::new(), String::new()), |e| (e.i.to_string(), e.j.to_string()));
        t.push(vec![w.network.to_string(), w.first.i.to_string(), w.first.j.to_string(), k, l, num(w.lhs), num(w.rhs)]);
    }
    t
}

fn check(ctx: &Context) -> Result<Outcome, CliError> {
    let m = &ctx.config.model;
    let rule = model::rule(m)?;
    let space = space(ctx, m.nodes)?;
    let cc = ctx.config.analysis.check.clone().unwrap_or_default();
    let (mode, mode_name) = match cc.mode {
        CheckModeConfig::First => (CheckMode::FirstWitness, "first"),
        CheckModeConfig::Exhaustive => (CheckMode::Exhaustive, "exhaustive"),
        CheckModeConfig::Sampled => {
            (CheckMode::Sampled { draws: cc.draws.unwrap_or(DEFAULT_SAMPLED_DRAWS), seed: ctx.seed }, "sampled")
        }
    };
    let report = check_conservative_with(&*rule, &space, mode)?;
    let mut summary = Summary::new("check_summary");
    summary
        .text("verdict", report.verdict)
        .text("mode", mode_name)
        .text("conditions_checked", report.checked)
        .text("violations", report.witnesses.len());
    if report.is_conservative() && m.rule == RuleConfig::Choice && cc.mode != CheckModeConfig::Sampled {
        let utility = model::utility(m)?;
        let table = GibbsTable::from_potential(m.nodes, path_potential(&*rule, &space)?)?;
        let pg = potential_game_check(&utility, &table);
        summary.text("exact_potential", pg.exact).text("ordinal_potential", pg.ordinal).float("max_exact_gap", pg.max_exact_gap);
    }
    let message = format!("check: {report}");
    Ok(Outcome::ok(vec![witness_table(&report), summary.into_table()], message))
}

fn gibbs(ctx: &Context) -> Result<Outcome, CliError> {
    let m = &ctx.config.model;
    let (table, mode) = gibbs_table(ctx, "gibbs")?;
    let rule = model::rule(m)?;
    let meeting = model::meeting(&m.meeting, m.nodes)?;
    let mut t = Table::new("gibbs", &["index", "network", "links", "phi", "pi"]);
    for (k, g) in table.space().iter().enumerate() {
        t.push(vec![k.to_string(), g.to_string(), g.n_links().to_string(), num(table.phi()[k]), num(table.pi()[k])]);
    }
    let mut summary = Summary::new("gibbs_summary");
    summary
        .text("conservativeness_check", mode)
        .text("states", table.len())
        .float("log_partition", table.log_partition())
        .float("detailed_balance_residual", detailed_balance_residual(&table, &*rule, &meeting)?);
    let message = format!("gibbs: {} states, log Z = {}", table.len(), table.log_partition());
    Ok(Outcome::ok(vec![t, summary.into_table()], message))
}

fn stationary(ctx: &Context) -> Result<Outcome, CliError> {
    let m = &ctx.config.model;
    let rule = model::rule(m)?;
    let meeting = model::meeting(&m.meeting, m.nodes)?;
    let space = space(ctx, m.nodes)?;
    let op = build_transition_operator(&*rule, &meeting, &space)?;
    let pi = stationary_exact(&op)?;
    let mut t = Table::new("stationary", &["index", "network", "links", "pi"]);
    for (k, g) in space.iter().enumerate() {
        t.push(vec![k.to_string(), g.to_string(), g.n_links().to_string(), num(pi[k])]);
    }
    let residual = op.stationary_residual(&pi);
    let mut summary = Summary::new("stationary_summary");
    summary
        .text("time", if meeting.is_discrete() { "discrete" } else { "continuous" })
        .text("states", space.len())
        .float("residual", residual);
    Ok(Outcome::ok(vec![t, summary.into_table()], format!("stationary: {} states, residual {residual:e}", space.len())))
}

fn simulate(ctx: &Context) -> Result<Outcome, CliError> {
    let m = &ctx.config.model;
    let sim = ctx
        .config
        .analysis
        .simulate
        .clone()
        .ok_or_else(|| CliError::Config("simulate needs an [analysis.simulate] section".into()))?;
    if !(sim.length > 0.0 && sim.length.is_finite()) || sim.chains == 0 {
        return Err(CliError::Config("simulate needs a positive length and at least one chain".into()));
    }
    let rule = model::rule(m)?;
    let meeting = model::meeting(&m.meeting, m.nodes)?;
    let links: Observable = Arc::new(|g| g.n_links() as f64);
    let recip: Observable = Arc::new(reciprocity);
    let opts = SimOptions {
        initial: None,
        burn_in: sim.burn_in,
        record_events: false,
        observables: vec![links, recip],
        cap_log2: ctx.cap,
    };
    let runs: Vec<Trajectory> = (0..sim.chains)
        .into_par_iter()
        .map(|c| match m.meeting.time {
            TimeConfig::Discrete => simulate_discrete(&*rule, &meeting, sim.length as u64, ctx.seed, c, &opts),
            TimeConfig::Continuous => simulate_continuous(&*rule, &meeting, sim.length, ctx.seed, c, &opts),
        })
        .collect::<Result<_, _>>()?;

    let exact = match runs[0].occupation {
        Some(_) => Some(stationary_exact(&build_transition_operator(&*rule, &meeting, &space(ctx, m.nodes)?)?)?),
        None => None,
    };
    let mut chains = Table::new(
        "simulate_chains",
        &["chain", "events", "flips", "final_state", "mean_links", "mean_reciprocity", "tv_to_exact"],
    );
    let mut pooled: Option<Vec<f64>> = None;
    for run in &runs {
        let means = run.observable_means();
        let tv = match (run.occupation_distribution(), &exact) {
            (Some(occ), Some(pi)) => tv_distance(&occ, pi)?,
            _ => f64::NAN,
        };
        if let Some(occ) = &run.occupation {
            match &mut pooled {
                None => pooled = Some(occ.clone()),
                Some(p) => p.iter_mut().zip(occ).for_each(|(a, b)| *a += b),
            }
        }
        chains.push(vec![
            run.chain.to_string(),
            run.n_events.to_string(),
            run.n_flips.to_string(),
            run.final_state.to_string(),
            num(means[0]),
            num(means[1]),
            num(tv),
        ]);
    }
    let mut tables = Vec::new();
    let mut summary = Summary::new("simulate_summary");
    summary
        .text("time", if meeting.is_discrete() { "discrete" } else { "continuous" })
        .text("chains", sim.chains)
        .float("length", sim.length)
        .float("burn_in", sim.burn_in);
    let mut message = format!("simulate: {} chains", sim.chains);
    if let (Some(pooled), Some(pi)) = (pooled, exact) {
        let total: f64 = pooled.iter().sum();
        let occ: Vec<f64> = pooled.iter().map(|x| x / total).collect();
        let mut t = Table::new("simulate", &["index", "network", "occupation", "exact_pi"]);
        for (k, g) in space(ctx, m.nodes)?.iter().enumerate() {
            t.push(vec![k.to_string(), g.to_string(), num(occ[k]), num(pi[k])]);
        }
        let tv = tv_distance(&occ, &pi)?;
        summary.float("pooled_tv_to_exact", tv);
        message.push_str(&format!(", pooled TV to exact pi = {tv:.3e}"));
        tables.push(t);
    }
    tables.push(chains);
    tables.push(summary.into_table());
    Ok(Outcome::ok(tables, message))
}

fn homophily_limit(distances: &[Vec<f64>], weights: &[f64], v0: f64, gamma: f64) -> Result<LimitModel, CliError> {
    Ok(LimitModel::new(weights.to_vec(), LinearCostLimit::homophily(v0, gamma, distances, 0.0)?)?)
}

/// Density and distance, with `NaN`s in the empty-network regime.
fn density_or_nan(result: netform_core::Result<DensityDistance>) -> Result<DensityDistance, CliError> {
    match result {
        Ok(dd) => Ok(dd),
        Err(CoreError::EmptyNetworkRegime(_)) => Ok(DensityDistance { mu: f64::NAN, eta: f64::NAN }),
        Err(e) => Err(e.into()),
    }
}

fn zeta(ctx: &Context) -> Result<Outcome, CliError> {
    let z = ctx.config.analysis.zeta.clone().ok_or_else(|| CliError::Config("zeta needs an [analysis.zeta] section".into()))?;
    let mut summary = Summary::new("zeta");
    summary.float("v0", z.v0).float("gamma", z.gamma);
    let value = match &z.surface {
        SurfaceConfig::Discrete { distances, weights } => {
            let closed = zeta_discrete_homophily(z.v0, z.gamma, distances, weights)?;
            let general = zeta_isolated(&homophily_limit(distances, weights, z.v0, z.gamma)?);
            let surface = DiscreteHomophily { distances: distances.clone(), weights: weights.clone() };
            let dd = density_or_nan(density_and_distance(&surface, z.v0, z.gamma))?;
            summary
                .text("surface", "discrete")
                .float("zeta", closed)
                .float("zeta_variational", general.zeta)
                .text("variational_converged", general.converged)
                .float("mu", dd.mu)
                .float("eta", dd.eta);
            closed
        }
        SurfaceConfig::Circle { circumference } => {
            let value = zeta_continuous_uniform_circle(z.v0, z.gamma, *circumference)?;
            let dd = density_or_nan(density_and_distance(&UniformCircle { circumference: *circumference }, z.v0, z.gamma))?;
            summary.text("surface", "circle").float("zeta", value).float("mu", dd.mu).float("eta", dd.eta);
            value
        }
    };
    Ok(Outcome::ok(vec![summary.into_table()], format!("zeta = {value}")))
}

fn sweep(ctx: &Context) -> Result<Outcome, CliError> {
    let s = ctx.config.analysis.sweep.clone().ok_or_else(|| CliError::Config("sweep needs an [analysis.sweep] section".into()))?;
    let v0s = s.v0.points()?;
    let gammas = s.gamma.points()?;
    if gammas.iter().any(|g| *g < 0.0) {
        return Err(CliError::Config("sweep gamma values must be non-negative".into()));
    }
    let finite_n = s.finite_sizes.as_ref().map(|sizes| sizes.iter().sum::<usize>());
    if let (Some(sizes), Some(n)) = (&s.finite_sizes, finite_n) {
        if n < 2 || sizes.len() != s.weights.len() {
            return Err(CliError::Config("finite_sizes needs one size per type and at least two nodes".into()));
        }
    }
    let discrete = DiscreteHomophily { distances: s.distances.clone(), weights: s.weights.clone() };
    let circle = UniformCircle { circumference: s.circumference };
    let cells: Vec<(f64, f64)> = v0s.iter().flat_map(|&v0| gammas.iter().map(move |&g| (v0, g))).collect();
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(v0, gamma))| -> Result<Vec<String>, CliError> {
            let zd = zeta_discrete_homophily(v0, gamma, &s.distances, &s.weights)?;
            let dd = density_or_nan(density_and_distance(&discrete, v0, gamma))?;
            let zc = zeta_continuous_uniform_circle(v0, gamma, s.circumference)?;
            let dc = density_or_nan(density_and_distance(&circle, v0, gamma))?;
            let mut row = vec![
                cell.to_string(),
                cell_seed(ctx.seed, cell as u64).to_string(),
                num(v0),
                num(gamma),
                num(zd),
                num(dd.mu),
                num(dd.eta),
                num(zc),
                num(dc.mu),
                num(dc.eta),
            ];
            if let (Some(sizes), Some(n)) = (&s.finite_sizes, finite_n) {
                let links = finite_linear_expected_links(v0, gamma, &s.distances, sizes)?;
                row.push(num(links / (n * (n - 1)) as f64));
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut columns: Vec<String> =
        ["cell", "cell_seed", "v0", "gamma", "zeta_disc", "mu_disc", "eta_disc", "zeta_cont", "mu_cont", "eta_cont"]
            .iter()
            .map(|c| c.to_string())
            .collect();
    if s.finite_sizes.is_some() {
        columns.push("mu_finite".into());
    }
    let mut t = Table::with_columns("sweep", columns);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Outcome::ok(vec![t], format!("sweep: {} cells", cells.len())))
}

fn trade(ctx: &Context) -> Result<Outcome, CliError> {
    let c = ctx.config.analysis.trade.clone().ok_or_else(|| CliError::Config("trade needs an [analysis.trade] section".into()))?;
    let tm = TradeModel::new(c.v0, c.gamma, c.c, c.distances.clone(), c.weights.clone())?;
    let sol = trade_fixed_point(&tm);
    let z = zeta_trade(&tm)?;
    let finite = match &c.finite_sizes {
        Some(sizes) => {
            let profile = TypeProfile::from_sizes(sizes)?;
            let n: usize = sizes.iter().sum();
            let rule = DiscreteChoice::logit(finite_trade_utility(&tm, &profile)?);
            let space = space(ctx, n)?;
            let (report, _) = conservativeness(&rule, &space, ctx.seed)?;
            if !report.is_conservative() {
                return Err(not_conservative("trade", &report));
            }
            let table = GibbsTable::from_potential(n, path_potential(&rule, &space)?)?;
            Some(typed_link_shares(&table, &profile)?)
        }
        None => None,
    };
    let mut columns: Vec<String> = ["r", "s", "D", "T"].iter().map(|c| c.to_string()).collect();
    if finite.is_some() {
        columns.push("T_finite".into());
    }
    let mut t = Table::with_columns("trade", columns);
    let k = tm.n_types();
    for r in 0..k {
        for s in 0..k {
            let mut row = vec![r.to_string(), s.to_string(), num(tm.distances[r][s]), num(sol.t[r][s])];
            if let Some(f) = &finite {
                row.push(num(f[r][s]));
            }
            t.push(row);
        }
    }
    let mut summary = Table::new("trade_summary", &["quantity", "type", "value"]);
    summary.push(vec!["zeta_trade".into(), String::new(), num(z)]);
    for r in 0..k {
        summary.push(vec!["B".into(), r.to_string(), num(sol.b[r])]);
    }
    for r in 0..k {
        summary.push(vec!["A".into(), r.to_string(), num(sol.a[r])]);
    }
    for r in 0..k {
        summary.push(vec!["residual".into(), r.to_string(), num(sol.residuals[r])]);
    }
    Ok(Outcome::ok(vec![t, summary], format!("trade: zeta_trade = {z}")))
}

fn mpe(ctx: &Context) -> Result<Outcome, CliError> {
    let m = &ctx.config.model;
    let c = ctx.config.analysis.mpe.clone().ok_or_else(|| CliError::Config("mpe needs an [analysis.mpe] section or --rho".into()))?;
    if m.meeting.time != TimeConfig::Continuous {
        return Err(CliError::Config("mpe needs continuous-time meetings".into()));
    }
    let space = space(ctx, m.nodes)?;
    let flow = TabulatedUtility::from_utility(&model::utility(m)?, &space);
    let rates = model::meeting(&m.meeting, m.nodes)?.weights().to_vec();
    let problem = MpeProblem::new(flow, c.rho, rates)?;
    let opts = MpeOptions { damping: c.damping, max_iters: c.max_iters, tol: c.tol, cap_log2: ctx.cap };
    let sol = mpe_solve(&problem, &opts)?;
    let stat = mpe_stationary(&problem, &sol.values, ctx.cap)?;
    let n = m.nodes;
    let mut columns = vec!["index".to_string(), "network".to_string()];
    columns.extend((0..n).map(|i| format!("v_{i}")));
    columns.extend((0..n).map(|i| format!("V_{i}")));
    columns.push("pi".into());
    let mut t = Table::with_columns("mpe", columns);
    for (k, g) in space.iter().enumerate() {
        let mut row = vec![k.to_string(), g.to_string()];
        row.extend((0..n).map(|i| num(problem.flow.agent_values(i)[k])));
        row.extend((0..n).map(|i| num(sol.values[i][k])));
        row.push(num(stat.pi[k]));
        t.push(row);
    }
    let mut summary = Summary::new("mpe_summary");
    summary
        .float("rho", c.rho)
        .float("damping", c.damping)
        .text("converged", sol.converged)
        .text("iterations", sol.iterations)
        .float("residual", sol.residual)
        .float("max_box_violation", sol.max_box_violation)
        .text("induced_process", if stat.gibbs.is_some() { "conservative" } else { "not_conservative_or_unchecked" });
    let message = format!("mpe: {} after {} iterations, residual {:e}", if sol.converged { "converged" } else { "not converged" }, sol.iterations, sol.residual);
    let failure = (!sol.converged).then(|| {
        CliError::Validation(format!(
            "MPE iteration did not converge in {} iterations (residual {:e}); try more damping or iterations",
            sol.iterations, sol.residual
        ))
    });
    Ok(Outcome { tables: vec![t, summary.into_table()], message, failure })
}
