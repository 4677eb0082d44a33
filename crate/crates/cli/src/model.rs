//! Turns the `model` section into core objects.

use netform_core::applications::reciprocity;
use netform_core::choice::{
    ConstantUtility, ConvexCostUtility, DiscreteChoice, IsolatedTable, LinearUtility, MeetingProcess, SharedUtility,
    ShockSpec, SwitchingRule, Utility,
};
use netform_core::extensions::{EpsilonDeviation, SwitchingCost};
use netform_core::graph::{n_dyads, Dyad, MAX_NODES};
use netform_core::{Network, TypeProfile};

use crate::config::{MeetingConfig, ModelConfig, RuleConfig, ShockConfig, StrategyConfig, TimeConfig, UtilityConfig};
use crate::error::CliError;

pub type DynUtility = Box<dyn Utility>;

pub fn utility(model: &ModelConfig) -> Result<DynUtility, CliError> {
    let n = model.nodes;
    if !(2..=MAX_NODES).contains(&n) {
        return Err(CliError::Config(format!("nodes = {n} outside 2..={MAX_NODES}")));
    }
    let profile = |sizes: &[usize]| -> Result<TypeProfile, CliError> {
        if sizes.iter().sum::<usize>() != n {
            return Err(CliError::Config(format!("type sizes {sizes:?} do not add up to {n} nodes")));
        }
        Ok(TypeProfile::from_sizes(sizes)?)
    };
    let u: DynUtility = match &model.utility {
        UtilityConfig::OutDegree { a } => Box::new(LinearUtility::out_degree(n, *a)),
        UtilityConfig::Linear { weights } => {
            if weights.len() != n || weights.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("linear weights must be {n}x{n}")));
            }
            Box::new(LinearUtility::new(n, weights.concat())?)
        }
        UtilityConfig::Homophily { v0, gamma, distances, sizes } => {
            Box::new(LinearUtility::typed(&profile(sizes)?, *v0, *gamma, distances)?)
        }
        UtilityConfig::Congestion { v0, gamma, c, distances, sizes } => {
            Box::new(ConvexCostUtility::new(LinearUtility::typed(&profile(sizes)?, *v0, *gamma, distances)?, *c))
        }
        UtilityConfig::IsolatedRandom { scale, seed } => Box::new(IsolatedTable::random(n, *scale, *seed)),
        UtilityConfig::Constant { values } => {
            if values.len() != n {
                return Err(CliError::Config(format!("constant utility needs {n} values")));
            }
            Box::new(ConstantUtility::new(values.clone()))
        }
        UtilityConfig::Shared { links, reciprocity: weight } => {
            let (links, weight) = (*links, *weight);
            Box::new(SharedUtility::new(n, move |g| links * g.n_links() as f64 + weight * reciprocity(g)))
        }
    };
    Ok(u)
}

pub fn shock(config: &ShockConfig) -> Result<ShockSpec, CliError> {
    Ok(match config {
        ShockConfig::Logit => ShockSpec::Logit,
        ShockConfig::Cauchy { scale } => ShockSpec::cauchy(*scale)?,
    })
}

pub fn meeting(config: &MeetingConfig, n_nodes: usize) -> Result<MeetingProcess, CliError> {
    let m = n_dyads(n_nodes);
    let weights = match &config.rates {
        Some(r) if r.len() != m => {
            return Err(CliError::Config(format!("{} meeting rates for {m} dyads", r.len())));
        }
        Some(r) => r.clone(),
        None => vec![config.total / m as f64; m],
    };
    Ok(match config.time {
        TimeConfig::Continuous => MeetingProcess::continuous(weights)?,
        TimeConfig::Discrete => MeetingProcess::discrete(weights)?,
    })
}

/// Pure strategies for the ε-deviation rule; each sees the network with
/// the decided dyad already removed.
pub fn strategy(kind: StrategyConfig, n_nodes: usize) -> impl Fn(usize, Network) -> bool + Send + Sync + 'static {
    move |d, g| match kind {
        StrategyConfig::Always => true,
        StrategyConfig::Never => false,
        StrategyConfig::Reciprocate => {
            let dyad = Dyad::from_index(d, n_nodes);
            g.has_index(Dyad { i: dyad.j, j: dyad.i }.index(n_nodes))
        }
    }
}

pub fn rule(model: &ModelConfig) -> Result<Box<dyn SwitchingRule>, CliError> {
    let n = model.nodes;
    Ok(match &model.rule {
        RuleConfig::Choice => Box::new(DiscreteChoice::new(utility(model)?, shock(&model.shock)?)),
        RuleConfig::SwitchingCost { cost } => {
            if !(*cost >= 0.0 && cost.is_finite()) {
                return Err(CliError::Config(format!("switching cost {cost} must be non-negative")));
            }
            Box::new(SwitchingCost::new(utility(model)?, shock(&model.shock)?, *cost))
        }
        RuleConfig::Epsilon { epsilon, strategy: s } => {
            utility(model)?;
            Box::new(EpsilonDeviation::new(n, *epsilon, strategy(*s, n))?)
        }
    })
}
