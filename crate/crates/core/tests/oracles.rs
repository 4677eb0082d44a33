//! Cross-module checks: each quantity is computed along two independent
//! routes that must agree.

use netform_core::applications::{
    finite_trade_utility, trade_shares_asymptotic, typed_link_shares, TradeModel,
};
use netform_core::asymptotics::{
    density_and_distance, finite_linear_expected_links, finite_linear_log_partition, zeta_discrete_homophily,
    DiscreteHomophily,
};
use netform_core::choice::{logistic, DiscreteChoice, IsolatedTable, LinearUtility, MeetingProcess};
use netform_core::dynamics::{build_transition_operator, simulate_chains, stationary_exact, tv_distance, SimOptions};
use netform_core::graph::{StateSpace, TypeProfile};
use netform_core::potential::{build_aggregating_function, ensemble_average, log_partition_factorized};

#[test]
fn log_partition_derivative_is_the_mean_link_count() {
    // d ln Z / da = ⟨|g|⟩ for V_i = a · outdeg_i
    let space = StateSpace::with_default_cap(3).unwrap();
    let log_z = |a: f64| {
        build_aggregating_function(&DiscreteChoice::logit(LinearUtility::out_degree(3, a)), &space)
            .unwrap()
            .log_partition()
    };
    let a = 0.37;
    let h = 1e-5;
    let fd = (log_z(a + h) - log_z(a - h)) / (2.0 * h);
    let table = build_aggregating_function(&DiscreteChoice::logit(LinearUtility::out_degree(3, a)), &space).unwrap();
    let mean = ensemble_average(&table, |g| g.n_links() as f64);
    assert!((fd - mean).abs() < 1e-8);
    assert!((mean - 6.0 * logistic(a)).abs() < 1e-12);
    assert!((log_z(a) - 6.0 * (1.0 + a.exp()).ln()).abs() < 1e-12);
}

#[test]
fn discrete_and_continuous_time_share_the_stationary_law() {
    let space = StateSpace::with_default_cap(3).unwrap();
    let u = IsolatedTable::random(3, 1.2, 77);
    let rule = DiscreteChoice::logit(&u);
    let lambda = 2.5;
    let cont = MeetingProcess::uniform_continuous(3, lambda).unwrap();
    let disc = MeetingProcess::uniform_discrete(3, 0.3 * lambda / lambda).unwrap();
    let pc = stationary_exact(&build_transition_operator(&rule, &cont, &space).unwrap()).unwrap();
    let pd = stationary_exact(&build_transition_operator(&rule, &disc, &space).unwrap()).unwrap();
    let gibbs = build_aggregating_function(&rule, &space).unwrap();
    for k in 0..64 {
        assert!((pc[k] - pd[k]).abs() < 1e-10);
        assert!((pc[k] - gibbs.pi()[k]).abs() < 1e-10);
    }
}

#[test]
fn non_uniform_meeting_rates_do_not_change_the_gibbs_law() {
    let space = StateSpace::with_default_cap(3).unwrap();
    let u = IsolatedTable::random(3, 0.8, 5);
    let rule = DiscreteChoice::logit(&u);
    let rates: Vec<f64> = (0..6).map(|d| 0.2 + d as f64).collect();
    let pi = stationary_exact(
        &build_transition_operator(&rule, &MeetingProcess::continuous(rates).unwrap(), &space).unwrap(),
    )
    .unwrap();
    let gibbs = build_aggregating_function(&rule, &space).unwrap();
    assert!(pi.iter().zip(gibbs.pi()).all(|(a, b)| (a - b).abs() < 1e-10));
}

#[test]
fn pooled_chains_approach_the_gibbs_law() {
    let space = StateSpace::with_default_cap(3).unwrap();
    let rule = DiscreteChoice::logit(LinearUtility::out_degree(3, 3f64.ln()));
    let gibbs = build_aggregating_function(&rule, &space).unwrap();
    let meeting = MeetingProcess::uniform_continuous(3, 1.0).unwrap();
    let occ = simulate_chains(&rule, &meeting, 50_000.0, 11, 4, &SimOptions::default()).unwrap();
    assert!(tv_distance(&occ, gibbs.pi()).unwrap() < 0.03);
}

#[test]
fn finite_density_approaches_mu() {
    let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let model = DiscreteHomophily { distances: d.clone(), weights: vec![0.5, 0.5] };
    for (v0, gamma) in [(0.0, 0.0), (0.5, 1.0), (-1.0, 2.0)] {
        let mu = density_and_distance(&model, v0, gamma).unwrap().mu;
        let n = 50;
        let density = finite_linear_expected_links(v0, gamma, &d, &[25, 25]).unwrap() / (n * (n - 1)) as f64;
        assert!((density - mu).abs() < 0.01);
    }
}

#[test]
fn factorized_log_partition_matches_enumeration_for_typed_models() {
    let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let profile = TypeProfile::from_sizes(&[1, 2]).unwrap();
    let u = LinearUtility::typed(&profile, -0.3, 1.4, &d).unwrap();
    let table = build_aggregating_function(&DiscreteChoice::logit(&u), &StateSpace::with_default_cap(3).unwrap()).unwrap();
    let closed = finite_linear_log_partition(-0.3, 1.4, &d, &[1, 2]).unwrap();
    assert!((table.log_partition() - closed).abs() < 1e-12);
    assert!((log_partition_factorized(&u).unwrap() - closed).abs() < 1e-12);
    let z = zeta_discrete_homophily(-0.3, 1.4, &d, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
    assert!(z > 0.0);
}

#[test]
fn finite_trade_shares_are_close_to_the_limit() {
    // N = 4 is the largest balanced two-type profile within the exhaustive
    // cap, so only a loose agreement is expected.
    let tm = TradeModel::new(0.3, 1.0, 1.0, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5]).unwrap();
    let limit = trade_shares_asymptotic(&tm);
    let profile = TypeProfile::from_sizes(&[2, 2]).unwrap();
    let u = finite_trade_utility(&tm, &profile).unwrap();
    let table = build_aggregating_function(&DiscreteChoice::logit(&u), &StateSpace::with_default_cap(4).unwrap()).unwrap();
    let shares = typed_link_shares(&table, &profile).unwrap();
    for r in 0..2 {
        for s in 0..2 {
            assert!((shares[r][s] - limit[r][s]).abs() < 0.1);
            // the congestion cost lowers every share below the cost-free logistic
            assert!(shares[r][s] < logistic(0.3 - tm.distances[r][s]));
        }
    }
    assert!(shares[0][0] > shares[0][1] && limit[0][0] > limit[0][1]);
}
