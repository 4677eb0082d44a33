use crate::choice::{softplus, ShockSpec, SwitchingRule, Utility};
use crate::error::Result;
use crate::graph::{Dyad, Network};

/// `χ(x; s) = x + ln((1 + e^{x+s}) / (e^x + e^s))`, the logit log-odds of a
/// switch with utility gain `x` when keeping the current state earns a
/// bonus `s`.
pub fn switching_cost_chi(x: f64, s: f64) -> f64 {
    if s == 0.0 {
        return x;
    }
    let hi = x.max(s);
    let log_denominator = hi + (-(x - s).abs()).exp().ln_1p();
    x + softplus(x + s) - log_denominator
}

/// Discrete choice where keeping the current dyad state is worth an extra
/// `s` utils: `p_ij(g) = F1(V_i(σ_ij g) − V_i(g) − s)`.
#[derive(Debug, Clone)]
pub struct SwitchingCost<U> {
    pub utility: U,
    pub shock: ShockSpec,
    pub cost: f64,
}

impl<U: Utility> SwitchingCost<U> {
    pub fn new(utility: U, shock: ShockSpec, cost: f64) -> Self {
        Self { utility, shock, cost }
    }

    pub fn logit(utility: U, cost: f64) -> Self {
        Self::new(utility, ShockSpec::Logit, cost)
    }

    fn gain(&self, g: Network, dyad: usize) -> f64 {
        let i = Dyad::from_index(dyad, g.n_nodes()).i;
        self.utility.value(i, g.toggled(dyad)) - self.utility.value(i, g)
    }
}

impl<U: Utility> SwitchingRule for SwitchingCost<U> {
    fn n_nodes(&self) -> usize {
        self.utility.n_nodes()
    }

    fn switch_probability(&self, g: Network, dyad: usize) -> Result<f64> {
        self.shock.probability(self.gain(g, dyad) - self.cost)
    }

    fn log_odds(&self, g: Network, dyad: usize) -> Result<f64> {
        let x = self.gain(g, dyad);
        let p = self.shock.probability(x - self.cost)?;
        let q = self.shock.probability(-x - self.cost)?;
        Ok(if self.shock.is_logit() { switching_cost_chi(x, self.cost) } else { (p / q).ln() })
    }
}

/// Logit switching probability with a switching cost `s`.
pub fn switching_cost_probability<U: Utility>(u: &U, g: Network, d: Dyad, s: f64) -> Result<f64> {
    let n = g.n_nodes();
    Dyad::new(d.i, d.j, n)?;
    SwitchingCost::logit(u, s).switch_probability(g, d.index(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{logistic, switching_probability, ConstantUtility, DiscreteChoice, IsolatedTable, LinearUtility};
    use crate::graph::StateSpace;
    use crate::potential::check_conservative;

    /// χ straight from its definition, as an oracle for the stable form.
    fn chi_naive(x: f64, s: f64) -> f64 {
        x + ((1.0 + (x + s).exp()) / (x.exp() + s.exp())).ln()
    }

    #[test]
    fn chi_matches_definition_and_limits() {
        assert_eq!(switching_cost_chi(1.3, 0.0), 1.3);
        for &x in &[-4.0, -1.1, 0.0, 0.3, 2.0, 7.5] {
            for &s in &[0.0, 0.01, 0.5, 2.0] {
                assert!((switching_cost_chi(x, s) - chi_naive(x, s)).abs() < 1e-12);
                assert!((switching_cost_chi(-x, s) + switching_cost_chi(x, s)).abs() < 1e-12);
            }
        }
        assert!(switching_cost_chi(800.0, 1.0).is_finite());
        let s = 0.01;
        assert!((switching_cost_chi(2.0, s) - (2.0 + s * 1f64.tanh())).abs() < 1e-4 * s);
    }

    #[test]
    fn chi_is_the_log_odds_of_the_cost_model() {
        let u = IsolatedTable::random(3, 1.0, 4);
        let rule = SwitchingCost::logit(&u, 0.7);
        let sp = StateSpace::with_default_cap(3).unwrap();
        for g in sp.iter() {
            for d in 0..6 {
                let p = rule.switch_probability(g, d).unwrap();
                let q = rule.switch_probability(g.toggled(d), d).unwrap();
                assert!((rule.log_odds(g, d).unwrap() - (p / q).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn probabilities() {
        let u = ConstantUtility::uniform(2, 0.0);
        let g = Network::empty(2).unwrap();
        let d = Dyad::new(0, 1, 2).unwrap();
        let p = switching_cost_probability(&u, g, d, 1.0).unwrap();
        assert!((p - logistic(-1.0)).abs() < 1e-15);
        assert!((p - 0.2689414213699951).abs() < 1e-12);
        let lin = LinearUtility::out_degree(2, 0.8);
        assert_eq!(
            switching_cost_probability(&lin, g, d, 0.0).unwrap(),
            switching_probability(&lin, &ShockSpec::Logit, g, d).unwrap()
        );
    }

    #[test]
    fn cost_breaks_conservativeness_of_generic_isolated_utilities() {
        let sp = StateSpace::with_default_cap(3).unwrap();
        let u = IsolatedTable::random(3, 1.5, 12);
        assert!(check_conservative(&DiscreteChoice::logit(&u), &sp).unwrap().is_conservative());
        let report = check_conservative(&SwitchingCost::logit(&u, 0.5), &sp).unwrap();
        assert!(!report.is_conservative());
        assert!(report.witness().unwrap().second.is_some());
        // constant utilities: χ(0; s) = 0, trivially conservative
        let flat = ConstantUtility::uniform(3, 1.0);
        assert!(check_conservative(&SwitchingCost::logit(&flat, 0.5), &sp).unwrap().is_conservative());
    }
}
