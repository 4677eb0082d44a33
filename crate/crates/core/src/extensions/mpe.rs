use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::choice::{DiscreteChoice, MeetingProcess, TabulatedUtility, Utility};
use crate::dynamics::{build_transition_operator, stationary_exact, TransitionOperator, DENSE_STATE_LIMIT};
use crate::error::{Error, Result};
use crate::graph::StateSpace;
use crate::potential::{build_aggregating_function, check_conservative, GibbsTable, PAIRWISE_CAP_LOG2};

/// Forward-looking agents: each agent values a network by the discounted
/// occupancy average of its flow utility, and decides on links with logit
/// shocks applied to those present values.
#[derive(Debug, Clone)]
pub struct MpeProblem {
    pub flow: TabulatedUtility,
    /// Discount rate per unit time, any positive value.
    pub rho: f64,
    /// Continuous-time meeting rates `λ_d`.
    pub rates: Vec<f64>,
}

impl MpeProblem {
    pub fn new(flow: TabulatedUtility, rho: f64, rates: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("discount rate {rho} must be positive")));
        }
        let n = flow.n_nodes();
        let meeting = MeetingProcess::continuous(rates.clone())?;
        if meeting.n_dyads() != n * (n - 1) {
            return Err(Error::SizeMismatch(format!("{} meeting rates for {} dyads", rates.len(), n * (n - 1))));
        }
        Ok(Self { flow, rho, rates })
    }

    pub fn n_nodes(&self) -> usize {
        self.flow.n_nodes()
    }

    fn meeting(&self) -> MeetingProcess {
        MeetingProcess::continuous(self.rates.clone()).expect("validated at construction")
    }

    fn space(&self, cap_log2: u32) -> Result<StateSpace> {
        StateSpace::new(self.n_nodes(), cap_log2)
    }

    /// Per-agent bounds `[min_g v_i(g), max_g v_i(g)]`.
    pub fn value_box(&self) -> Vec<(f64, f64)> {
        self.flow
            .rows()
            .iter()
            .map(|r| r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MpeOptions {
    /// Step `d` in `V ← (1 − d)V + d·T(V)`; 1 is plain fixed-point iteration.
    pub damping: f64,
    pub max_iters: usize,
    /// Convergence threshold on `‖T(V) − V‖∞`.
    pub tol: f64,
    pub cap_log2: u32,
}

impl Default for MpeOptions {
    fn default() -> Self {
        Self { damping: 0.5, max_iters: 10_000, tol: 1e-10, cap_log2: crate::graph::DEFAULT_CAP_LOG2 }
    }
}

#[derive(Debug, Clone)]
pub struct MpeSolution {
    /// `values[agent][network index]`.
    pub values: Vec<Vec<f64>>,
    /// `‖T(V) − V‖∞` at the returned iterate.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest excursion of any iterate outside the per-agent value box
    /// (zero up to rounding).
    pub max_box_violation: f64,
}

impl MpeSolution {
    pub fn utility(&self) -> TabulatedUtility {
        TabulatedUtility::new(self.values.len(), self.values.clone()).expect("shape preserved by the solver")
    }
}

fn induced_operator(problem: &MpeProblem, values: &[Vec<f64>], space: &StateSpace) -> Result<TransitionOperator> {
    let u = TabulatedUtility::new(problem.n_nodes(), values.to_vec())?;
    build_transition_operator(&DiscreteChoice::logit(u), &problem.meeting(), space)
}

/// `T(V)_i = ρ(ρI − Q_V)^{-1} v_i`, with `Q_V` the row generator of the
/// chain in which agents best-respond to the present values `V`.
pub fn present_values(problem: &MpeProblem, values: &[Vec<f64>], cap_log2: u32) -> Result<Vec<Vec<f64>>> {
    let space = problem.space(cap_log2)?;
    let op = induced_operator(problem, values, &space)?;
    resolvent_average(&op, problem.rho, problem.flow.rows())
}

fn resolvent_average(op: &TransitionOperator, rho: f64, flows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if op.n_states() < DENSE_STATE_LIMIT {
        resolvent_dense(op, rho, flows)
    } else {
        flows.par_iter().map(|v| resolvent_gauss_seidel(op, rho, v)).collect()
    }
}

fn resolvent_dense(op: &TransitionOperator, rho: f64, flows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = op.n_states();
    // Row-generator form: (ρ + exit_g) y_g − Σ_d rate(g → σ_d g) y_{σ_d g} = ρ v_g.
    let mut m = DMatrix::zeros(n, n);
    for g in 0..n {
        m[(g, g)] = rho + op.exit_weight(g);
        for d in 0..op.n_dyads() {
            m[(g, g ^ (1 << d))] = -op.flip_weight(g, d);
        }
    }
    let lu = m.lu();
    flows
        .par_iter()
        .map(|v| {
            let b = DVector::from_iterator(n, v.iter().map(|x| rho * x));
            lu.solve(&b)
                .map(|y| y.iter().copied().collect())
                .ok_or_else(|| Error::SolverFailure("singular resolvent system".into()))
        })
        .collect()
}

fn resolvent_gauss_seidel(op: &TransitionOperator, rho: f64, v: &[f64]) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 1_000_000;
    let n = op.n_states();
    let mut y = v.to_vec();
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        for g in 0..n {
            let mut acc = rho * v[g];
            for d in 0..op.n_dyads() {
                acc += op.flip_weight(g, d) * y[g ^ (1 << d)];
            }
            let new = acc / (rho + op.exit_weight(g));
            change = change.max((new - y[g]).abs());
            y[g] = new;
        }
        if change < 1e-14 * (1.0 + y.iter().fold(0.0f64, |a, x| a.max(x.abs()))) {
            return Ok(y);
        }
    }
    Err(Error::SolverFailure(format!("resolvent Gauss-Seidel did not converge in {MAX_SWEEPS} sweeps")))
}

fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

/// Damped fixed-point iteration `V ← (1 − δ)V + δ T(V)` from `V = v`.
/// Non-convergence is reported through `converged = false`, with the last
/// iterate and its residual.
pub fn mpe_solve(problem: &MpeProblem, opts: &MpeOptions) -> Result<MpeSolution> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping {} outside (0,1]", opts.damping)));
    }
    let bounds = problem.value_box();
    let violation = |values: &[Vec<f64>]| {
        values
            .iter()
            .zip(&bounds)
            .flat_map(|(row, &(lo, hi))| row.iter().map(move |&x| (lo - x).max(x - hi).max(0.0)))
            .fold(0.0, f64::max)
    };
    let mut values = problem.flow.rows().to_vec();
    let mut max_box_violation = 0.0f64;
    let mut iterations = 0;
    loop {
        let image = present_values(problem, &values, opts.cap_log2)?;
        max_box_violation = max_box_violation.max(violation(&image));
        let residual = sup_distance(&image, &values);
        if residual < opts.tol || iterations >= opts.max_iters {
            return Ok(MpeSolution {
                values,
                residual,
                converged: residual < opts.tol,
                iterations,
                max_box_violation,
            });
        }
        for (row, new) in values.iter_mut().zip(&image) {
            for (x, y) in row.iter_mut().zip(new) {
                *x = (1.0 - opts.damping) * *x + opts.damping * y;
            }
        }
        max_box_violation = max_box_violation.max(violation(&values));
        iterations += 1;
    }
}

#[derive(Debug, Clone)]
pub struct MpeStationary {
    pub pi: Vec<f64>,
    /// Present when the process induced by `V` is conservative and the
    /// state space is small enough for the pairwise check.
    pub gibbs: Option<GibbsTable>,
}

/// Stationary distribution of the formation process driven by present
/// values `V`.
pub fn mpe_stationary(problem: &MpeProblem, values: &[Vec<f64>], cap_log2: u32) -> Result<MpeStationary> {
    let space = problem.space(cap_log2)?;
    let pi = stationary_exact(&induced_operator(problem, values, &space)?)?;
    let mut gibbs = None;
    if space.n_dyads() as u32 <= PAIRWISE_CAP_LOG2 {
        let rule = DiscreteChoice::logit(TabulatedUtility::new(problem.n_nodes(), values.to_vec())?);
        if check_conservative(&rule, &space)?.is_conservative() {
            gibbs = Some(build_aggregating_function(&rule, &space)?);
        }
    }
    Ok(MpeStationary { pi, gibbs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{IsolatedTable, LinearUtility};

    fn problem(n: usize, flow: &impl Utility, rho: f64, lambda: f64) -> MpeProblem {
        let space = StateSpace::with_default_cap(n).unwrap();
        let m = n * (n - 1);
        MpeProblem::new(TabulatedUtility::from_utility(flow, &space), rho, vec![lambda / m as f64; m]).unwrap()
    }

    #[test]
    fn constant_flow_is_its_own_value() {
        let flow = TabulatedUtility::new(2, vec![vec![1.5; 4], vec![-0.5; 4]]).unwrap();
        let p = MpeProblem::new(flow, 0.3, vec![1.0, 1.0]).unwrap();
        let sol = mpe_solve(&p, &MpeOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert!(sup_distance(&sol.values, p.flow.rows()) < 1e-14);
        let st = mpe_stationary(&p, &sol.values, 20).unwrap();
        assert!(st.pi.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn resolvent_is_an_average() {
        let u = IsolatedTable::random(3, 1.0, 5);
        let p = problem(3, &u, 0.7, 2.0);
        let image = present_values(&p, p.flow.rows(), 20).unwrap();
        for (row, &(lo, hi)) in image.iter().zip(&p.value_box()) {
            assert!(row.iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
        }
        // ρ(ρI − Q)^{-1} 1 = 1
        let ones = vec![vec![1.0; 64]; 3];
        let op = induced_operator(&p, p.flow.rows(), &p.space(20).unwrap()).unwrap();
        for row in resolvent_average(&op, 0.7, &ones).unwrap() {
            assert!(row.iter().all(|x| (x - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn dense_and_iterative_resolvents_agree() {
        let u = IsolatedTable::random(3, 1.0, 9);
        let p = problem(3, &u, 0.4, 1.0);
        let op = induced_operator(&p, p.flow.rows(), &p.space(20).unwrap()).unwrap();
        let dense = resolvent_dense(&op, 0.4, p.flow.rows()).unwrap();
        for (row, v) in dense.iter().zip(p.flow.rows()) {
            let gs = resolvent_gauss_seidel(&op, 0.4, v).unwrap();
            assert!(row.iter().zip(&gs).all(|(a, b)| (a - b).abs() < 1e-11));
        }
    }

    #[test]
    fn impatient_agents_are_myopic() {
        let u = LinearUtility::out_degree(2, 0.8);
        let lambda = 1.0;
        let p = problem(2, &u, 1e3 * lambda, lambda);
        let sol = mpe_solve(&p, &MpeOptions::default()).unwrap();
        assert!(sol.converged && sol.residual < 1e-10);
        assert!(sol.max_box_violation < 1e-12);
        let bound: Vec<f64> =
            p.flow.rows().iter().map(|r| 2.0 / p.rho * lambda * r.iter().map(|x| x.abs()).sum::<f64>()).collect();
        for (i, (row, v)) in sol.values.iter().zip(p.flow.rows()).enumerate() {
            let gap = row.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap <= bound[i], "agent {i}: {gap} > {}", bound[i]);
        }
    }

    #[test]
    fn patient_agents_value_the_uniform_average() {
        let u = IsolatedTable::random(2, 1.0, 3);
        let lambda = 1.0;
        let p = problem(2, &u, 1e-6 * lambda, lambda);
        let sol = mpe_solve(&p, &MpeOptions::default()).unwrap();
        assert!(sol.converged, "residual {}", sol.residual);
        for (row, v) in sol.values.iter().zip(p.flow.rows()) {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!(row.iter().all(|x| (x - mean).abs() < 1e-3));
        }
        let st = mpe_stationary(&p, &sol.values, 20).unwrap();
        assert!(st.pi.iter().all(|x| (x - 0.25).abs() < 1e-3));
    }

    #[test]
    fn large_discount_rate_recovers_myopic_stationary_distribution() {
        let u = IsolatedTable::random(2, 1.0, 8);
        let lambda = 1.0;
        let p = problem(2, &u, 1e6 * lambda, lambda);
        let sol = mpe_solve(&p, &MpeOptions::default()).unwrap();
        let st = mpe_stationary(&p, &sol.values, 20).unwrap();
        let myopic =
            build_aggregating_function(&DiscreteChoice::logit(&u), &StateSpace::with_default_cap(2).unwrap()).unwrap();
        assert!(st.pi.iter().zip(myopic.pi()).all(|(a, b)| (a - b).abs() < 1e-6));
    }
}
