use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::choice::{logistic, softplus};
use crate::error::{Error, Result};

/// Gradient-norm target of the inner maximization.
pub const ZETA_GRAD_TOL: f64 = 1e-8;
const NEWTON_MAX_ITERS: usize = 500;
const FD_STEP: f64 = 1e-5;

/// Entropy of a Bernoulli(p) variable in nats, with `H(0) = H(1) = 0`.
pub fn bernoulli_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0,1]")));
    }
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.ln() };
    Ok(term(p) + term(1.0 - p))
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Limiting per-type utility `v_r(y)` of a node of type `r` whose
/// out-links cover a fraction `y_s` of the population in each type `s`.
pub trait LimitUtility: Send + Sync {
    fn n_types(&self) -> usize;

    fn value(&self, r: usize, y: &[f64]) -> f64;

    /// `∂v_r/∂y`; central differences unless overridden.
    fn gradient(&self, r: usize, y: &[f64], out: &mut [f64]) {
        let mut probe = y.to_vec();
        for s in 0..y.len() {
            let h = FD_STEP;
            probe[s] = y[s] + h;
            let up = self.value(r, &probe);
            probe[s] = y[s] - h;
            let down = self.value(r, &probe);
            probe[s] = y[s];
            out[s] = (up - down) / (2.0 * h);
        }
    }

    /// `∂²v_r/∂y²`, by differencing [`gradient`](Self::gradient) unless
    /// overridden. Only steers the optimizer; accuracy of ζ does not
    /// depend on it.
    fn hessian(&self, r: usize, y: &[f64]) -> DMatrix<f64> {
        let c = y.len();
        let mut h = DMatrix::zeros(c, c);
        let (mut up, mut down) = (vec![0.0; c], vec![0.0; c]);
        let mut probe = y.to_vec();
        for s in 0..c {
            probe[s] = y[s] + FD_STEP;
            self.gradient(r, &probe, &mut up);
            probe[s] = y[s] - FD_STEP;
            self.gradient(r, &probe, &mut down);
            probe[s] = y[s];
            for t in 0..c {
                h[(t, s)] = (up[t] - down[t]) / (2.0 * FD_STEP);
            }
        }
        (&h + h.transpose()) * 0.5
    }
}

/// `v_r(y) = Σ_s a_rs y_s − c (Σ_s y_s)²`: linear link values with an
/// optional convex cost in the total number of links.
#[derive(Debug, Clone)]
pub struct LinearCostLimit {
    a: Vec<Vec<f64>>,
    cost: f64,
}

impl LinearCostLimit {
    pub fn new(a: Vec<Vec<f64>>, cost: f64) -> Result<Self> {
        let c = a.len();
        if c == 0 || a.iter().any(|row| row.len() != c) {
            return Err(Error::SizeMismatch("link-value matrix must be square and nonempty".into()));
        }
        if !(cost >= 0.0) {
            return Err(Error::InvalidParameter(format!("cost {cost} must be non-negative")));
        }
        Ok(Self { a, cost })
    }

    pub fn linear(a: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(a, 0.0)
    }

    /// `a_rs = v0 − γ D̃_rs`.
    pub fn homophily(v0: f64, gamma: f64, distances: &[Vec<f64>], cost: f64) -> Result<Self> {
        Self::new(distances.iter().map(|row| row.iter().map(|d| v0 - gamma * d).collect()).collect(), cost)
    }

    pub fn link_values(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
}

impl LimitUtility for LinearCostLimit {
    fn n_types(&self) -> usize {
        self.a.len()
    }

    fn value(&self, r: usize, y: &[f64]) -> f64 {
        let total: f64 = y.iter().sum();
        self.a[r].iter().zip(y).map(|(a, y)| a * y).sum::<f64>() - self.cost * total * total
    }

    fn gradient(&self, r: usize, y: &[f64], out: &mut [f64]) {
        let total: f64 = y.iter().sum();
        for (o, a) in out.iter_mut().zip(&self.a[r]) {
            *o = a - 2.0 * self.cost * total;
        }
    }

    fn hessian(&self, _r: usize, y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(y.len(), y.len(), -2.0 * self.cost)
    }
}

type LimitFn = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;

/// A limiting utility given as a plain function of `(r, y)`.
#[derive(Clone)]
pub struct FnLimit {
    n_types: usize,
    f: LimitFn,
}

impl FnLimit {
    pub fn new(n_types: usize, f: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { n_types, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnLimit").field("n_types", &self.n_types).finish_non_exhaustive()
    }
}

impl LimitUtility for FnLimit {
    fn n_types(&self) -> usize {
        self.n_types
    }
    fn value(&self, r: usize, y: &[f64]) -> f64 {
        (self.f)(r, y)
    }
}

/// Type weights together with the limiting utility of each type.
#[derive(Clone)]
pub struct LimitModel {
    weights: Vec<f64>,
    utility: Arc<dyn LimitUtility>,
}

impl LimitModel {
    pub fn new(weights: Vec<f64>, utility: impl LimitUtility + 'static) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("type weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("type weights sum to {total}, not 1")));
        }
        if utility.n_types() != weights.len() {
            return Err(Error::SizeMismatch(format!(
                "{} type weights but the utility has {} types",
                weights.len(),
                utility.n_types()
            )));
        }
        Ok(Self { weights, utility: Arc::new(utility) })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_types(&self) -> usize {
        self.weights.len()
    }

    /// `f_r(x) = Σ_s w_s H(x_s) + v_r(w ⊙ x) − v_r(0)`.
    pub fn objective(&self, r: usize, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        let zero = vec![0.0; x.len()];
        let entropy: f64 =
            x.iter().zip(&self.weights).map(|(x, w)| w * bernoulli_entropy(x.clamp(0.0, 1.0)).unwrap_or(0.0)).sum();
        entropy + self.utility.value(r, &y) - self.utility.value(r, &zero)
    }

    /// `∂f_r/∂x_s = w_s (∂_s v_r(w ⊙ x) − logit(x_s))`, for interior `x`.
    pub fn objective_gradient(&self, r: usize, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        let mut g = vec![0.0; x.len()];
        self.utility.gradient(r, &y, &mut g);
        for ((g, x), w) in g.iter_mut().zip(x).zip(&self.weights) {
            *g = w * (*g - logit(*x));
        }
        g
    }

    fn objective_hessian(&self, r: usize, x: &[f64]) -> DMatrix<f64> {
        let y: Vec<f64> = x.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        let mut h = self.utility.hessian(r, &y);
        let c = x.len();
        for s in 0..c {
            for t in 0..c {
                h[(s, t)] *= self.weights[s] * self.weights[t];
            }
            h[(s, s)] -= self.weights[s] / (x[s] * (1.0 - x[s]));
        }
        h
    }
}

impl fmt::Debug for LimitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LimitModel").field("weights", &self.weights).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaResult {
    pub zeta: f64,
    /// `x*_r`, one row per type.
    pub maximizers: Vec<Vec<f64>>,
    /// `max_x f_r(x)` per type.
    pub type_values: Vec<f64>,
    /// Newton iterations summed over types and starts.
    pub iterations: usize,
    /// Largest final `‖∇f_r(x*_r)‖∞`.
    pub grad_norm: f64,
    pub converged: bool,
}

/// Deterministic multi-start points: the centre of the cube plus seven
/// patterns over {0.25, 0.75}.
fn starts(c: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.5; c]];
    for k in 1..8usize {
        out.push((0..c).map(|s| if (k >> (s % 3)) & 1 == 1 { 0.75 } else { 0.25 }).collect());
    }
    out
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Regularised Newton ascent kept strictly inside the cube. The entropy
/// term's gradient diverges at the faces, so every maximizer of a
/// differentiable `v_r` is interior and first-order conditions apply.
fn maximize_from(lm: &LimitModel, r: usize, mut x: Vec<f64>) -> (Vec<f64>, f64, usize, f64) {
    let c = x.len();
    let mut value = lm.objective(r, &x);
    let mut grad = lm.objective_gradient(r, &x);
    let mut iters = 0;
    while iters < NEWTON_MAX_ITERS && sup_norm(&grad) >= ZETA_GRAD_TOL * 1e-2 {
        iters += 1;
        let h = lm.objective_hessian(r, &x);
        let g = DVector::from_column_slice(&grad);
        let mut mu = 0.0;
        let mut moved = false;
        for _ in 0..60 {
            let m = -&h + DMatrix::identity(c, c) * mu;
            if let Some(chol) = m.cholesky() {
                let step = chol.solve(&g);
                // fraction-to-boundary rule
                let mut t = 1.0f64;
                for s in 0..c {
                    if step[s] > 0.0 {
                        t = t.min(0.99 * (1.0 - x[s]) / step[s]);
                    } else if step[s] < 0.0 {
                        t = t.min(0.99 * x[s] / -step[s]);
                    }
                }
                let cand: Vec<f64> = (0..c).map(|s| x[s] + t * step[s]).collect();
                let cand_value = lm.objective(r, &cand);
                let cand_grad = lm.objective_gradient(r, &cand);
                if cand_value >= value - 1e-14 * value.abs().max(1.0)
                    && sup_norm(&cand_grad).is_finite()
                    && (cand_value >= value || sup_norm(&cand_grad) < sup_norm(&grad))
                {
                    x = cand;
                    value = cand_value;
                    grad = cand_grad;
                    moved = true;
                    break;
                }
            }
            mu = if mu == 0.0 { 1e-8 * (1.0 + h.amax()) } else { mu * 10.0 };
        }
        if !moved {
            break;
        }
    }
    let norm = sup_norm(&grad);
    (x, value, iters, norm)
}

/// `ζ = Σ_r w_r max_{x ∈ [0,1]^C} f_r(x)`, each inner maximum taken over
/// eight deterministic starts.
pub fn zeta_isolated(lm: &LimitModel) -> ZetaResult {
    let c = lm.n_types();
    let mut maximizers = Vec::with_capacity(c);
    let mut type_values = Vec::with_capacity(c);
    let mut iterations = 0;
    let mut grad_norm = 0.0f64;
    for r in 0..c {
        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        for x0 in starts(c) {
            let (x, v, it, gn) = maximize_from(lm, r, x0);
            iterations += it;
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((x, v, gn));
            }
        }
        let (x, v, gn) = best.expect("at least one start");
        grad_norm = grad_norm.max(gn);
        maximizers.push(x);
        type_values.push(v);
    }
    let zeta = lm.weights.iter().zip(&type_values).map(|(w, v)| w * v).sum();
    ZetaResult { zeta, maximizers, type_values, iterations, grad_norm, converged: grad_norm < ZETA_GRAD_TOL }
}

fn check_homophily_inputs(gamma: f64, distances: &[Vec<f64>], weights: &[f64]) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} must be non-negative")));
    }
    let c = weights.len();
    if distances.len() != c || distances.iter().any(|row| row.len() != c) {
        return Err(Error::SizeMismatch(format!("distance matrix must be {c}x{c}")));
    }
    if distances.iter().flatten().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidParameter("distances must be non-negative".into()));
    }
    Ok(())
}

/// `ζ = Σ_{r,s} w_r w_s ln(1 + e^{v0 − γ D̃_rs})`.
pub fn zeta_discrete_homophily(v0: f64, gamma: f64, distances: &[Vec<f64>], weights: &[f64]) -> Result<f64> {
    check_homophily_inputs(gamma, distances, weights)?;
    Ok(pair_sum(weights, |r, s| softplus(v0 - gamma * distances[r][s])))
}

fn pair_sum(weights: &[f64], f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut total = 0.0;
    for (r, wr) in weights.iter().enumerate() {
        for (s, ws) in weights.iter().enumerate() {
            total += wr * ws * f(r, s);
        }
    }
    total
}

/// `(∂ζ/∂v0, ∂ζ/∂γ)` of the discrete homophily closed form.
pub fn zeta_discrete_gradient(v0: f64, gamma: f64, distances: &[Vec<f64>], weights: &[f64]) -> Result<(f64, f64)> {
    check_homophily_inputs(gamma, distances, weights)?;
    let mu = pair_sum(weights, |r, s| logistic(v0 - gamma * distances[r][s]));
    let dg = -pair_sum(weights, |r, s| distances[r][s] * logistic(v0 - gamma * distances[r][s]));
    Ok((mu, dg))
}

/// Exact `ln Z_N` of the finite linear homophily model with `sizes[r]`
/// nodes of type `r`: every dyad contributes `ln(1 + e^{v0 − γ D̃_rs})`.
pub fn finite_linear_log_partition(v0: f64, gamma: f64, distances: &[Vec<f64>], sizes: &[usize]) -> Result<f64> {
    finite_pair_sum(v0, gamma, distances, sizes, softplus)
}

/// Exact expected number of links `⟨|g|⟩` of the same model.
pub fn finite_linear_expected_links(v0: f64, gamma: f64, distances: &[Vec<f64>], sizes: &[usize]) -> Result<f64> {
    finite_pair_sum(v0, gamma, distances, sizes, logistic)
}

fn finite_pair_sum(v0: f64, gamma: f64, distances: &[Vec<f64>], sizes: &[usize], f: fn(f64) -> f64) -> Result<f64> {
    check_homophily_inputs(gamma, distances, &vec![1.0; sizes.len()])?;
    let mut total = 0.0;
    for (r, &nr) in sizes.iter().enumerate() {
        for (s, &ns) in sizes.iter().enumerate() {
            let pairs = nr as f64 * (ns as f64 - if r == s { 1.0 } else { 0.0 });
            if pairs > 0.0 {
                total += pairs * f(v0 - gamma * distances[r][s]);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::LinearUtility;
    use crate::graph::TypeProfile;
    use crate::potential::log_partition_factorized;
    use std::f64::consts::LN_2;

    fn two_types(off: f64, on: f64) -> Vec<Vec<f64>> {
        vec![vec![on, off], vec![off, on]]
    }

    #[test]
    fn entropy_values() {
        assert!((bernoulli_entropy(0.5).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(bernoulli_entropy(0.0).unwrap(), 0.0);
        assert_eq!(bernoulli_entropy(1.0).unwrap(), 0.0);
        assert!((bernoulli_entropy(0.25).unwrap() - 0.562_335_144_618_808_7).abs() < 1e-12);
        assert!(bernoulli_entropy(1.5).is_err());
        assert!(bernoulli_entropy(-0.1).is_err());
    }

    #[test]
    fn discrete_closed_form() {
        let d = two_types(1.0, 0.0);
        assert!((zeta_discrete_homophily(0.0, 0.0, &d, &[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        let z = zeta_discrete_homophily(0.0, 2.0, &d, &[0.5, 0.5]).unwrap();
        assert!((z - (0.5 * LN_2 + 0.5 * (-2f64).exp().ln_1p())).abs() < 1e-15);
        assert!((z - 0.410_038).abs() < 1e-6);
        assert!(zeta_discrete_homophily(0.0, -1.0, &d, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn pure_entropy() {
        let lm = LimitModel::new(vec![0.3, 0.7], LinearCostLimit::linear(vec![vec![0.0; 2]; 2]).unwrap()).unwrap();
        let res = zeta_isolated(&lm);
        assert!(res.converged);
        assert!((res.zeta - LN_2).abs() < 1e-12);
        assert!(res.maximizers.iter().flatten().all(|x| (x - 0.5).abs() < 1e-10));
    }

    #[test]
    fn linear_limit_matches_closed_form() {
        let d = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]];
        let w = [0.2, 0.5, 0.3];
        for v0 in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            for gamma in [0.0, 0.5, 1.0, 2.0, 4.0] {
                let lm = LimitModel::new(w.to_vec(), LinearCostLimit::homophily(v0, gamma, &d, 0.0).unwrap()).unwrap();
                let res = zeta_isolated(&lm);
                assert!(res.converged, "grad {}", res.grad_norm);
                let closed = zeta_discrete_homophily(v0, gamma, &d, &w).unwrap();
                assert!((res.zeta - closed).abs() < 1e-8);
                for (row, drow) in res.maximizers.iter().zip(&d) {
                    for (m, dist) in row.iter().zip(drow) {
                        assert!((m - logistic(v0 - gamma * dist)).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn numeric_gradients_also_work() {
        let a = vec![vec![0.4, -1.0], vec![-0.7, 1.2]];
        let lin = LinearCostLimit::new(a.clone(), 0.8).unwrap();
        let f = {
            let lin = lin.clone();
            FnLimit::new(2, move |r, y| lin.value(r, y))
        };
        let exact = zeta_isolated(&LimitModel::new(vec![0.5, 0.5], lin).unwrap());
        let numeric = zeta_isolated(&LimitModel::new(vec![0.5, 0.5], f).unwrap());
        assert!(numeric.converged);
        assert!((exact.zeta - numeric.zeta).abs() < 1e-10);
    }

    #[test]
    fn zeta_is_nonnegative_and_monotone() {
        let d = two_types(1.0, 0.0);
        let w = [0.4, 0.6];
        let mut last_by_gamma = f64::INFINITY;
        for k in 0..10 {
            let gamma = k as f64 * 0.5;
            let z = zeta_discrete_homophily(0.3, gamma, &d, &w).unwrap();
            assert!(z >= 0.0 && z <= last_by_gamma);
            last_by_gamma = z;
        }
        let mut last_by_v0 = 0.0;
        for k in 0..10 {
            let z = zeta_discrete_homophily(-5.0 + k as f64, 1.0, &d, &w).unwrap();
            assert!(z > last_by_v0);
            last_by_v0 = z;
        }
    }

    #[test]
    fn finite_model_matches_factorized_partition_function() {
        let d = two_types(1.0, 0.0);
        let profile = TypeProfile::from_sizes(&[2, 2]).unwrap();
        let u = LinearUtility::typed(&profile, 0.5, 1.0, &d).unwrap();
        let exact = log_partition_factorized(&u).unwrap();
        let closed = finite_linear_log_partition(0.5, 1.0, &d, &[2, 2]).unwrap();
        assert!((exact - closed).abs() < 1e-12);
    }

    #[test]
    fn finite_n_converges_to_zeta() {
        let d = two_types(1.0, 0.0);
        let zeta = zeta_discrete_homophily(0.5, 1.0, &d, &[0.5, 0.5]).unwrap();
        let mut last = f64::INFINITY;
        for n in [10usize, 20, 50, 100, 200] {
            let gap = (finite_linear_log_partition(0.5, 1.0, &d, &[n / 2, n / 2]).unwrap() / (n * n) as f64 - zeta).abs();
            assert!(gap < 2.0 / n as f64 && gap < last);
            last = gap;
        }
    }
}
