use crate::asymptotics::{bernoulli_entropy, LimitModel, LinearCostLimit};
use crate::choice::{logistic, ConvexCostUtility, LinearUtility};
use crate::error::{Error, Result};
use crate::graph::TypeProfile;
use crate::potential::GibbsTable;

/// Bracket width at which the per-type bisection stops.
pub const TRADE_BISECTION_WIDTH: f64 = 1e-14;

/// Trade routes between countries: a route from a type-`r` node to a
/// type-`s` node is worth `v0 − γ D̃_rs`, and each node pays
/// `(c/N) · (out-degree)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeModel {
    pub v0: f64,
    pub gamma: f64,
    pub c: f64,
    pub distances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TradeModel {
    pub fn new(v0: f64, gamma: f64, c: f64, distances: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || distances.len() != k || distances.iter().any(|row| row.len() != k) {
            return Err(Error::SizeMismatch(format!("distance matrix must be {k}x{k}")));
        }
        if !(c >= 0.0) || !(gamma >= 0.0) {
            return Err(Error::InvalidParameter("cost and gamma must be non-negative".into()));
        }
        if distances.iter().flatten().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidParameter("distances must be non-negative".into()));
        }
        TypeProfile::from_weights(weights.clone())?;
        Ok(Self { v0, gamma, c, distances, weights })
    }

    pub fn n_types(&self) -> usize {
        self.weights.len()
    }

    fn link_value(&self, r: usize, s: usize) -> f64 {
        self.v0 - self.gamma * self.distances[r][s]
    }

    /// `2c Σ_q w_q σ(v0 − γD̃_rq − b)`, decreasing in `b` with range
    /// inside `(0, 2c)`.
    fn rhs(&self, r: usize, b: f64) -> f64 {
        2.0 * self.c * self.weights.iter().enumerate().map(|(q, w)| w * logistic(self.link_value(r, q) - b)).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeSolution {
    /// Per-type shadow cost `B_r`.
    pub b: Vec<f64>,
    /// `A_r = e^{B_r}`.
    pub a: Vec<f64>,
    /// Shares `T_rs = σ(v0 − γD̃_rs − B_r)`.
    pub t: Vec<Vec<f64>>,
    /// `|B_r − 2c Σ_q w_q T_rq|`.
    pub residuals: Vec<f64>,
}

/// Solves `B_r = 2c Σ_q w_q [1 + e^{B_r} e^{γD̃_rq − v0}]^{-1}` by
/// bisection on `[0, 2c]` for each type.
pub fn trade_fixed_point(tm: &TradeModel) -> TradeSolution {
    let k = tm.n_types();
    let b: Vec<f64> = (0..k)
        .map(|r| {
            let (mut lo, mut hi) = (0.0f64, 2.0 * tm.c);
            while hi - lo > TRADE_BISECTION_WIDTH {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if tm.rhs(r, mid) > mid {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let t: Vec<Vec<f64>> = (0..k).map(|r| (0..k).map(|s| logistic(tm.link_value(r, s) - b[r])).collect()).collect();
    let residuals = (0..k)
        .map(|r| (b[r] - 2.0 * tm.c * tm.weights.iter().zip(&t[r]).map(|(w, x)| w * x).sum::<f64>()).abs())
        .collect();
    TradeSolution { a: b.iter().map(|x| x.exp()).collect(), b, t, residuals }
}

/// `ζ_trade = Σ_r w_r [Σ_s w_s (H(x_rs) + (v0 − γD̃_rs) x_rs) − c (Σ_q w_q x_rq)²]`
/// evaluated at the fixed-point shares.
pub fn zeta_trade(tm: &TradeModel) -> Result<f64> {
    let sol = trade_fixed_point(tm);
    let mut zeta = 0.0;
    for (r, wr) in tm.weights.iter().enumerate() {
        let mut inner = 0.0;
        let mut load = 0.0;
        for (s, ws) in tm.weights.iter().enumerate() {
            let x = sol.t[r][s];
            inner += ws * (bernoulli_entropy(x)? + tm.link_value(r, s) * x);
            load += ws * x;
        }
        zeta += wr * (inner - tm.c * load * load);
    }
    Ok(zeta)
}

/// The asymptotic trade-share matrix `T_rs`.
pub fn trade_shares_asymptotic(tm: &TradeModel) -> Vec<Vec<f64>> {
    trade_fixed_point(tm).t
}

/// The same model as a general limit model, for the variational solver.
pub fn trade_limit_model(tm: &TradeModel) -> Result<LimitModel> {
    LimitModel::new(tm.weights.clone(), LinearCostLimit::homophily(tm.v0, tm.gamma, &tm.distances, tm.c)?)
}

/// Finite-N trade utility `V_i = Σ_j (v0 − γD̃) g_ij − (c/N)|N_i|²` for the
/// given type assignment.
pub fn finite_trade_utility(tm: &TradeModel, profile: &TypeProfile) -> Result<ConvexCostUtility> {
    if profile.n_types() != tm.n_types() {
        return Err(Error::SizeMismatch(format!(
            "profile has {} types, model has {}",
            profile.n_types(),
            tm.n_types()
        )));
    }
    Ok(ConvexCostUtility::new(LinearUtility::typed(profile, tm.v0, tm.gamma, &tm.distances)?, tm.c))
}

/// Expected fraction of type-`r` → type-`s` dyads that carry a link under
/// a Gibbs measure.
pub fn typed_link_shares(table: &GibbsTable, profile: &TypeProfile) -> Result<Vec<Vec<f64>>> {
    let n = table.n_nodes();
    let assignment =
        profile.assignment().ok_or_else(|| Error::InvalidParameter("link shares need a finite type assignment".into()))?;
    if assignment.len() != n {
        return Err(Error::SizeMismatch(format!("profile covers {} nodes, network has {n}", assignment.len())));
    }
    let k = profile.n_types();
    let mut pairs = vec![vec![0.0; k]; k];
    let mut links = vec![vec![0.0; k]; k];
    let space = table.space();
    for d in space.dyads() {
        pairs[assignment[d.i]][assignment[d.j]] += 1.0;
    }
    for (g, p) in space.iter().zip(table.pi()) {
        for d in g.links() {
            links[assignment[d.i]][assignment[d.j]] += p;
        }
    }
    Ok(links
        .iter()
        .zip(&pairs)
        .map(|(l, n)| l.iter().zip(n).map(|(l, n)| if *n > 0.0 { l / n } else { f64::NAN }).collect())
        .collect())
}
