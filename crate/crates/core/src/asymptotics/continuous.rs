use crate::asymptotics::dilog::dilog_neg_exp;
use crate::asymptotics::quadrature::{integrate, integrate_2d};
use crate::choice::{logistic, softplus};
use crate::error::{Error, Result};

/// Below this value of `γL/2` the circle formula switches to its Taylor
/// expansion in `γ`, avoiding cancellation between the two dilogarithms.
const SMALL_SPREAD: f64 = 1e-4;

/// A continuum of node types on `[lo, hi]` with density `density` and a
/// distance function between types.
pub struct ContinuousTypes<'a> {
    pub lo: f64,
    pub hi: f64,
    pub density: &'a (dyn Fn(f64) -> f64 + Sync),
    pub distance: &'a (dyn Fn(f64, f64) -> f64 + Sync),
}

impl ContinuousTypes<'_> {
    fn validate(&self, tol: f64) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidParameter(format!("type interval [{}, {}] is empty", self.lo, self.hi)));
        }
        let mass = integrate(|t| (self.density)(t), self.lo, self.hi, tol)?;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("type density integrates to {mass}, not 1")));
        }
        Ok(())
    }

    /// `∫∫ ρ(θ)ρ(θ′) f(D(θ, θ′)) dθ dθ′`.
    pub fn pair_average(&self, f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
        integrate_2d(
            |a, b| {
                let w = (self.density)(a) * (self.density)(b);
                if w == 0.0 {
                    0.0
                } else {
                    w * f((self.distance)(a, b))
                }
            },
            (self.lo, self.hi),
            (self.lo, self.hi),
            tol,
        )
    }
}

/// `ζ = ∫∫ ρ(θ)ρ(θ′) ln(1 + e^{v0 − γ D(θ, θ′)}) dθ dθ′` by nested
/// adaptive quadrature to absolute tolerance `tol`.
pub fn zeta_continuous(v0: f64, gamma: f64, types: &ContinuousTypes<'_>, tol: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} must be non-negative")));
    }
    types.validate(tol)?;
    types.pair_average(|d| softplus(v0 - gamma * d), tol)
}

/// Arc distance on a circle of circumference `l`.
pub fn circle_distance(l: f64) -> impl Fn(f64, f64) -> f64 + Sync {
    move |a, b| {
        let d = (a - b).rem_euclid(l);
        d.min(l - d)
    }
}

fn check_circle(gamma: f64, l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("circumference {l} must be positive")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} must be non-negative")));
    }
    Ok(())
}

/// Uniform types on a circle of circumference `l`: the distance between
/// two random types is uniform on `[0, l/2]`, so
/// `ζ = (2/(lγ)) [Li₂(−e^{v0 − γl/2}) − Li₂(−e^{v0})]`, and
/// `ln(1 + e^{v0})` at `γ = 0`.
pub fn zeta_continuous_uniform_circle(v0: f64, gamma: f64, l: f64) -> Result<f64> {
    check_circle(gamma, l)?;
    let spread = gamma * l / 2.0;
    Ok(if spread < SMALL_SPREAD { circle_taylor(v0, spread) } else { circle_dilog(v0, spread) })
}

fn circle_dilog(v0: f64, spread: f64) -> f64 {
    if v0 - spread >= 0.0 {
        // Li₂(−e^x) = −π²/6 − x²/2 − Li₂(−e^{−x}) moves the large,
        // cancelling part of the difference into an exact polynomial
        v0 - spread / 2.0 - (dilog_neg_exp(spread - v0) - dilog_neg_exp(-v0)) / spread
    } else {
        (dilog_neg_exp(v0 - spread) - dilog_neg_exp(v0)) / spread
    }
}

/// `E[softplus(v0 − u)]` for `u ~ U[0, spread]`, to second order.
fn circle_taylor(v0: f64, spread: f64) -> f64 {
    let s = logistic(v0);
    softplus(v0) - spread / 2.0 * s + spread * spread / 6.0 * s * (1.0 - s)
}

/// `(∂ζ/∂v0, ∂ζ/∂γ)` for the uniform circle. The first is closed form;
/// the second is `−E[t σ(v0 − γt)]`, integrated numerically.
pub fn zeta_circle_gradient(v0: f64, gamma: f64, l: f64, tol: f64) -> Result<(f64, f64)> {
    check_circle(gamma, l)?;
    let half = l / 2.0;
    let spread = gamma * half;
    let mu = if spread < SMALL_SPREAD {
        let s = logistic(v0);
        let ds = s * (1.0 - s);
        s - spread / 2.0 * ds + spread * spread / 6.0 * ds * (1.0 - 2.0 * s)
    } else {
        (softplus(v0) - softplus(v0 - spread)) / spread
    };
    let dg = -integrate(|t| t * logistic(v0 - gamma * t), 0.0, half, tol * half)? / half;
    Ok((mu, dg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn uniform(l: f64) -> impl Fn(f64) -> f64 + Sync {
        move |_| 1.0 / l
    }

    #[test]
    fn circle_closed_form_branches() {
        assert!((zeta_continuous_uniform_circle(0.0, 0.0, 2.0).unwrap() - LN_2).abs() < 1e-15);
        assert!((zeta_continuous_uniform_circle(0.0, 1e-6, 2.0).unwrap() - LN_2).abs() < 1e-6);
        // both forms agree where the switch happens
        for v0 in [-3.0, 0.0, 2.0, 25.0] {
            for spread in [0.5 * SMALL_SPREAD, SMALL_SPREAD, 2.0 * SMALL_SPREAD] {
                assert!((circle_taylor(v0, spread) - circle_dilog(v0, spread)).abs() < 1e-11);
            }
        }
        // reference values at 30 digits
        let z = zeta_continuous_uniform_circle(0.0, 0.99e-4, 2.0).unwrap();
        assert!((z - 0.693_122_430_968_320_3).abs() < 1e-15);
        let z = zeta_continuous_uniform_circle(2.0, 1.01e-4, 2.0).unwrap();
        assert!((z - 2.126_883_530_967_080_3).abs() < 5e-12, "{z}");
        let z = zeta_continuous_uniform_circle(0.0, 1.0, 2.0).unwrap();
        assert!(z > 0.0 && z < LN_2);
        assert!(zeta_continuous_uniform_circle(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn circle_closed_form_matches_one_dimensional_integral() {
        for (v0, gamma, l) in [(0.0, 1.0, 2.0), (1.5, 3.0, 4.0), (-2.0, 0.4, 1.0), (30.0, 2.0, 6.0)] {
            let direct = integrate(|t| softplus(v0 - gamma * t), 0.0, l / 2.0, 1e-13).unwrap() / (l / 2.0);
            assert!((zeta_continuous_uniform_circle(v0, gamma, l).unwrap() - direct).abs() < 1e-11);
        }
    }

    #[test]
    fn circle_closed_form_matches_double_integral() {
        let (density, distance) = (uniform(2.0), circle_distance(2.0));
        let types = ContinuousTypes { lo: 0.0, hi: 2.0, density: &density, distance: &distance };
        let quad = zeta_continuous(0.0, 1.0, &types, 1e-9).unwrap();
        let closed = zeta_continuous_uniform_circle(0.0, 1.0, 2.0).unwrap();
        assert!((quad - closed).abs() < 1e-8);
    }

    #[test]
    fn degenerate_continuous_cases() {
        let density = |t: f64| 2.0 * t;
        let distance = |a: f64, b: f64| (a - b).abs();
        let types = ContinuousTypes { lo: 0.0, hi: 1.0, density: &density, distance: &distance };
        let z = zeta_continuous(0.7, 0.0, &types, 1e-9).unwrap();
        assert!((z - softplus(0.7)).abs() < 1e-8);
        let constant = |_: f64, _: f64| 0.4;
        let types = ContinuousTypes { lo: 0.0, hi: 1.0, density: &density, distance: &constant };
        let z = zeta_continuous(0.7, 2.0, &types, 1e-9).unwrap();
        assert!((z - softplus(0.7 - 0.8)).abs() < 1e-8);
        let bad = |_: f64| 0.5;
        let types = ContinuousTypes { lo: 0.0, hi: 1.0, density: &bad, distance: &distance };
        assert!(zeta_continuous(0.0, 1.0, &types, 1e-9).is_err());
    }

    #[test]
    fn circle_gradient_matches_differences() {
        let (v0, gamma, l) = (0.3, 1.7, 2.0);
        let (mu, dg) = zeta_circle_gradient(v0, gamma, l, 1e-12).unwrap();
        let h = 1e-5;
        let z = |a: f64, b: f64| zeta_continuous_uniform_circle(a, b, l).unwrap();
        assert!((mu - (z(v0 + h, gamma) - z(v0 - h, gamma)) / (2.0 * h)).abs() < 1e-8);
        assert!((dg - (z(v0, gamma + h) - z(v0, gamma - h)) / (2.0 * h)).abs() < 1e-8);
    }
}
