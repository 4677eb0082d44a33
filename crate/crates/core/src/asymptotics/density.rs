use crate::asymptotics::continuous::{zeta_circle_gradient, zeta_continuous, zeta_continuous_uniform_circle, ContinuousTypes};
use crate::asymptotics::zeta::{zeta_discrete_gradient, zeta_discrete_homophily};
use crate::error::{Error, Result};

/// Step of the central differences used when no analytic derivative is
/// available.
pub const DIFF_STEP: f64 = 1e-5;
/// Link densities below this are treated as the empty-network regime, in
/// which the mean neighbour distance is undefined.
pub const MIN_DENSITY: f64 = 1e-12;

/// A limiting partition function `ζ(v0, γ)` of a homophily model.
pub trait ZetaSurface {
    fn zeta(&self, v0: f64, gamma: f64) -> Result<f64>;

    /// `(∂ζ/∂v0, ∂ζ/∂γ)` when known in closed form.
    fn analytic_gradient(&self, _v0: f64, _gamma: f64) -> Option<Result<(f64, f64)>> {
        None
    }
}

/// Finitely many types with distance matrix `D̃` and weights `w`.
#[derive(Debug, Clone)]
pub struct DiscreteHomophily {
    pub distances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ZetaSurface for DiscreteHomophily {
    fn zeta(&self, v0: f64, gamma: f64) -> Result<f64> {
        zeta_discrete_homophily(v0, gamma, &self.distances, &self.weights)
    }
    fn analytic_gradient(&self, v0: f64, gamma: f64) -> Option<Result<(f64, f64)>> {
        Some(zeta_discrete_gradient(v0, gamma, &self.distances, &self.weights))
    }
}

/// Uniform types on a circle of the given circumference.
#[derive(Debug, Clone, Copy)]
pub struct UniformCircle {
    pub circumference: f64,
}

impl ZetaSurface for UniformCircle {
    fn zeta(&self, v0: f64, gamma: f64) -> Result<f64> {
        zeta_continuous_uniform_circle(v0, gamma, self.circumference)
    }
    fn analytic_gradient(&self, v0: f64, gamma: f64) -> Option<Result<(f64, f64)>> {
        Some(zeta_circle_gradient(v0, gamma, self.circumference, 1e-13))
    }
}

/// A general continuum of types, integrated numerically.
pub struct ContinuousHomophily<'a> {
    pub types: ContinuousTypes<'a>,
    pub tol: f64,
}

impl ZetaSurface for ContinuousHomophily<'_> {
    fn zeta(&self, v0: f64, gamma: f64) -> Result<f64> {
        zeta_continuous(v0, gamma, &self.types, self.tol)
    }
}

impl<F: Fn(f64, f64) -> Result<f64>> ZetaSurface for F {
    fn zeta(&self, v0: f64, gamma: f64) -> Result<f64> {
        self(v0, gamma)
    }
}

/// Link density and mean distance between linked types.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDistance {
    /// `μ = ∂ζ/∂v0`.
    pub mu: f64,
    /// `η = −μ⁻¹ ∂ζ/∂γ`.
    pub eta: f64,
}

/// Richardson-extrapolated central difference of a one-dimensional slice.
fn derivative(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let coarse = central(2.0 * DIFF_STEP)?;
    let fine = central(DIFF_STEP)?;
    Ok(fine + (fine - coarse) / 3.0)
}

/// `μ = ∂ζ/∂v0` and `η = −μ⁻¹ ∂ζ/∂γ`, from analytic derivatives when the
/// surface provides them and Richardson-extrapolated central differences
/// otherwise. Near `γ = 0` the γ-derivative uses a second-order forward
/// stencil, since ζ is not defined for negative γ.
pub fn density_and_distance(surface: &impl ZetaSurface, v0: f64, gamma: f64) -> Result<DensityDistance> {
    let (mu, dg) = match surface.analytic_gradient(v0, gamma) {
        Some(grad) => grad?,
        None => {
            let mu = derivative(|a| surface.zeta(a, gamma), v0)?;
            let dg = if gamma >= 2.0 * DIFF_STEP {
                derivative(|b| surface.zeta(v0, b), gamma)?
            } else {
                // second-order forward difference
                let f0 = surface.zeta(v0, gamma)?;
                let f1 = surface.zeta(v0, gamma + DIFF_STEP)?;
                let f2 = surface.zeta(v0, gamma + 2.0 * DIFF_STEP)?;
                (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * DIFF_STEP)
            };
            (mu, dg)
        }
    };
    if !(mu >= MIN_DENSITY) {
        return Err(Error::EmptyNetworkRegime(mu));
    }
    Ok(DensityDistance { mu, eta: -dg / mu })
}
