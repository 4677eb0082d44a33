//! Large-population limits: the variational partition function ζ, its
//! closed forms for homophily models, and the link density and mean
//! neighbour distance derived from it.

mod continuous;
mod density;
mod dilog;
pub mod quadrature;
mod zeta;

pub use continuous::{
    circle_distance, zeta_circle_gradient, zeta_continuous, zeta_continuous_uniform_circle, ContinuousTypes,
};
pub use density::{
    density_and_distance, ContinuousHomophily, DensityDistance, DiscreteHomophily, UniformCircle, ZetaSurface,
    DIFF_STEP, MIN_DENSITY,
};
pub use dilog::{dilog, dilog_neg_exp};
pub use zeta::{
    bernoulli_entropy, finite_linear_expected_links, finite_linear_log_partition, zeta_discrete_gradient,
    zeta_discrete_homophily, zeta_isolated, FnLimit, LimitModel, LimitUtility, LinearCostLimit, ZetaResult,
    ZETA_GRAD_TOL,
};
