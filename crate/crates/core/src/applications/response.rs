use crate::error::Result;
use crate::graph::Network;
use crate::potential::GibbsTable;

/// Number of mutually linked pairs, a perturbation rewarding reciprocity.
pub fn reciprocity(g: Network) -> f64 {
    g.reciprocated_pairs() as f64
}

/// `d⟨A⟩/dε` at `ε = 0` for `Φ = Φ₀ + εf`: the covariance
/// `⟨A f⟩₀ − ⟨A⟩₀⟨f⟩₀` under the unperturbed measure.
pub fn linear_response(gt0: &GibbsTable, f: impl Fn(Network) -> f64, a: impl Fn(Network) -> f64) -> f64 {
    let space = gt0.space();
    let (mut ea, mut ef) = (0.0, 0.0);
    for (g, p) in space.iter().zip(gt0.pi()) {
        ea += p * a(g);
        ef += p * f(g);
    }
    // centred form avoids cancellation between ⟨Af⟩ and ⟨A⟩⟨f⟩
    space.iter().zip(gt0.pi()).map(|(g, p)| p * (a(g) - ea) * (f(g) - ef)).sum()
}

/// The Gibbs table of `Φ₀ + εf`.
pub fn perturbed_table(gt0: &GibbsTable, f: impl Fn(Network) -> f64, epsilon: f64) -> Result<GibbsTable> {
    let space = gt0.space();
    let phi = space.iter().zip(gt0.phi()).map(|(g, phi)| phi + epsilon * f(g)).collect();
    GibbsTable::from_potential(gt0.n_nodes(), phi)
}

/// Central difference `(⟨A⟩_{+h} − ⟨A⟩_{−h}) / 2h` of the perturbed
/// ensemble average.
pub fn finite_difference_response(
    gt0: &GibbsTable,
    f: impl Fn(Network) -> f64,
    a: impl Fn(Network) -> f64,
    h: f64,
) -> Result<f64> {
    let mean = |t: &GibbsTable| t.space().iter().zip(t.pi()).map(|(g, p)| p * a(g)).sum::<f64>();
    let up = perturbed_table(gt0, &f, h)?;
    let down = perturbed_table(gt0, &f, -h)?;
    Ok((mean(&up) - mean(&down)) / (2.0 * h))
}
