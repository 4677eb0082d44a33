use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Power series `Σ z^k / k²`, for `|z| ≤ 1/2`.
fn series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = 0.0;
    for k in 1..200 {
        let add = term / (k * k) as f64;
        sum += add;
        if add.abs() <= f64::EPSILON * 1e-2 * sum.abs() {
            break;
        }
        term *= z;
    }
    sum
}

/// The dilogarithm `Li₂(z) = −∫₀^z ln(1 − t)/t dt` on the non-positive
/// half-line, the only arguments that arise as `Li₂(−e^x)`.
///
/// Uses the power series for `|z| ≤ 1/2`, the Landen identity
/// `Li₂(z) = −Li₂(z/(z−1)) − ½ln²(1−z)` on `[−1, −1/2)`, and the inversion
/// `Li₂(z) = −Li₂(1/z) − π²/6 − ½ln²(−z)` below −1.
pub fn dilog(z: f64) -> Result<f64> {
    if !(z <= 0.0) {
        return Err(Error::InvalidParameter(format!("dilogarithm argument {z} outside (-inf, 0]")));
    }
    Ok(dilog_nonpositive(z))
}

fn dilog_nonpositive(z: f64) -> f64 {
    if z >= -0.5 {
        series(z)
    } else if z >= -1.0 {
        let l = (-z).ln_1p();
        -series(z / (z - 1.0)) - 0.5 * l * l
    } else if z.is_infinite() {
        f64::NEG_INFINITY
    } else {
        let l = (-z).ln();
        -dilog_nonpositive(1.0 / z) - PI * PI / 6.0 - 0.5 * l * l
    }
}

/// `Li₂(−e^x)` without overflow of `e^x` for large `x`.
pub fn dilog_neg_exp(x: f64) -> f64 {
    if x > 0.0 {
        // inversion with 1/z = −e^{−x}
        -dilog_nonpositive(-(-x).exp()) - PI * PI / 6.0 - 0.5 * x * x
    } else {
        dilog_nonpositive(-x.exp())
    }
}
