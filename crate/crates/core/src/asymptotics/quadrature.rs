//! Adaptive Gauss–Kronrod (7/15-point) quadrature.

use crate::error::{Error, Result};

/// Default absolute tolerance of the ζ integrals.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Hard cap on the number of subintervals of one adaptive integral.
pub const MAX_SUBINTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights at the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// `(Kronrod estimate, |Kronrod − Gauss|)` on `[a, b]`.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive integral of `f` over `[a, b]` to absolute tolerance
/// `tol`: the subinterval with the largest error estimate is bisected
/// until the summed estimate falls below `tol`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("integration bounds [{a}, {b}] must be finite")));
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let (value, err) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, value, err)];
    let mut total_err = err;
    while total_err > tol {
        if intervals.len() >= MAX_SUBINTERVALS || !total_err.is_finite() {
            return Err(Error::QuadratureFailure { error: total_err, tolerance: tol });
        }
        let worst = (0..intervals.len()).max_by(|&i, &j| intervals[i].3.total_cmp(&intervals[j].3)).expect("nonempty");
        let (lo, hi, _, e) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::QuadratureFailure { error: total_err, tolerance: tol });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total_err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        // guard against drift of the running sum
        if total_err <= tol {
            total_err = intervals.iter().map(|x| x.3).sum();
        }
    }
    Ok(intervals.iter().map(|x| x.2).sum())
}

/// Nested adaptive integral of `f(x, y)` over `[a, b] × [c, d]`.
pub fn integrate_2d(f: impl Fn(f64, f64) -> f64, (a, b): (f64, f64), (c, d): (f64, f64), tol: f64) -> Result<f64> {
    let inner_tol = 1e-2 * tol / (b - a).abs().max(1.0);
    let mut failure = None;
    let outer = integrate(
        |x| match integrate(|y| f(x, y), c, d, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => outer,
    }
}
