//! Real error function and the damped real part of the complex error function.

use crate::quadrature::integrate_adaptive;
use std::f64::consts::PI;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// `exp(-y^2) * Re erf(x + i y)` for `x > 0`.
///
/// Series of Abramowitz & Stegun 7.1.29 with the `cosh`/`sinh` growth folded
/// into the damping factor so no term overflows.
pub fn erf_re_damped(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return erf(x);
    }
    let y = y.abs();
    let ey = (-y * y).exp();
    let ex = (-x * x).exp();
    let xy = x * y;
    let (sin2, cos2) = (2.0 * xy).sin_cos();

    // (1 - cos 2xy) / (2 pi x), written without cancellation
    let head = if x == 0.0 {
        0.0
    } else {
        let s = xy.sin();
        ex * ey * 2.0 * s * s / (2.0 * PI * x)
    };

    let n_max = (2.0 * (y + 6.5)).ceil() as usize + 2;
    let mut sum = 0.0;
    for n in 1..=n_max {
        let nf = n as f64;
        let quarter = -0.25 * nf * nf;
        let plus = (-(y - 0.5 * nf).powi(2)).exp();
        let minus = (-(y + 0.5 * nf).powi(2)).exp();
        let base = (quarter - y * y).exp();
        let term = 2.0 * x * base - x * cos2 * (plus + minus) + 0.5 * nf * sin2 * (plus - minus);
        sum += term / (nf * nf + 4.0 * x * x);
    }
    ey * erf(x) + head + 2.0 / PI * ex * sum
}

/// Same quantity by direct quadrature along the segment from `x` to `x + i y`:
/// `exp(-y^2) erf(x) + 2/sqrt(pi) * int_0^y exp(s^2 - y^2 - x^2) sin(2 x s) ds`.
pub fn erf_re_damped_contour(x: f64, y: f64) -> f64 {
    let y = y.abs();
    let f = |s: f64| (s * s - y * y - x * x).exp() * (2.0 * x * s).sin();
    (-y * y).exp() * erf(x) + 2.0 / PI.sqrt() * integrate_adaptive(&f, 0.0, y, 1e-17)
}
