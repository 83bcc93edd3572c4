//! Small complex helpers: stable `1 - e^{-z}`, divided differences of `exp`,
//! and the phi functions used by the exponential-fitted quadrature.

use num_complex::Complex64 as C64;

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let (a, b) = (z.re, z.im);
    let s = (0.5 * b).sin();
    C64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
}

/// `1 - e^{-z}`.
pub fn one_minus_exp_neg(z: C64) -> C64 {
    -expm1(-z)
}

/// `(e^z - 1) / z`, entire.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < 0.5 {
        series(z, 1)
    } else {
        expm1(z) / z
    }
}

/// `(e^z - 1 - z) / z^2`, entire.
pub fn phi2(z: C64) -> C64 {
    if z.norm() < 0.5 {
        series(z, 2)
    } else {
        (phi1(z) - 1.0) / z
    }
}

/// `sum_n z^n / (n + shift)!`
fn series(z: C64, shift: u32) -> C64 {
    let mut fact = 1.0;
    for j in 2..=shift {
        fact *= j as f64;
    }
    let mut term = C64::new(1.0 / fact, 0.0);
    let mut acc = term;
    for n in 1..24 {
        term = term * z / (n + shift) as f64;
        acc += term;
    }
    acc
}

/// `int_0^1 e^{a(1-v) + b v} dv = (e^a - e^b)/(a - b)`, evaluated from the
/// endpoint with the smaller real part so no growing exponential appears.
pub fn exp_divided(a: C64, b: C64) -> C64 {
    if (a - b).re <= 0.0 {
        b.exp() * phi1(a - b)
    } else {
        a.exp() * phi1(b - a)
    }
}
