//! Scalar special functions: log-gamma, the standard normal law, Kummer's
//! confluent hypergeometric function and the scaled Student-t density.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Series cap and relative stopping threshold for `kummer_1f1`.
pub const KUMMER_MAX_TERMS: usize = 500;
const KUMMER_REL_TOL: f64 = 1e-16;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let mut a = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn std_normal_pdf(w: f64) -> f64 {
    (-0.5 * w * w - LN_SQRT_2PI).exp()
}

pub fn ln_std_normal_pdf(w: f64) -> f64 {
    -0.5 * w * w - LN_SQRT_2PI
}

pub fn std_normal_cdf(w: f64) -> f64 {
    0.5 * libm::erfc(-w / SQRT_2)
}

/// `ln Φ(w)`, finite for every finite `w` (no underflow in the far left tail).
pub fn ln_std_normal_cdf(w: f64) -> f64 {
    if w > -30.0 {
        std_normal_cdf(w).ln()
    } else {
        ln_std_normal_pdf(w) + mills_ratio(-w).ln()
    }
}

/// Mills ratio `(1 - Φ(x)) / φ(x)` for `x` well into the right tail, by
/// Laplace's continued fraction `1/(x+ 1/(x+ 2/(x+ 3/(x+ ...))))`.
fn mills_ratio(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..10_000 {
        let a = if k == 1 { 1.0 } else { (k - 1) as f64 };
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// Kummer's confluent hypergeometric function `₁F₁(a; b; x)`.
///
/// Negative arguments go through Kummer's transformation
/// `₁F₁(a; b; x) = eˣ ₁F₁(b − a; b; −x)`, so for `b > a` every series term is
/// positive and the alternating-series cancellation never happens.
pub fn kummer_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 && b == b.floor() {
        return Err(Error::domain("kummer_1f1", format!("b = {b} is a non-positive integer")));
    }
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(Error::domain("kummer_1f1", "non-finite argument"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < 0.0 {
        Ok(x.exp() * kummer_series(b - a, b, -x)?)
    } else {
        kummer_series(a, b, x)
    }
}

fn kummer_series(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..KUMMER_MAX_TERMS {
        let k = k as f64;
        term *= (a + k) / (b + k) * x / (k + 1.0);
        sum += term;
        if !sum.is_finite() {
            break;
        }
        if term == 0.0 || term.abs() <= KUMMER_REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: "kummer_1f1 series",
        iterations: KUMMER_MAX_TERMS,
    })
}

/// Log of the normalizer `Γ((m+1)/2) / (√π Γ(m/2))` of `q_m`.
pub(crate) fn ln_student_norm(m: f64) -> f64 {
    ln_gamma_unchecked(0.5 * (m + 1.0)) - ln_gamma_unchecked(0.5 * m) - 0.5 * LN_PI
}

/// Scaled Student-t density `q_m(z) = Γ((m+1)/2)/(√π Γ(m/2)) (1+z²)^{−(m+1)/2}`,
/// whose variance is `1/(m − 2)` rather than `m/(m − 2)`.
pub fn student_scaled_pdf(m: f64, z: f64) -> Result<f64> {
    Ok(ln_student_scaled_pdf(m, z)?.exp())
}

pub fn ln_student_scaled_pdf(m: f64, z: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::domain("student_scaled_pdf", format!("m = {m} must be positive")));
    }
    Ok(ln_student_norm(m) - 0.5 * (m + 1.0) * ln_one_plus_sq(z))
}

/// `ln(1 + z²)` without overflow for huge `|z|`.
pub(crate) fn ln_one_plus_sq(z: f64) -> f64 {
    let a = z.abs();
    if a > 1e150 {
        2.0 * a.ln()
    } else {
        (a * a).ln_1p()
    }
}
