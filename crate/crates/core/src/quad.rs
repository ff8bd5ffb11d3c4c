//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, bisecting the panel with the largest error
/// estimate until the total error meets `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integrate", "interval endpoints must be finite"));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut panels = vec![kronrod15(&f, a, b)];
    let mut evaluations = 15;
    loop {
        let (value, error) = panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() {
            return Err(Error::domain("integrate", "integrand produced a non-finite value"));
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Estimate { value, error, evaluations });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                iterations: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel cannot be split further in double precision
            return Ok(Estimate { value, error, evaluations });
        }
        panels.push(kronrod15(&f, p.a, mid));
        panels.push(kronrod15(&f, mid, p.b));
        evaluations += 30;
    }
}
