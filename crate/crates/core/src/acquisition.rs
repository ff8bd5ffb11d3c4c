//! The `α_p(x) = E[((y − y*)₊)^p]` acquisition family, its PI (`p = 0`) and
//! EI (`p = 1`) special cases, GP-UCB, and uniform dispatch over policies.
//!
//! Every `α_p` evaluation is carried out in log space first (`ln_alpha_*`),
//! since the values underflow long before the candidates stop being
//! distinguishable. The Gaussian evaluation picks one of three routes by the
//! standardized incumbent `z* = (y* − μ)/σ`:
//!
//! * `−8 ≤ z* ≤ 1`: the closed form in Kummer's `₁F₁`;
//! * `z* > 1`: the closed form loses `~z*²/2` nats to cancellation between
//!   its two terms, so `∫₀^∞ tᵖ e^{−z*t − t²/2} dt` is computed instead by
//!   backward recurrence in `p`, normalized with
//!   `Σₖ I_{f+2k} / (2ᵏ k!) = Γ(f+1) z^{−f−1}`;
//! * `z* < −8`: adaptive quadrature around the Gaussian bulk.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GaussianPrediction;
use crate::quad::{self, Tolerance};
use crate::specfun::{
    kummer_1f1, ln_gamma_unchecked, ln_one_plus_sq, ln_std_normal_cdf, ln_std_normal_pdf, ln_student_norm,
    std_normal_cdf, std_normal_pdf,
};
use crate::tp::StudentPrediction;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this `z*` the closed form is abandoned for quadrature.
const CLOSED_FORM_LOWER: f64 = -8.0;
/// Above this `z*` the backward recurrence takes over.
const CLOSED_FORM_UPPER: f64 = 1.0;
/// Beyond `|z*|` of this size the predictive spread is negligible.
const DEGENERATE_Z: f64 = 1e8;

fn default_epsilon() -> f64 {
    0.1
}
fn default_ucb_nu() -> f64 {
    1.0
}
fn default_ucb_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcquisitionPolicy {
    AlphaP {
        p: f64,
    },
    Pi,
    Ei,
    EpsilonEi {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Ucb {
        #[serde(default = "default_ucb_nu")]
        nu: f64,
        #[serde(default = "default_ucb_delta")]
        delta: f64,
    },
    RandomSearch,
}

impl AcquisitionPolicy {
    pub fn epsilon_ei() -> Self {
        AcquisitionPolicy::EpsilonEi { epsilon: default_epsilon() }
    }

    pub fn ucb() -> Self {
        AcquisitionPolicy::Ucb { nu: default_ucb_nu(), delta: default_ucb_delta() }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AcquisitionPolicy::AlphaP { p } if !(p >= 0.0 && p.is_finite()) => {
                Err(Error::Config(format!("alpha_p requires p >= 0, got {p}")))
            }
            AcquisitionPolicy::EpsilonEi { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                Err(Error::Config(format!("epsilon must lie in [0, 1], got {epsilon}")))
            }
            AcquisitionPolicy::Ucb { nu, delta } if !(nu >= 0.0 && delta > 0.0 && delta < 1.0) => {
                Err(Error::Config(format!("ucb requires nu >= 0 and delta in (0, 1), got {nu}, {delta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AcquisitionPolicy::AlphaP { .. } => "alpha_p",
            AcquisitionPolicy::Pi => "pi",
            AcquisitionPolicy::Ei => "ei",
            AcquisitionPolicy::EpsilonEi { .. } => "epsilon_ei",
            AcquisitionPolicy::Ucb { .. } => "ucb",
            AcquisitionPolicy::RandomSearch => "random_search",
        }
    }

    /// Parameter column for result tables (`p`, `ε`, or `ν;δ`).
    pub fn param_label(&self) -> String {
        match self {
            AcquisitionPolicy::AlphaP { p } => format!("{p}"),
            AcquisitionPolicy::EpsilonEi { epsilon } => format!("{epsilon}"),
            AcquisitionPolicy::Ucb { nu, delta } => format!("{nu};{delta}"),
            _ => String::new(),
        }
    }

    /// The `p` this policy scores with, if it belongs to the `α_p` family.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            AcquisitionPolicy::AlphaP { p } => Some(p),
            AcquisitionPolicy::Ei | AcquisitionPolicy::EpsilonEi { .. } => Some(1.0),
            AcquisitionPolicy::Pi => Some(0.0),
            _ => None,
        }
    }
}

impl std::fmt::Display for AcquisitionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let label = self.param_label();
        if label.is_empty() {
            write!(f, "{}", self.kind())
        } else {
            write!(f, "{}({})", self.kind(), label)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionContext {
    /// Best observed value `y*`.
    pub incumbent: f64,
    /// 1-based BO step, used by UCB.
    pub step: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Gaussian(GaussianPrediction),
    Student(StudentPrediction),
}

/// Exponent applied to `α_p / σᵖ` when reporting dimensionless values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootConvention {
    /// `min(1/p, 1)`, finite at `p = 0`.
    MinInverse,
    /// `1/p`; undefined at `p = 0`.
    Inverse,
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::domain("alpha_p", format!("p = {p} must be finite and non-negative")));
    }
    Ok(())
}

/// `ln((μ − y*)₊ᵖ)` for a point with no predictive spread; `p = 0` gives the
/// indicator of strict improvement.
fn ln_degenerate(gain: f64, p: f64) -> f64 {
    if gain > 0.0 {
        if p == 0.0 { 0.0 } else { p * gain.ln() }
    } else {
        f64::NEG_INFINITY
    }
}

/// `ln α_p` for a Gaussian predictive distribution.
pub fn ln_alpha_p_gaussian(pred: &GaussianPrediction, y_star: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(pred.sigma >= 0.0) || !pred.mu.is_finite() || !y_star.is_finite() {
        return Err(Error::domain("alpha_p_gaussian", format!("invalid prediction {pred:?} / y* = {y_star}")));
    }
    let gain = pred.mu - y_star;
    let z = -gain / pred.sigma;
    if pred.sigma == 0.0 || !z.is_finite() || z < -DEGENERATE_Z {
        return Ok(ln_degenerate(gain, p));
    }
    let scale = if p == 0.0 { 0.0 } else { p * pred.sigma.ln() };
    Ok(scale + ln_standard_tail_moment(z, p)?)
}

/// `α_p(x) = σᵖ 2^{p/2−1}/√π [−√2 z* Γ(p/2+1) ₁F₁((1−p)/2; 3/2; −z*²/2)
///  + Γ((p+1)/2) ₁F₁(−p/2; 1/2; −z*²/2)]`.
pub fn alpha_p_gaussian(pred: &GaussianPrediction, y_star: f64, p: f64) -> Result<f64> {
    Ok(ln_alpha_p_gaussian(pred, y_star, p)?.exp())
}

/// `ln ∫_{z*}^∞ (z − z*)ᵖ φ(z) dz`.
pub fn ln_standard_tail_moment(z_star: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 0.0 {
        // the tail mass itself; the generic branches can round it above 1
        return Ok(ln_std_normal_cdf(-z_star));
    }
    if z_star > CLOSED_FORM_UPPER {
        Ok(ln_std_normal_pdf(z_star) + ln_gaussian_laplace_moment(z_star, p))
    } else if z_star >= CLOSED_FORM_LOWER {
        closed_form_bracket(z_star, p).map(|b| b.ln() + (0.5 * p - 1.0) * LN_2 - 0.5 * LN_PI)
    } else {
        ln_gaussian_left_quadrature(z_star, p)
    }
}

/// The bracketed closed-form factor, valid in the cancellation-free window.
fn closed_form_bracket(z_star: f64, p: f64) -> Result<f64> {
    let x = -0.5 * z_star * z_star;
    let odd = kummer_1f1(0.5 * (1.0 - p), 1.5, x)?;
    let even = kummer_1f1(-0.5 * p, 0.5, x)?;
    let bracket = -SQRT_2 * z_star * ln_gamma_unchecked(0.5 * p + 1.0).exp() * odd
        + ln_gamma_unchecked(0.5 * (p + 1.0)).exp() * even;
    if bracket > 0.0 && bracket.is_finite() {
        Ok(bracket)
    } else {
        Err(Error::domain("alpha_p_gaussian", format!("closed form degenerate at z* = {z_star}, p = {p}")))
    }
}

/// `ln I_p(z)` with `I_p(z) = ∫₀^∞ tᵖ e^{−zt − t²/2} dt`, for `z` bounded
/// away from zero.
///
/// `I_{q+1} = q I_{q−1} − z I_q` is unstable upward but every term of the
/// downward form `I_{q−1} = (I_{q+1} + z I_q)/q` is positive, so the
/// recurrence is started far above `p` from an arbitrary seed (Miller) and
/// normalized by the sum rule above.
pub fn ln_gaussian_laplace_moment(z: f64, p: f64) -> f64 {
    debug_assert!(z >= 0.5);
    let frac = p.fract();
    let whole = p.floor() as usize;
    let k_norm = ((45.0 / z).powi(2) * 0.5).ceil() as usize + 8;
    let mut j_top = (2 * k_norm).max(whole + 40);
    j_top += j_top % 2;

    let mut upper = 0.0f64; // y_{j+1}
    let mut cur = 1.0f64; // y_j
    let mut ln_y = 0.0f64;
    let k_top = j_top / 2;
    let mut w = 1.0f64;
    let mut ln_w = -(k_top as f64) * LN_2 - ln_gamma_unchecked(k_top as f64 + 1.0);
    let mut acc = cur * w;
    let mut ln_sum = f64::NEG_INFINITY;
    let mut captured = if whole == j_top { Some(ln_y) } else { None };

    let flush = |acc: &mut f64, ln_sum: &mut f64, frame: f64| {
        if *acc > 0.0 {
            *ln_sum = log_add_exp(*ln_sum, acc.ln() + frame);
        }
        *acc = 0.0;
    };

    for j in (1..=j_top).rev() {
        let next = (upper + z * cur) / (frac + j as f64);
        upper = cur;
        cur = next;
        let idx = j - 1;
        if idx == whole {
            captured = Some(cur.ln() + ln_y);
        }
        if idx % 2 == 0 {
            w *= 2.0 * ((idx / 2) as f64 + 1.0);
            acc += cur * w;
        }
        if !(1e-150..=1e150).contains(&cur) {
            flush(&mut acc, &mut ln_sum, ln_y + ln_w);
            let c = cur.ln();
            ln_y += c;
            upper /= cur;
            cur = 1.0;
        }
        if w > 1e150 {
            flush(&mut acc, &mut ln_sum, ln_y + ln_w);
            ln_w += w.ln();
            w = 1.0;
        }
    }
    flush(&mut acc, &mut ln_sum, ln_y + ln_w);
    let ln_norm = ln_gamma_unchecked(frac + 1.0) - (frac + 1.0) * z.ln();
    captured.unwrap_or(f64::NEG_INFINITY) + ln_norm - ln_sum
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Far left tail (`z* < −8`): substitute `z = z* + |z*|(1 + v/|z*|)` so the
/// integrand `(1 + v/|z*|)ᵖ φ(v)` is smooth and concentrated near `v = 0`.
fn ln_gaussian_left_quadrature(z_star: f64, p: f64) -> Result<f64> {
    let a = -z_star;
    let peak = 0.5 * (-a + (a * a + 4.0 * p).sqrt());
    let ln_h = |v: f64| p * (v / a).ln_1p() - 0.5 * v * v;
    let c = ln_h(peak);
    let lo = z_star.max(-40.0);
    let hi = peak + 40.0;
    let tol = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 500 };
    let est = quad::integrate(|v| (ln_h(v) - c).exp(), lo, hi, tol)?;
    Ok(p * a.ln() + c + est.value.ln() - LN_SQRT_2PI)
}

/// Dimensionless `[α_p/σᵖ]^{min(1/p, 1)}` as a function of `w = (μ − y*)/σ`.
pub fn alpha_p_dimensionless(w: f64, p: f64) -> Result<f64> {
    alpha_p_dimensionless_with(w, p, RootConvention::MinInverse)
}

pub fn alpha_p_dimensionless_with(w: f64, p: f64, convention: RootConvention) -> Result<f64> {
    check_p(p)?;
    let exponent = match convention {
        RootConvention::MinInverse => if p <= 1.0 { 1.0 } else { 1.0 / p },
        RootConvention::Inverse => {
            if p == 0.0 {
                return Err(Error::domain("alpha_p_dimensionless", "1/p root undefined at p = 0"));
            }
            1.0 / p
        }
    };
    Ok((exponent * ln_standard_tail_moment(-w, p)?).exp())
}

/// Effective exponent for a Student predictive law with `dof` degrees of
/// freedom: `min(p, ⌊dof⌋)`, stepped below `dof` when `dof` is an integer
/// because the moment diverges at `p = dof`.
pub fn clamp_student_exponent(p: f64, dof: f64) -> f64 {
    let capped = p.min(dof.floor());
    if capped >= dof { dof - 1.0 } else { capped }
}

/// `ln α_p` for a Student-t predictive law (after the exponent clamp).
pub fn ln_alpha_p_student(pred: &StudentPrediction, y_star: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(pred.dof > 2.0) || !(pred.v >= 0.0) || !pred.mu.is_finite() || !y_star.is_finite() {
        return Err(Error::domain("alpha_p_student", format!("invalid prediction {pred:?} / y* = {y_star}")));
    }
    let p = clamp_student_exponent(p, pred.dof);
    let gain = pred.mu - y_star;
    let root_v = pred.v.sqrt();
    let z = -gain / root_v;
    if pred.v == 0.0 || !z.is_finite() || z < -DEGENERATE_Z {
        return Ok(ln_degenerate(gain, p));
    }
    let scale = if p == 0.0 { 0.0 } else { p * root_v.ln() };
    Ok(scale + ln_student_tail_moment(z, p, pred.dof)?)
}

/// `α_p = V^{p/2} ∫_{z*}^∞ (z − z*)ᵖ q_dof(z) dz`.
pub fn alpha_p_student(pred: &StudentPrediction, y_star: f64, p: f64) -> Result<f64> {
    Ok(ln_alpha_p_student(pred, y_star, p)?.exp())
}

/// An integrand on `[lo, hi]`.
type Piece<'a> = (Box<dyn Fn(f64) -> f64 + 'a>, f64, f64);

/// `ln ∫₀^∞ tᵖ q_m(t + z) dt` for `p < m`.
///
/// Semi-infinite pieces use `t = t₀ + s((1 − u)^{−1/κ} − 1)` with
/// `κ = min(1, m − p)`, which turns the `t^{p−m−1}` tail into a bounded
/// integrand on `u ∈ [0, 1)`; `u = w²` then removes the `tᵖ` endpoint
/// singularity at the origin.
pub fn ln_student_tail_moment(z: f64, p: f64, m: f64) -> Result<f64> {
    check_p(p)?;
    if !(m > p) {
        return Err(Error::domain("alpha_p_student", format!("moment p = {p} diverges for dof {m}")));
    }
    let ln_norm = ln_student_norm(m);
    let half_m1 = 0.5 * (m + 1.0);
    // ln of tᵖ q_m(t + z) given t and ln t
    let ln_f = |t: f64, ln_t: f64| -> f64 {
        let power = if p == 0.0 { 0.0 } else { p * ln_t };
        let x = t + z;
        let ln_sq = if ln_t > 300.0 { 2.0 * ln_t } else { ln_one_plus_sq(x) };
        power + ln_norm - half_m1 * ln_sq
    };
    let kappa = (m - p).min(1.0);
    let tol = Tolerance { abs: 0.0, rel: 1e-10, max_intervals: 1000 };

    let mapped = |t0: f64, s: f64| {
        let ln_s = s.ln();
        let ln_kappa = kappa.ln();
        move |w: f64| -> f64 {
            let u = w * w;
            let big_l = -(-u).ln_1p();
            let a = big_l / kappa;
            let ln_v = ln_s + if a > 30.0 { a } else { a.exp_m1().ln() };
            let (t, ln_t) = if t0 == 0.0 {
                (ln_v.exp(), ln_v)
            } else {
                let ln_t = log_add_exp(t0.ln(), ln_v);
                (ln_t.exp(), ln_t)
            };
            let ln_jac = ln_s - ln_kappa + big_l * (1.0 / kappa + 1.0) + (2.0 * w).ln();
            ln_f(t, ln_t) + ln_jac
        }
    };

    let pieces: Vec<Piece<'_>> = if z >= 0.0 {
        vec![(Box::new(mapped(0.0, z.max(1.0))), 0.0, 1.0)]
    } else {
        let t0 = -z;
        let finite = move |w: f64| {
            let t = t0 * w * w;
            ln_f(t, t.ln()) + (2.0 * t0 * w).ln()
        };
        vec![(Box::new(finite), 0.0, 1.0), (Box::new(mapped(t0, 1.0)), 0.0, 1.0)]
    };

    // reference level so the scaled integrands peak near one
    let mut c = f64::NEG_INFINITY;
    for (g, a, b) in &pieces {
        for i in 1..64 {
            let v = g(a + (b - a) * i as f64 / 64.0);
            if v.is_finite() {
                c = c.max(v);
            }
        }
    }
    if !c.is_finite() {
        return Err(Error::domain("alpha_p_student", format!("integrand vanished for z* = {z}, p = {p}, dof = {m}")));
    }
    let mut total = 0.0;
    for (g, a, b) in &pieces {
        let est = quad::integrate(
            |w| {
                let v = g(w) - c;
                if v.is_nan() { 0.0 } else { v.exp() }
            },
            *a,
            *b,
            tol,
        )?;
        total += est.value;
    }
    Ok(c + total.ln())
}

/// `σ{φ(w) + wΦ(w)}` with `w = (μ − y*)/σ`.
pub fn ei(pred: &GaussianPrediction, y_star: f64) -> f64 {
    let gain = pred.mu - y_star;
    if pred.sigma <= 0.0 {
        return gain.max(0.0);
    }
    let w = gain / pred.sigma;
    pred.sigma * (std_normal_pdf(w) + w * std_normal_cdf(w))
}

/// `Φ(w)` with `w = (μ − y*)/σ`.
pub fn pi(pred: &GaussianPrediction, y_star: f64) -> f64 {
    let gain = pred.mu - y_star;
    if pred.sigma <= 0.0 {
        return if gain > 0.0 { 1.0 } else { 0.0 };
    }
    std_normal_cdf(gain / pred.sigma)
}

/// `τ_t = 2 log(t^{d/2+2} π² / (3δ))`.
pub fn ucb_tau(step: usize, dim: usize, delta: f64) -> f64 {
    let t = step.max(1) as f64;
    2.0 * ((dim as f64 / 2.0 + 2.0) * t.ln() + (PI * PI / (3.0 * delta)).ln())
}

/// `μ + √(ν τ_t) σ`.
pub fn ucb(pred: &GaussianPrediction, step: usize, dim: usize, nu: f64, delta: f64) -> f64 {
    pred.mu + (nu * ucb_tau(step, dim, delta)).sqrt() * pred.sigma
}

fn student_as_gaussian(pred: &StudentPrediction) -> GaussianPrediction {
    GaussianPrediction { mu: pred.mu, sigma: pred.variance().max(0.0).sqrt() }
}

/// Acquisition value of `policy` for one prediction.
///
/// `EpsilonEi` scores like EI (its random branch is taken at selection time)
/// and `RandomSearch` scores a constant zero.
pub fn score(policy: &AcquisitionPolicy, pred: &Prediction, ctx: &AcquisitionContext) -> Result<f64> {
    match (policy, pred) {
        (AcquisitionPolicy::RandomSearch, _) => Ok(0.0),
        (AcquisitionPolicy::Ucb { nu, delta }, Prediction::Gaussian(g)) => Ok(ucb(g, ctx.step, ctx.dim, *nu, *delta)),
        (AcquisitionPolicy::Ucb { nu, delta }, Prediction::Student(s)) => {
            Ok(ucb(&student_as_gaussian(s), ctx.step, ctx.dim, *nu, *delta))
        }
        (AcquisitionPolicy::Ei | AcquisitionPolicy::EpsilonEi { .. }, Prediction::Gaussian(g)) => Ok(ei(g, ctx.incumbent)),
        (AcquisitionPolicy::Pi, Prediction::Gaussian(g)) => Ok(pi(g, ctx.incumbent)),
        (AcquisitionPolicy::AlphaP { p }, Prediction::Gaussian(g)) => alpha_p_gaussian(g, ctx.incumbent, *p),
        (policy, Prediction::Student(s)) => {
            let p = policy.exponent().expect("alpha family");
            alpha_p_student(s, ctx.incumbent, p)
        }
    }
}

/// A strictly increasing transform of [`score`] used to rank candidates:
/// `ln α_p` for the `α_p` family (PI, EI and ε-EI included) and the raw
/// value for UCB.
pub fn rank_score(policy: &AcquisitionPolicy, pred: &Prediction, ctx: &AcquisitionContext) -> Result<f64> {
    match (policy.exponent(), pred) {
        (Some(p), Prediction::Gaussian(g)) => ln_alpha_p_gaussian(g, ctx.incumbent, p),
        (Some(p), Prediction::Student(s)) => ln_alpha_p_student(s, ctx.incumbent, p),
        (None, _) => score(policy, pred, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mu: f64, sigma: f64) -> GaussianPrediction {
        GaussianPrediction { mu, sigma }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn pi_special_case() {
        for &w in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
            let v = alpha_p_gaussian(&g(w, 1.0), 0.0, 0.0).unwrap();
            assert!((v - std_normal_cdf(w)).abs() < 1e-14, "w = {w}");
        }
    }

    #[test]
    fn ei_at_zero_gain() {
        let v = alpha_p_gaussian(&g(2.0, 1.0), 2.0, 1.0).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((ei(&g(2.0, 1.0), 2.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(pi(&g(2.0, 1.0), 2.0), 0.5);
    }

    #[test]
    fn half_second_moment_at_zero_gain() {
        for &s in &[0.1, 1.0, 3.0] {
            let v = alpha_p_gaussian(&g(0.0, s), 0.0, 2.0).unwrap();
            assert!(rel(v, s * s / 2.0) < 1e-14);
        }
    }

    #[test]
    fn ei_unit_gain() {
        let v = alpha_p_gaussian(&g(1.0, 1.0), 0.0, 1.0).unwrap();
        assert!(rel(v, 1.083_315_470_587_686_3) < 1e-13);
    }

    #[test]
    fn goldens_in_recurrence_branch() {
        // w = −6: z* = 6
        let v = alpha_p_gaussian(&g(-6.0, 1.0), 0.0, 15.0).unwrap();
        assert!(rel(v, 1.868_201_685_841_074e-10) < 1e-11, "{v}");
        let v = alpha_p_gaussian(&g(-6.0, 1.0), 0.0, 0.5).unwrap();
        assert!(rel(v, 3.490_963_471_387_392e-10) < 1e-11, "{v}");
        let v = alpha_p_gaussian(&g(-2.0, 1.0), 0.0, 4.0).unwrap();
        assert!(rel(v, 0.006_418_276_534_320_975) < 1e-12, "{v}");
    }

    #[test]
    fn golden_in_left_branch() {
        // w = 6 sits in the closed-form window; push to w = 9 for quadrature
        let v = alpha_p_gaussian(&g(6.0, 1.0), 0.0, 15.0).unwrap();
        assert!(rel(v, 4_296_041_372_286.000_000_000_187) < 1e-12, "{v}");
        // p = 3, w = 9: E[(9 + Z)³] = 729 + 27 (tail below −9 is ~1e-19)
        let v = alpha_p_gaussian(&g(9.0, 1.0), 0.0, 3.0).unwrap();
        assert!(rel(v, 756.0) < 1e-12, "{v}");
    }

    #[test]
    fn branches_agree_at_switch_points() {
        for &p in &[0.0, 0.5, 1.0, 3.0, 7.5, 15.0] {
            for &z in &[CLOSED_FORM_UPPER, CLOSED_FORM_LOWER] {
                let a = ln_standard_tail_moment(z, p).unwrap();
                let b = if z > 0.0 {
                    ln_std_normal_pdf(z) + ln_gaussian_laplace_moment(z, p)
                } else {
                    ln_gaussian_left_quadrature(z, p).unwrap()
                };
                assert!((a - b).abs() < 1e-10, "p = {p}, z = {z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn extreme_right_tail_stays_finite() {
        let v = ln_alpha_p_gaussian(&g(-50.0, 1.0), 0.0, 1.0).unwrap();
        // EI ~ φ(z)/z² (1 − 3/z² + 15/z⁴) for large z
        let z2: f64 = 2500.0;
        let approx = ln_std_normal_pdf(50.0) - z2.ln() + (-3.0 / z2 + 15.0 / (z2 * z2)).ln_1p();
        assert!((v - approx).abs() < 1e-8, "{v} vs {approx}");
        assert_eq!(alpha_p_gaussian(&g(-50.0, 1.0), 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_sigma() {
        assert_eq!(alpha_p_gaussian(&g(3.0, 0.0), 1.0, 2.0).unwrap(), 4.0);
        assert_eq!(alpha_p_gaussian(&g(3.0, 0.0), 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(alpha_p_gaussian(&g(0.5, 0.0), 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(ei(&g(3.0, 0.0), 1.0), 2.0);
        assert_eq!(pi(&g(3.0, 0.0), 1.0), 1.0);
    }

    #[test]
    fn rejects_negative_p() {
        assert!(alpha_p_gaussian(&g(0.0, 1.0), 0.0, -0.5).is_err());
        assert!(alpha_p_gaussian(&g(0.0, -1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn dimensionless_values() {
        assert!((alpha_p_dimensionless(0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((alpha_p_dimensionless(0.0, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        let v = alpha_p_dimensionless(-2.0, 4.0).unwrap();
        assert!(rel(v, 0.283_044_425_673_835_77) < 1e-12);
        assert!(alpha_p_dimensionless_with(1.0, 0.0, RootConvention::Inverse).is_err());
        let inv = alpha_p_dimensionless_with(1.3, 0.5, RootConvention::Inverse).unwrap();
        assert!(rel(inv, 1.048_590_049_653_327_7f64.powi(2)) < 1e-12);
    }

    #[test]
    fn ei_asymptote() {
        for &w in &[10.0, 30.0, 100.0] {
            let v = alpha_p_dimensionless(w, 1.0).unwrap();
            assert!((v / w - 1.0).abs() < 1e-12);
        }
    }

    fn s(mu: f64, v: f64, dof: f64) -> StudentPrediction {
        StudentPrediction { mu, v, dof }
    }

    #[test]
    fn student_first_moment_at_center() {
        for &v in &[1.0, 0.25, 9.0] {
            let a = alpha_p_student(&s(0.0, v, 5.0), 0.0, 1.0).unwrap();
            assert!(rel(a, v.sqrt() / (1.5 * PI)) < 1e-9, "{a}");
        }
    }

    #[test]
    fn student_goldens() {
        let a = ln_student_tail_moment(-1.2, 2.0, 7.3).unwrap().exp();
        assert!(rel(a, 1.627_452_881_754_183) < 1e-9, "{a}");
        let a = ln_student_tail_moment(2.0, 0.5, 4.5).unwrap().exp();
        assert!(rel(a, 0.003_598_068_345_780_139) < 1e-9, "{a}");
        let a = ln_student_tail_moment(0.7, 3.0, 3.5).unwrap().exp();
        assert!(rel(a, 0.689_411_036_220_393_6) < 1e-9, "{a}");
    }

    #[test]
    fn student_tail_probability_at_center() {
        let a = alpha_p_student(&s(1.0, 4.0, 7.5), 1.0, 0.0).unwrap();
        assert!((a - 0.5).abs() < 1e-10);
    }

    #[test]
    fn student_clamp() {
        assert_eq!(clamp_student_exponent(12.0, 8.5), 8.0);
        assert_eq!(clamp_student_exponent(3.0, 8.5), 3.0);
        assert_eq!(clamp_student_exponent(12.0, 8.0), 7.0);
        let pred = s(0.3, 2.0, 6.7);
        let a = alpha_p_student(&pred, 0.0, 10.0).unwrap();
        let b = alpha_p_student(&pred, 0.0, 6.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn student_exponent_close_to_dof() {
        // p = 8 with dof slightly above 8: huge but finite
        let a = ln_student_tail_moment(0.5, 8.0, 8.05).unwrap();
        assert!(a.is_finite());
    }

    #[test]
    fn ucb_values() {
        assert_eq!(ucb(&g(1.5, 0.0), 3, 2, 1.0, 0.05), 1.5);
        let tau = ucb_tau(1, 2, 0.05);
        assert!((tau - 8.373_159_513_169_363).abs() < 1e-13);
        let mut prev = f64::NEG_INFINITY;
        for t in 1..100 {
            let v = ucb_tau(t, 3, 0.05);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn dispatch() {
        let ctx = AcquisitionContext { incumbent: 0.2, step: 4, dim: 2 };
        let pred = Prediction::Gaussian(g(0.1, 0.7));
        assert_eq!(score(&AcquisitionPolicy::RandomSearch, &pred, &ctx).unwrap(), 0.0);
        let a = score(&AcquisitionPolicy::AlphaP { p: 6.0 }, &pred, &ctx).unwrap();
        assert_eq!(a, alpha_p_gaussian(&g(0.1, 0.7), 0.2, 6.0).unwrap());
        let e = score(&AcquisitionPolicy::Ei, &pred, &ctx).unwrap();
        let a1 = score(&AcquisitionPolicy::AlphaP { p: 1.0 }, &pred, &ctx).unwrap();
        assert!((e - a1).abs() < 1e-14);
        let student = Prediction::Student(s(0.1, 0.5, 9.0));
        let u = score(&AcquisitionPolicy::ucb(), &student, &ctx).unwrap();
        let expect = 0.1 + ucb_tau(4, 2, 0.05).sqrt() * (0.5f64 / 7.0).sqrt();
        assert!((u - expect).abs() < 1e-14);
    }

    #[test]
    fn policy_serde_roundtrip() {
        let p: AcquisitionPolicy = serde_json::from_str(r#"{"kind":"epsilon_ei"}"#).unwrap();
        assert_eq!(p, AcquisitionPolicy::EpsilonEi { epsilon: 0.1 });
        let p: AcquisitionPolicy = serde_json::from_str(r#"{"kind":"ucb"}"#).unwrap();
        assert_eq!(p, AcquisitionPolicy::Ucb { nu: 1.0, delta: 0.05 });
        let p: AcquisitionPolicy = serde_json::from_str(r#"{"kind":"alpha_p","p":2.5}"#).unwrap();
        assert_eq!(p.to_string(), "alpha_p(2.5)");
        assert!(AcquisitionPolicy::AlphaP { p: -1.0 }.validate().is_err());
        assert!(AcquisitionPolicy::EpsilonEi { epsilon: 1.5 }.validate().is_err());
        assert!(AcquisitionPolicy::Ucb { nu: 1.0, delta: 1.0 }.validate().is_err());
    }
}
