//! Student-t process surrogate.
//!
//! Observations follow `MVT_n(ν, φ, K)` with `cov[y] = K`; the predictive law
//! at a new point is `p(y | yₙ) = q_{ν+n}((y − μ)/√V) / √V` with
//! `V = (ν + β − 2)(C − k̃ᵀK⁻¹k̃)` and `β = (y − φ)ᵀK⁻¹(y − φ)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, Dataset, Factor, Standardization};
use crate::kernel::{self, KernelParams, LOG_AMPLITUDE_BOUNDS, LOG_LENGTH_SCALE_BOUNDS};
use crate::specfun::ln_gamma_unchecked;

pub const DEFAULT_NU: f64 = 5.0;
/// Search box for `ν − 2`.
pub const NU_MINUS_TWO_BOUNDS: (f64, f64) = (0.1, 1e4);

/// Log-normal prior on `ν − 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuPrior {
    pub log_mean: f64,
    pub log_std: f64,
}

impl Default for NuPrior {
    fn default() -> Self {
        Self { log_mean: 3f64.ln(), log_std: 1.0 }
    }
}

impl NuPrior {
    /// Log density of `ν − 2` under the log-normal prior.
    pub fn ln_density(&self, nu: f64) -> f64 {
        let u = nu - 2.0;
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = (u.ln() - self.log_mean) / self.log_std;
        -u.ln() - self.log_std.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentPrediction {
    pub mu: f64,
    /// Squared scale `V(x)`; the predictive variance is `V / (dof − 2)`.
    pub v: f64,
    pub dof: f64,
}

impl StudentPrediction {
    pub fn variance(&self) -> f64 {
        self.v / (self.dof - 2.0)
    }
}

fn check_nu(nu: f64, function: &'static str) -> Result<()> {
    if !(nu > 2.0) || nu.is_nan() {
        return Err(Error::domain(function, format!("degrees of freedom {nu} must exceed 2")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TpModel {
    data: Dataset,
    params: KernelParams,
    nu: f64,
    factor: Factor,
    mean_offset: f64,
    y_scale: f64,
}

impl TpModel {
    pub fn fit(data: &Dataset, params: KernelParams, nu: f64) -> Result<Self> {
        Self::fit_with(data, params, nu, Standardization { mean: data.mean(), scale: 1.0 })
    }

    pub fn fit_standardized(data: &Dataset, params: KernelParams, nu: f64) -> Result<Self> {
        Self::fit_with(data, params, nu, Standardization::of(data))
    }

    pub fn fit_with(data: &Dataset, params: KernelParams, nu: f64, st: Standardization) -> Result<Self> {
        check_nu(nu, "TpModel::fit")?;
        if data.is_empty() {
            return Err(Error::InvalidData("cannot fit a surrogate to an empty dataset".into()));
        }
        let distances = kernel::pairwise_distances(data.points())?;
        let targets = DVector::from_iterator(data.len(), data.values().iter().map(|v| (v - st.mean) / st.scale));
        let factor = Factor::new(&distances, &params, &targets)?;
        let params = KernelParams { jitter: factor.jitter, ..params };
        Ok(Self { data: data.clone(), params, nu, factor, mean_offset: st.mean, y_scale: st.scale })
    }

    pub fn predict(&self, x: &[f64]) -> StudentPrediction {
        let k = kernel::cross_covariance(self.data.points(), x, &self.params);
        let (m, explained) = self.factor.project(k.as_slice().to_vec());
        let shrunk = (self.params.signal_variance() - explained).max(0.0);
        let v = (self.nu + self.beta() - 2.0) * shrunk;
        StudentPrediction {
            mu: self.mean_offset + self.y_scale * m,
            v: self.y_scale * self.y_scale * v,
            dof: self.nu + self.data.len() as f64,
        }
    }

    /// `(y − φ)ᵀK⁻¹(y − φ)` in internal (possibly standardized) units.
    pub fn beta(&self) -> f64 {
        self.factor.quad.max(0.0)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }
}

fn ll_from_factor(f: &Factor, n: usize, nu: f64) -> f64 {
    let n_f = n as f64;
    ln_gamma_unchecked(0.5 * (nu + n_f)) - ln_gamma_unchecked(0.5 * nu)
        - 0.5 * n_f * ((nu - 2.0) * PI).ln()
        - 0.5 * f.log_det
        - 0.5 * (nu + n_f) * (f.quad.max(0.0) / (nu - 2.0)).ln_1p()
}

/// Log of the `MVT_n(ν, φ, K + jI)` density at the observed targets, with
/// `φ = mean(y)`.
pub fn log_likelihood(data: &Dataset, params: &KernelParams, nu: f64) -> Result<f64> {
    check_nu(nu, "tp::log_likelihood")?;
    let distances = kernel::pairwise_distances(data.points())?;
    let f = Factor::new(&distances, params, &gp::targets_centered(data))?;
    Ok(ll_from_factor(&f, data.len(), nu))
}

/// Jointly maximizes the likelihood plus the log-normal log prior on `ν − 2`
/// over `(log ℓ, log s, log(ν − 2))`.
pub fn optimize_hyperparams<R: Rng + ?Sized>(
    data: &Dataset,
    restarts: usize,
    warm_start: Option<(KernelParams, f64)>,
    prior: &NuPrior,
    rng: &mut R,
) -> Result<(KernelParams, f64)> {
    let defaults = KernelParams::new(gp::DEFAULT_LENGTH_SCALE, gp::DEFAULT_AMPLITUDE)?;
    if data.len() < 2 {
        return Ok((defaults, DEFAULT_NU));
    }
    let distances = kernel::pairwise_distances(data.points())?;
    let targets = gp::targets_centered(data);
    let n = data.len();
    let objective = |theta: &[f64]| -> f64 {
        let params = KernelParams::from_log(theta[0], theta[1]);
        let nu = 2.0 + theta[2].exp();
        match Factor::new(&distances, &params, &targets) {
            Ok(f) => -(ll_from_factor(&f, n, nu) + prior.ln_density(nu)),
            Err(_) => f64::INFINITY,
        }
    };

    let lower = [LOG_LENGTH_SCALE_BOUNDS.0, LOG_AMPLITUDE_BOUNDS.0, NU_MINUS_TWO_BOUNDS.0.ln()];
    let upper = [LOG_LENGTH_SCALE_BOUNDS.1, LOG_AMPLITUDE_BOUNDS.1, NU_MINUS_TWO_BOUNDS.1.ln()];
    let to_theta = |p: KernelParams, nu: f64| {
        let [a, b] = p.to_log();
        [a, b, (nu - 2.0).ln()]
    };
    let mut starts = vec![to_theta(defaults, DEFAULT_NU)];
    if let Some((p, nu)) = warm_start {
        starts.push(to_theta(p, nu));
    }
    while starts.len() < restarts.max(1) {
        let [a, b] = gp::random_log_start(rng);
        starts.push([a, b, rng.random_range(lower[2]..upper[2])]);
    }

    let nm = crate::optim::NelderMead { max_iter: 200, ..gp::hyper_search() };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let m = nm.minimize(objective, s, &lower, &upper);
        if best.as_ref().is_none_or(|(_, f)| m.f < *f) {
            best = Some((m.x, m.f));
        }
    }
    match best {
        Some((x, f)) if f.is_finite() => Ok((KernelParams::from_log(x[0], x[1]), 2.0 + x[2].exp())),
        _ => Ok((defaults, DEFAULT_NU)),
    }
}
