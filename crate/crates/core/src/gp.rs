//! Exact Gaussian-process regression for noiseless observations.
//!
//! The prior mean is the constant mean of the observed targets. Models built
//! with [`GpModel::fit_standardized`] additionally divide the centered
//! targets by their standard deviation; kernel parameters then live in
//! standardized units and predictions are mapped back.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    self, KernelParams, LOG_AMPLITUDE_BOUNDS, LOG_LENGTH_SCALE_BOUNDS,
};
use crate::optim::NelderMead;

/// Observed inputs in `[0, 1]^d` and their objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

fn check_point(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidData(format!("coordinate {v} outside [0, 1]")));
    }
    Ok(())
}

impl Dataset {
    pub fn empty(dim: usize) -> Self {
        Self { dim, x: Vec::new(), y: Vec::new() }
    }

    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(format!("{} points but {} values", x.len(), y.len())));
        }
        let dim = x.first().map(Vec::len).unwrap_or(0);
        for p in &x {
            check_point(p, dim)?;
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite observation {v}")));
        }
        Ok(Self { dim, x, y })
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if self.x.is_empty() && self.dim == 0 {
            self.dim = x.len();
        }
        check_point(&x, self.dim)?;
        if !y.is_finite() {
            return Err(Error::InvalidData(format!("non-finite observation {y}")));
        }
        self.x.push(x);
        self.y.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Index and value of the best (maximal) observation; ties go to the
    /// earliest one.
    pub fn best(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.y.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best
    }

    /// The incumbent `y*`.
    pub fn incumbent(&self) -> Option<f64> {
        self.best().map(|(_, v)| v)
    }

    pub fn mean(&self) -> f64 {
        if self.y.is_empty() {
            0.0
        } else {
            self.y.iter().sum::<f64>() / self.y.len() as f64
        }
    }
}

/// Affine map between raw and standardized targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY_SCALE: f64 = 1.0;

    /// Sample mean and standard deviation; the scale falls back to 1 for a
    /// single observation or flat targets.
    pub fn of(data: &Dataset) -> Self {
        let mean = data.mean();
        let n = data.len();
        let scale = if n < 2 {
            1.0
        } else {
            let var = data.y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 }
        };
        Self { mean, scale }
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        Dataset {
            dim: data.dim,
            x: data.x.clone(),
            y: data.y.iter().map(|v| (v - self.mean) / self.scale).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mu: f64,
    pub sigma: f64,
}

/// Lower-triangular factor plus the solves needed for prediction.
#[derive(Debug, Clone)]
pub(crate) struct Factor {
    pub l: DMatrix<f64>,
    /// `(K + jI)⁻¹ r` for the internal targets `r`.
    pub alpha: DVector<f64>,
    /// `rᵀ (K + jI)⁻¹ r`.
    pub quad: f64,
    pub log_det: f64,
    pub jitter: f64,
}

impl Factor {
    pub fn new(distances: &DMatrix<f64>, params: &KernelParams, targets: &DVector<f64>) -> Result<Self> {
        let (chol, jitter) = kernel::factorize(distances, params)?;
        let alpha = chol.solve(targets);
        let quad = targets.dot(&alpha);
        let l = chol.unpack();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { l, alpha, quad, log_det, jitter })
    }

    /// Solves `L v = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let mut s = b[i];
            for (j, bj) in b[..i].iter().enumerate() {
                s -= self.l[(i, j)] * bj;
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Returns `k̃ᵀ α` and `k̃ᵀ (K + jI)⁻¹ k̃` for a cross-covariance vector.
    pub fn project(&self, mut k: Vec<f64>) -> (f64, f64) {
        let mean: f64 = k.iter().zip(self.alpha.iter()).map(|(a, b)| a * b).sum();
        self.forward_solve(&mut k);
        (mean, k.iter().map(|v| v * v).sum())
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    data: Dataset,
    params: KernelParams,
    factor: Factor,
    mean_offset: f64,
    y_scale: f64,
}

impl GpModel {
    /// Fits raw targets with prior mean `mean(y)`; `params` are in target units.
    pub fn fit(data: &Dataset, params: KernelParams) -> Result<Self> {
        Self::fit_with(data, params, Standardization { mean: data.mean(), scale: 1.0 })
    }

    /// Fits standardized targets; `params` are in standardized units.
    pub fn fit_standardized(data: &Dataset, params: KernelParams) -> Result<Self> {
        Self::fit_with(data, params, Standardization::of(data))
    }

    pub fn fit_with(data: &Dataset, params: KernelParams, st: Standardization) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidData("cannot fit a surrogate to an empty dataset".into()));
        }
        let distances = kernel::pairwise_distances(data.points())?;
        let targets = DVector::from_iterator(data.len(), data.y.iter().map(|v| (v - st.mean) / st.scale));
        let factor = Factor::new(&distances, &params, &targets)?;
        let params = KernelParams { jitter: factor.jitter, ..params };
        Ok(Self { data: data.clone(), params, factor, mean_offset: st.mean, y_scale: st.scale })
    }

    pub fn predict(&self, x: &[f64]) -> GaussianPrediction {
        let k = kernel::cross_covariance(self.data.points(), x, &self.params);
        let (m, explained) = self.factor.project(k.as_slice().to_vec());
        let var = (self.params.signal_variance() - explained).max(0.0);
        GaussianPrediction {
            mu: self.mean_offset + self.y_scale * m,
            sigma: self.y_scale * var.sqrt(),
        }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Kernel parameters with the jitter that was actually used.
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.factor.l
    }
}

pub(crate) fn targets_centered(data: &Dataset) -> DVector<f64> {
    let m = data.mean();
    DVector::from_iterator(data.len(), data.y.iter().map(|v| v - m))
}

fn lml_from_factor(f: &Factor, n: usize) -> f64 {
    -0.5 * f.quad - 0.5 * f.log_det - 0.5 * n as f64 * (2.0 * PI).ln()
}

/// `−½ rᵀ(K+jI)⁻¹r − ½ log|K+jI| − (n/2) log 2π` with `r = y − mean(y)`.
pub fn log_marginal_likelihood(data: &Dataset, params: &KernelParams) -> Result<f64> {
    let distances = kernel::pairwise_distances(data.points())?;
    let f = Factor::new(&distances, params, &targets_centered(data))?;
    Ok(lml_from_factor(&f, data.len()))
}

pub const DEFAULT_LENGTH_SCALE: f64 = 0.3;
pub const DEFAULT_AMPLITUDE: f64 = 1.0;
pub const DEFAULT_RESTARTS: usize = 8;

pub(crate) fn hyper_search() -> NelderMead {
    NelderMead { max_iter: 120, f_tol: 1e-9, initial_step: 0.1 }
}

pub(crate) fn random_log_start<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    [
        rng.random_range(LOG_LENGTH_SCALE_BOUNDS.0..LOG_LENGTH_SCALE_BOUNDS.1),
        rng.random_range(LOG_AMPLITUDE_BOUNDS.0..LOG_AMPLITUDE_BOUNDS.1),
    ]
}

/// Maximizes the log marginal likelihood over `(log ℓ, log s)` by
/// multi-start Nelder-Mead inside the log-space box.
///
/// Starts are the default `(0.3, 1)`, the optional warm start, then uniform
/// random points until `restarts` starts have been used.
pub fn optimize_hyperparams<R: Rng + ?Sized>(
    data: &Dataset,
    restarts: usize,
    warm_start: Option<KernelParams>,
    rng: &mut R,
) -> Result<KernelParams> {
    let defaults = KernelParams::new(DEFAULT_LENGTH_SCALE, DEFAULT_AMPLITUDE)?;
    if data.len() < 2 {
        return Ok(defaults);
    }
    let distances = kernel::pairwise_distances(data.points())?;
    let targets = targets_centered(data);
    let n = data.len();
    let objective = |theta: &[f64]| -> f64 {
        let params = KernelParams::from_log(theta[0], theta[1]);
        match Factor::new(&distances, &params, &targets) {
            Ok(f) => -lml_from_factor(&f, n),
            Err(_) => f64::INFINITY,
        }
    };

    let mut starts: Vec<[f64; 2]> = vec![defaults.to_log()];
    if let Some(w) = warm_start {
        starts.push(w.to_log());
    }
    while starts.len() < restarts.max(1) {
        starts.push(random_log_start(rng));
    }

    let lower = [LOG_LENGTH_SCALE_BOUNDS.0, LOG_AMPLITUDE_BOUNDS.0];
    let upper = [LOG_LENGTH_SCALE_BOUNDS.1, LOG_AMPLITUDE_BOUNDS.1];
    let nm = hyper_search();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let m = nm.minimize(objective, s, &lower, &upper);
        if best.as_ref().is_none_or(|(_, f)| m.f < *f) {
            best = Some((m.x, m.f));
        }
    }
    match best {
        Some((x, f)) if f.is_finite() => Ok(KernelParams::from_log(x[0], x[1])),
        _ => Ok(defaults),
    }
}
