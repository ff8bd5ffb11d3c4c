//! Isotropic Matérn 5/2 covariance and Gram-matrix assembly.

use std::f64::consts::LN_10;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

/// Default diagonal stabilizer, relative to the signal variance.
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-8;
/// Largest jitter tried during escalation, relative to the signal variance.
pub const MAX_RELATIVE_JITTER: f64 = 1e-2;

/// Log-space box for hyperparameter search.
pub const LOG_LENGTH_SCALE_BOUNDS: (f64, f64) = (-3.0 * LN_10, LN_10);
pub const LOG_AMPLITUDE_BOUNDS: (f64, f64) = (-3.0 * LN_10, 3.0 * LN_10);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub length_scale: f64,
    /// Signal standard deviation.
    pub amplitude: f64,
    pub jitter: f64,
}

impl KernelParams {
    /// Builds params with the default jitter `1e-8 · amplitude²`.
    pub fn new(length_scale: f64, amplitude: f64) -> Result<Self> {
        Self::with_jitter(length_scale, amplitude, DEFAULT_RELATIVE_JITTER * amplitude * amplitude)
    }

    pub fn with_jitter(length_scale: f64, amplitude: f64, jitter: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::domain("KernelParams", format!("length_scale = {length_scale}")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain("KernelParams", format!("amplitude = {amplitude}")));
        }
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::domain("KernelParams", format!("jitter = {jitter}")));
        }
        Ok(Self { length_scale, amplitude, jitter })
    }

    pub(crate) fn from_log(log_length_scale: f64, log_amplitude: f64) -> Self {
        let amplitude = log_amplitude.exp();
        Self {
            length_scale: log_length_scale.exp(),
            amplitude,
            jitter: DEFAULT_RELATIVE_JITTER * amplitude * amplitude,
        }
    }

    pub(crate) fn to_log(self) -> [f64; 2] {
        [self.length_scale.ln(), self.amplitude.ln()]
    }

    pub fn signal_variance(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Covariance as a function of the Euclidean distance `r`.
#[inline]
pub fn matern52_from_distance(r: f64, params: &KernelParams) -> f64 {
    let s = SQRT_5 * r / params.length_scale;
    params.signal_variance() * (1.0 + s + s * s / 3.0) * (-s).exp()
}

pub fn matern52(x: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x2.len() });
    }
    Ok(matern52_from_distance(distance(x, x2), params))
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map(Vec::len).unwrap_or(0);
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
    }
    Ok(d)
}

/// Pairwise distances, computed once and reused across hyperparameter trials.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_dims(points)?;
    let n = points.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let r = distance(&points[i], &points[j]);
            d[(i, j)] = r;
            d[(j, i)] = r;
        }
    }
    Ok(d)
}

/// `K + jitter·I` from a precomputed distance matrix.
pub fn gram_from_distances(distances: &DMatrix<f64>, params: &KernelParams) -> DMatrix<f64> {
    let n = distances.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.signal_variance() + params.jitter;
        for j in 0..i {
            let v = matern52_from_distance(distances[(i, j)], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// `K + jitter·I` for the given points.
pub fn gram_matrix(points: &[Vec<f64>], params: &KernelParams) -> Result<DMatrix<f64>> {
    Ok(gram_from_distances(&pairwise_distances(points)?, params))
}

pub(crate) fn cross_covariance(points: &[Vec<f64>], x: &[f64], params: &KernelParams) -> DVector<f64> {
    DVector::from_iterator(
        points.len(),
        points.iter().map(|p| matern52_from_distance(distance(p, x), params)),
    )
}

/// Cholesky of `K + jitter·I`, doubling the jitter on failure until it
/// reaches `MAX_RELATIVE_JITTER · amplitude²`. Returns the factor and the
/// jitter that succeeded.
pub fn factorize(
    distances: &DMatrix<f64>,
    params: &KernelParams,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let ceiling = MAX_RELATIVE_JITTER * params.signal_variance();
    let mut jitter = params.jitter.max(f64::MIN_POSITIVE);
    let base = gram_from_distances(distances, &KernelParams { jitter: 0.0, ..*params });
    loop {
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            return Ok((chol, jitter));
        }
        if jitter >= ceiling {
            return Err(Error::Factorization { jitter });
        }
        jitter = (jitter * 2.0).min(ceiling);
    }
}
