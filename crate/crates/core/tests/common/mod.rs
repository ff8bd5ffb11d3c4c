//! Test oracles that share no code with the library: composite
//! Gauss-Legendre quadrature, and GP/TP posteriors from an explicit inverse.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, x);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                weights[i] = 2.0 / ((1.0 - x * x) * dq * dq);
                break;
            }
        }
        nodes[i] = x;
    }
    (nodes, weights)
}

/// Composite 20-point Gauss-Legendre over `panels` equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * s;
    }
    total
}

pub fn ln_gamma_ref(x: f64) -> f64 {
    // Stirling series after shifting the argument above 20
    let mut shift = 0.0;
    let mut x = x;
    while x < 20.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// `∫_{z*}^∞ (z − z*)ᵖ φ(z) dz`, via `t = u²` to smooth the endpoint.
pub fn gaussian_moment(z_star: f64, p: f64) -> f64 {
    let ln_f = |t: f64| -> f64 {
        let power = if p == 0.0 { 0.0 } else { p * t.ln() };
        power - 0.5 * (t + z_star).powi(2) - 0.5 * (2.0 * std::f64::consts::PI).ln()
    };
    let peak = 0.5 * (-z_star + (z_star * z_star + 4.0 * p).sqrt());
    let c = if peak > 0.0 { ln_f(peak) } else { ln_f(1e-300_f64.max(peak)) };
    let c = if c.is_finite() { c } else { -0.5 * z_star * z_star };
    let upper = (peak + 40.0).sqrt();
    let v = integrate(|u| if u == 0.0 { 0.0 } else { 2.0 * u * (ln_f(u * u) - c).exp() }, 0.0, upper, 400);
    v * c.exp()
}

/// `∫_0^∞ tᵖ q_m(t + z) dt`, split at `T` with `t = T/v²` on the tail.
pub fn student_moment(z: f64, p: f64, m: f64) -> f64 {
    let ln_norm = ln_gamma_ref(0.5 * (m + 1.0)) - ln_gamma_ref(0.5 * m) - 0.5 * std::f64::consts::PI.ln();
    let f = |t: f64| -> f64 {
        let power = if p == 0.0 { 0.0 } else { p * t.ln() };
        (power + ln_norm - 0.5 * (m + 1.0) * (1.0 + (t + z).powi(2)).ln()).exp()
    };
    let t_split = 4.0 + 2.0 * z.abs();
    let head = integrate(|u| 2.0 * u * f(u * u), 0.0, t_split.sqrt(), 400);
    let tail = integrate(
        |v| if v == 0.0 { 0.0 } else { f(t_split / (v * v)) * 2.0 * t_split / (v * v * v) },
        0.0,
        1.0,
        400,
    );
    head + tail
}

pub fn matern(r: f64, ell: f64, s: f64) -> f64 {
    let a = 5f64.sqrt() * r / ell;
    s * s * (1.0 + a + a * a / 3.0) * (-a).exp()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// Dense posterior pieces: `(K + jI)⁻¹`, residuals and cross-covariances.
pub struct DenseOracle {
    pub inv: DMatrix<f64>,
    pub resid: DVector<f64>,
    pub mean: f64,
    pub x: Vec<Vec<f64>>,
    pub ell: f64,
    pub s: f64,
}

impl DenseOracle {
    pub fn new(x: &[Vec<f64>], y: &[f64], ell: f64, s: f64, jitter: f64) -> Self {
        let n = x.len();
        let k = DMatrix::from_fn(n, n, |i, j| matern(dist(&x[i], &x[j]), ell, s) + if i == j { jitter } else { 0.0 });
        let mean = y.iter().sum::<f64>() / n as f64;
        Self {
            inv: k.try_inverse().expect("invertible"),
            resid: DVector::from_iterator(n, y.iter().map(|v| v - mean)),
            mean,
            x: x.to_vec(),
            ell,
            s,
        }
    }

    fn cross(&self, q: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().map(|p| matern(dist(p, q), self.ell, self.s)))
    }

    /// GP `(μ, σ²)`.
    pub fn gp(&self, q: &[f64]) -> (f64, f64) {
        let k = self.cross(q);
        let mu = self.mean + (k.transpose() * &self.inv * &self.resid)[0];
        let var = self.s * self.s - (k.transpose() * &self.inv * &k)[0];
        (mu, var)
    }

    /// TP `(μ, V, dof)`.
    pub fn tp(&self, q: &[f64], nu: f64) -> (f64, f64, f64) {
        let (mu, var) = self.gp(q);
        let beta = (self.resid.transpose() * &self.inv * &self.resid)[0];
        (mu, (nu + beta - 2.0) * var, nu + self.x.len() as f64)
    }
}

/// Additive-recurrence (Kronecker) points in `[0, 1)^d`.
pub fn kronecker(n: usize, d: usize) -> impl Iterator<Item = Vec<f64>> {
    // generalized golden ratio: the root of x^{d+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..100 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|k| (1.0 / phi.powi(k as i32)).fract()).collect();
    (0..n).map(move |i| alpha.iter().map(|a| (0.5 + a * i as f64).fract()).collect())
}
