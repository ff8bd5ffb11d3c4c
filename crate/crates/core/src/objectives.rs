//! Test objectives: the two one-dimensional toy functions and six standard
//! benchmarks, mapped affinely onto `[0, 1]^d` and negated so that every
//! task is a maximization problem.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

pub const TASK_NAMES: [&str; 8] = [
    "himmelblau-2d",
    "eggholder-2d",
    "hartmann-3d",
    "ackley-3d",
    "levy-4d",
    "michalewicz-4d",
    "toy-f1",
    "toy-f2",
];

/// Steepness of the Michalewicz function.
pub const MICHALEWICZ_M: i32 = 10;

// Optima of the maximization problems, certified offline by dense scans
// followed by local refinement.
pub const EGGHOLDER_MAX: f64 = 959.640_662_720_850_7;
pub const HARTMANN3_MAX: f64 = 3.862_779_787_332_662;
pub const MICHALEWICZ4_MAX: f64 = 3.698_857_098_466_641_3;
pub const TOY_F1_MAX: f64 = 2.000_003_118_641_248;
pub const TOY_F2_MAX: f64 = 2.000_000_000_002_975;

#[derive(Clone)]
pub struct Task {
    name: &'static str,
    native_domain: Vec<(f64, f64)>,
    true_max: f64,
    /// Native formula; the task value is `sign · native(x)`.
    native: fn(&[f64]) -> f64,
    sign: f64,
}

impl std::fmt::Debug for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Task")
            .field("name", &self.name)
            .field("native_domain", &self.native_domain)
            .field("true_max", &self.true_max)
            .finish()
    }
}

impl Task {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.native_domain.len()
    }

    pub fn true_max(&self) -> f64 {
        self.true_max
    }

    pub fn native_domain(&self) -> &[(f64, f64)] {
        &self.native_domain
    }

    pub fn to_native(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.native_domain)
            .map(|(t, (lo, hi))| lo + t * (hi - lo))
            .collect()
    }

    /// Value of the maximization problem at `u ∈ [0, 1]^d`.
    pub fn evaluate(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.len() });
        }
        Ok(self.sign * (self.native)(&self.to_native(u)))
    }
}

pub fn toy_f1(x: f64) -> f64 {
    (-500.0 * (x - 0.4).powi(4)).exp() + 2.0 * (-((x - 0.8) / 0.08).powi(4)).exp()
}

pub fn toy_f2(x: f64) -> f64 {
    (-500.0 * (x - 0.4).powi(4)).exp() + 2.0 * (-((x - 0.88) / 0.05).powi(4)).exp()
}

pub fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
}

pub fn eggholder(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    -(b + 47.0) * (a / 2.0 + b + 47.0).abs().sqrt().sin() - a * (a - (b + 47.0)).abs().sqrt().sin()
}

const HARTMANN3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN3_A: [[f64; 3]; 4] = [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

pub fn hartmann3(x: &[f64]) -> f64 {
    -HARTMANN3_ALPHA
        .iter()
        .zip(HARTMANN3_A.iter().zip(&HARTMANN3_P))
        .map(|(alpha, (a, p))| {
            let r: f64 = (0..3).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-r).exp()
        })
        .sum::<f64>()
}

pub fn ackley(x: &[f64]) -> f64 {
    let (a, b, c) = (20.0, 0.2, 2.0 * PI);
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / n;
    -a * (-b * sq.sqrt()).exp() - cs.exp() + a + E
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let head = (PI * w[0]).sin().powi(2);
    let mid: f64 = w[..d - 1]
        .iter()
        .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
        .sum();
    let wd = w[d - 1];
    head + mid + (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2))
}

pub fn michalewicz(x: &[f64]) -> f64 {
    -x.iter()
        .enumerate()
        .map(|(i, v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(2 * MICHALEWICZ_M))
        .sum::<f64>()
}

fn toy_f1_native(x: &[f64]) -> f64 {
    toy_f1(x[0])
}

fn toy_f2_native(x: &[f64]) -> f64 {
    toy_f2(x[0])
}

fn task(name: &'static str, native_domain: Vec<(f64, f64)>, true_max: f64, native: fn(&[f64]) -> f64, sign: f64) -> Task {
    Task { name, native_domain, true_max, native, sign }
}

/// Looks a task up by name (see [`TASK_NAMES`]).
pub fn benchmark(name: &str) -> Result<Task> {
    Ok(match name {
        "himmelblau-2d" => task("himmelblau-2d", vec![(-5.0, 5.0); 2], 0.0, himmelblau, -1.0),
        "eggholder-2d" => task("eggholder-2d", vec![(-512.0, 512.0); 2], EGGHOLDER_MAX, eggholder, -1.0),
        "hartmann-3d" => task("hartmann-3d", vec![(0.0, 1.0); 3], HARTMANN3_MAX, hartmann3, -1.0),
        "ackley-3d" => task("ackley-3d", vec![(-32.768, 32.768); 3], 0.0, ackley, -1.0),
        "levy-4d" => task("levy-4d", vec![(-10.0, 10.0); 4], 0.0, levy, -1.0),
        "michalewicz-4d" => task("michalewicz-4d", vec![(0.0, PI); 4], MICHALEWICZ4_MAX, michalewicz, -1.0),
        "toy-f1" => task("toy-f1", vec![(0.0, 1.0)], TOY_F1_MAX, toy_f1_native, 1.0),
        "toy-f2" => task("toy-f2", vec![(0.0, 1.0)], TOY_F2_MAX, toy_f2_native, 1.0),
        other => return Err(Error::UnknownTask(other.to_string())),
    })
}
