//! Inner-loop maximization of an acquisition surface over `[0, 1]^d`.
//!
//! A randomly shifted Halton scan (plus a perturbation cloud around the
//! supplied anchors) is scored in parallel, and the best `n_refine`
//! candidates are polished by bounded Nelder-Mead. Ties are broken by
//! candidate index, so the result never depends on evaluation order.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcquisitionContext, AcquisitionPolicy, Prediction};
use crate::error::{Error, Result};
use crate::gp::{Dataset, GpModel};
use crate::optim::NelderMead;
use crate::tp::TpModel;

pub const DEFAULT_RAW_PER_DIM: usize = 2048;
pub const DEFAULT_REFINE: usize = 8;
pub const DEFAULT_LOCAL_STEPS: usize = 200;

/// Perturbation scales of the cloud around each anchor.
const CLOUD_SCALES: [f64; 3] = [1e-3, 1e-2, 1e-1];
const CLOUD_PER_SCALE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub n_raw: usize,
    pub n_refine: usize,
    pub max_local_steps: usize,
}

impl SearchBudget {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            n_raw: DEFAULT_RAW_PER_DIM * dim.max(1),
            n_refine: DEFAULT_REFINE,
            max_local_steps: DEFAULT_LOCAL_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_raw == 0 || self.n_refine == 0 || self.max_local_steps == 0 {
            return Err(Error::Config(format!("search budget entries must be positive: {self:?}")));
        }
        Ok(())
    }
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `n` Halton points (indices `1..=n`) with a Cranley-Patterson shift.
pub fn shifted_halton(n: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let bases = first_primes(shift.len());
    (1..=n as u64)
        .map(|i| {
            bases
                .iter()
                .zip(shift)
                .map(|(&b, s)| {
                    let v = radical_inverse(i, b) + s;
                    if v >= 1.0 { v - 1.0 } else { v }
                })
                .collect()
        })
        .collect()
}

pub fn uniform_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

fn clip_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() { f64::NEG_INFINITY } else { v }
}

/// Index of the largest score, lowest index first among ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Maximizes `scorer` over the unit hypercube and returns the best point
/// evaluated. `anchors` (typically the incumbent) seed the perturbation cloud.
pub fn maximize_acquisition<F, R>(
    scorer: F,
    dim: usize,
    budget: &SearchBudget,
    anchors: &[Vec<f64>],
    rng: &mut R,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let shift = uniform_point(dim, rng);
    let mut candidates = shifted_halton(budget.n_raw.max(1), &shift);
    for anchor in anchors.iter().filter(|a| a.len() == dim) {
        let mut a = anchor.clone();
        clip_unit(&mut a);
        for &scale in &CLOUD_SCALES {
            let normal = Normal::new(0.0, scale).expect("positive scale");
            for _ in 0..CLOUD_PER_SCALE {
                let mut p: Vec<f64> = a.iter().map(|v| v + normal.sample(rng)).collect();
                clip_unit(&mut p);
                candidates.push(p);
            }
        }
        candidates.push(a);
    }

    let scores: Vec<f64> = candidates.par_iter().map(|x| sanitize(scorer(x))).collect();

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    let starts: Vec<usize> = order.into_iter().take(budget.n_refine).collect();

    let nm = NelderMead { max_iter: budget.max_local_steps, f_tol: 1e-12, initial_step: 0.02 };
    let lower = vec![0.0; dim];
    let upper = vec![1.0; dim];
    let refined: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|&i| {
            let m = nm.minimize(|x| -sanitize(scorer(x)), &candidates[i], &lower, &upper);
            (m.x, -m.f)
        })
        .collect();

    // raw candidates first, so a refinement only wins on a strict improvement
    let mut pool_scores = scores;
    let mut pool = candidates;
    for (x, f) in refined {
        pool.push(x);
        pool_scores.push(f);
    }
    let mut best = pool.swap_remove(argmax(&pool_scores));
    clip_unit(&mut best);
    best
}

/// A fitted surrogate of either family.
#[derive(Debug, Clone)]
pub enum Surrogate {
    Gp(GpModel),
    Tp(TpModel),
}

impl Surrogate {
    pub fn predict(&self, x: &[f64]) -> Prediction {
        match self {
            Surrogate::Gp(m) => Prediction::Gaussian(m.predict(x)),
            Surrogate::Tp(m) => Prediction::Student(m.predict(x)),
        }
    }

    pub fn data(&self) -> &Dataset {
        match self {
            Surrogate::Gp(m) => m.data(),
            Surrogate::Tp(m) => m.data(),
        }
    }
}

/// Chooses the next evaluation point for `policy`.
///
/// Every policy consumes exactly one uniform draw first (the ε-greedy
/// branch), so `EpsilonEi { epsilon: 0 }` reproduces `Ei` draw for draw.
/// `RandomSearch` needs no surrogate; every other policy errors without one.
pub fn select_next<R: Rng + ?Sized>(
    policy: &AcquisitionPolicy,
    surrogate: Option<&Surrogate>,
    ctx: &AcquisitionContext,
    budget: &SearchBudget,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let branch: f64 = rng.random();
    match policy {
        AcquisitionPolicy::RandomSearch => return Ok(uniform_point(ctx.dim, rng)),
        AcquisitionPolicy::EpsilonEi { epsilon } if branch < *epsilon => {
            return Ok(uniform_point(ctx.dim, rng));
        }
        _ => {}
    }
    let model = surrogate.ok_or_else(|| Error::InvalidData(format!("{policy} requires a fitted surrogate")))?;
    let anchors: Vec<Vec<f64>> = model
        .data()
        .best()
        .map(|(i, _)| vec![model.data().points()[i].clone()])
        .unwrap_or_default();
    let scorer = |x: &[f64]| {
        acquisition::rank_score(policy, &model.predict(x), ctx).unwrap_or(f64::NEG_INFINITY)
    };
    Ok(maximize_acquisition(scorer, ctx.dim, budget, &anchors, rng))
}
