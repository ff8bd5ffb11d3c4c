//! The sequential BO loop, seeded runs, and per-step metrics.
//!
//! Each run draws from three ChaCha streams keyed on `seed0 + seed_index`:
//! stream 0 for the initial design, 1 for point selection and 2 for
//! hyperparameter restarts. Paired GP/TP runs therefore share their initial
//! points, and seed order never affects a run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acqopt::{self, SearchBudget, Surrogate};
use crate::acquisition::{AcquisitionContext, AcquisitionPolicy};
use crate::error::{Error, Result};
use crate::gp::{self, Dataset, GpModel, Standardization};
use crate::kernel::KernelParams;
use crate::objectives::{self, Task};
use crate::tp::{self, NuPrior, TpModel};

pub const INIT_STREAM: u64 = 0;
pub const SELECT_STREAM: u64 = 1;
pub const HYPER_STREAM: u64 = 2;

/// Floor applied to regrets inside the TP/GP log-ratio index.
pub const INDEX_REGRET_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateKind {
    Gp,
    Tp,
}

impl SurrogateKind {
    pub fn name(&self) -> &'static str {
        match self {
            SurrogateKind::Gp => "gp",
            SurrogateKind::Tp => "tp",
        }
    }
}

/// What a run does when fitting or selection fails at some step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// Log the failure and evaluate a uniform random point instead.
    #[default]
    Fallback,
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: String,
    pub policy: AcquisitionPolicy,
    pub surrogate: SurrogateKind,
    pub n_init: usize,
    pub n_iter: usize,
    pub n_seeds: usize,
    pub seed0: u64,
    pub budget: SearchBudget,
    pub restarts: usize,
    pub nu_prior: NuPrior,
    pub on_failure: FailureMode,
}

impl ExperimentConfig {
    /// Defaults for everything but the task, policy and protocol sizes.
    pub fn new(task: &str, policy: AcquisitionPolicy, n_init: usize, n_iter: usize, n_seeds: usize) -> Result<Self> {
        let dim = objectives::benchmark(task)?.dim();
        Ok(Self {
            task: task.to_string(),
            policy,
            surrogate: SurrogateKind::Gp,
            n_init,
            n_iter,
            n_seeds,
            seed0: 0,
            budget: SearchBudget::for_dim(dim),
            restarts: gp::DEFAULT_RESTARTS,
            nu_prior: NuPrior::default(),
            on_failure: FailureMode::Fallback,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_init == 0 || self.n_iter == 0 || self.n_seeds == 0 {
            return Err(Error::Config(format!(
                "n_init, n_iter and n_seeds must be positive (got {}, {}, {})",
                self.n_init, self.n_iter, self.n_seeds
            )));
        }
        self.policy.validate()?;
        self.budget.validate()?;
        objectives::benchmark(&self.task).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepFit {
    pub params: KernelParams,
    /// Degrees of freedom, for TP surrogates.
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub n_init: usize,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub best_so_far: Vec<f64>,
    /// Fitted hyperparameters per evaluation (`None` for the initial design,
    /// random search and fallback steps).
    pub hyperparam_trace: Vec<Option<StepFit>>,
    /// Post-init steps (1-based) that fell back to a random point.
    pub fallback_steps: Vec<usize>,
}

impl RunRecord {
    fn push(&mut self, x: Vec<f64>, y: f64, fit: Option<StepFit>) {
        let best = self.best_so_far.last().map_or(y, |b| b.max(y));
        self.points.push(x);
        self.values.push(y);
        self.best_so_far.push(best);
        self.hyperparam_trace.push(fit);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded initial design shared by every policy and surrogate.
pub fn initial_design(task: &Task, n_init: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, INIT_STREAM);
    (0..n_init).map(|_| acqopt::uniform_point(task.dim(), &mut rng)).collect()
}

fn fit_surrogate(
    config: &ExperimentConfig,
    data: &Dataset,
    warm: Option<StepFit>,
    rng: &mut ChaCha8Rng,
) -> Result<(Surrogate, StepFit)> {
    let st = Standardization::of(data);
    let scaled = st.apply(data);
    match config.surrogate {
        SurrogateKind::Gp => {
            let params = gp::optimize_hyperparams(&scaled, config.restarts, warm.map(|w| w.params), rng)?;
            let model = GpModel::fit_with(data, params, st)?;
            let fit = StepFit { params: *model.params(), nu: None };
            Ok((Surrogate::Gp(model), fit))
        }
        SurrogateKind::Tp => {
            let warm = warm.and_then(|w| w.nu.map(|nu| (w.params, nu)));
            let (params, nu) = tp::optimize_hyperparams(&scaled, config.restarts, warm, &config.nu_prior, rng)?;
            let model = TpModel::fit_with(data, params, nu, st)?;
            let fit = StepFit { params: *model.params(), nu: Some(nu) };
            Ok((Surrogate::Tp(model), fit))
        }
    }
}

fn next_point(
    config: &ExperimentConfig,
    data: &Dataset,
    step: usize,
    warm: Option<StepFit>,
    select_rng: &mut ChaCha8Rng,
    hyper_rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Option<StepFit>)> {
    let ctx = AcquisitionContext {
        incumbent: data.incumbent().unwrap_or(f64::NEG_INFINITY),
        step,
        dim: data.dim(),
    };
    if config.policy == AcquisitionPolicy::RandomSearch {
        let x = acqopt::select_next(&config.policy, None, &ctx, &config.budget, select_rng)?;
        return Ok((x, None));
    }
    let (model, fit) = fit_surrogate(config, data, warm, hyper_rng)?;
    let x = acqopt::select_next(&config.policy, Some(&model), &ctx, &config.budget, select_rng)?;
    Ok((x, Some(fit)))
}

/// One BO run for seed `config.seed0 + seed_index`.
///
/// Hyperparameters are refit before every selection, warm-started from the
/// previous step's optimum.
pub fn run_bo(config: &ExperimentConfig, seed_index: usize) -> Result<RunRecord> {
    config.validate()?;
    let task = objectives::benchmark(&config.task)?;
    let seed = config.seed0.wrapping_add(seed_index as u64);
    let mut select_rng = stream_rng(seed, SELECT_STREAM);
    let mut hyper_rng = stream_rng(seed, HYPER_STREAM);
    let total = config.n_init + config.n_iter;
    let mut record = RunRecord {
        seed,
        n_init: config.n_init,
        points: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        best_so_far: Vec::with_capacity(total),
        hyperparam_trace: Vec::with_capacity(total),
        fallback_steps: Vec::new(),
    };
    let mut data = Dataset::empty(task.dim());
    for x in initial_design(&task, config.n_init, seed) {
        let y = task.evaluate(&x)?;
        data.push(x.clone(), y)?;
        record.push(x, y, None);
    }

    let mut warm: Option<StepFit> = None;
    for step in 1..=config.n_iter {
        let (x, fit) = match next_point(config, &data, step, warm, &mut select_rng, &mut hyper_rng) {
            Ok(v) => v,
            Err(e) if config.on_failure == FailureMode::Fallback => {
                log::warn!(
                    "{} / {} / seed {seed}: step {step} failed ({e}); evaluating a random point",
                    config.task,
                    config.policy
                );
                record.fallback_steps.push(step);
                (acqopt::uniform_point(task.dim(), &mut select_rng), None)
            }
            Err(e) => return Err(Error::Run { step, source: Box::new(e) }),
        };
        if fit.is_some() {
            warm = fit;
        }
        let y = task.evaluate(&x)?;
        data.push(x.clone(), y)?;
        record.push(x, y, fit);
    }
    Ok(record)
}

/// Runs every seed of `config` on a pool of `workers` threads; results come
/// back in seed order.
pub fn run_seeds(config: &ExperimentConfig, workers: usize) -> Result<Vec<Result<RunRecord>>> {
    config.validate()?;
    let seeds: Vec<usize> = (0..config.n_seeds).collect();
    run_parallel(&seeds, workers, |&i| run_bo(config, i))
}

/// Order-preserving parallel map on a dedicated pool.
pub fn run_parallel<T, U, F>(jobs: &[T], workers: usize, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(&f).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub regret: Vec<f64>,
}

/// `true_max − best_so_far` per step, clipped at zero. Only post-init steps
/// are reported unless `include_init` is set.
pub fn regret_trace(record: &RunRecord, task: &Task, include_init: bool) -> RegretTrace {
    let skip = if include_init { 0 } else { record.n_init };
    let regret = record.best_so_far[skip.min(record.len())..]
        .iter()
        .map(|b| (task.true_max() - b).max(0.0))
        .collect();
    RegretTrace { regret }
}

/// Best-so-far curve with the same step convention as [`regret_trace`].
pub fn best_trace(record: &RunRecord, include_init: bool) -> Vec<f64> {
    let skip = if include_init { 0 } else { record.n_init };
    record.best_so_far[skip.min(record.len())..].to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    /// Sample standard deviation (zero for a single trace).
    pub std: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Element-wise mean, sample standard deviation and standard error.
pub fn aggregate(traces: &[Vec<f64>]) -> Result<Aggregate> {
    let first = traces.first().ok_or_else(|| Error::InvalidData("no traces to aggregate".into()))?;
    let len = first.len();
    if let Some(t) = traces.iter().find(|t| t.len() != len) {
        return Err(Error::LengthMismatch(format!("trace lengths {len} and {}", t.len())));
    }
    let n = traces.len() as f64;
    let mut out = Aggregate { mean: vec![0.0; len], std: vec![0.0; len], stderr: vec![0.0; len] };
    for k in 0..len {
        let mean = traces.iter().map(|t| t[k]).sum::<f64>() / n;
        let var = if traces.len() > 1 {
            traces.iter().map(|t| (t[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        out.mean[k] = mean;
        out.std[k] = var.sqrt();
        out.stderr[k] = var.sqrt() / n.sqrt();
    }
    Ok(out)
}

/// `(1/L) Σₜ log(max(r_tp,t, floor) / max(r_gp,t, floor))`; negative when
/// the TP run has lower regret.
pub fn tp_gp_index(trace_tp: &RegretTrace, trace_gp: &RegretTrace, floor: f64) -> Result<f64> {
    let (a, b) = (&trace_tp.regret, &trace_gp.regret);
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::LengthMismatch(format!("regret traces of length {} and {}", a.len(), b.len())));
    }
    if !(floor > 0.0) {
        return Err(Error::domain("tp_gp_index", format!("floor = {floor} must be positive")));
    }
    let sum: f64 = a.iter().zip(b).map(|(t, g)| (t.max(floor) / g.max(floor)).ln()).sum();
    Ok(sum / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(task: &str, policy: AcquisitionPolicy) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(task, policy, 2, 4, 1).unwrap();
        c.budget = SearchBudget { n_raw: 128, n_refine: 2, max_local_steps: 30 };
        c.restarts = 2;
        c
    }

    #[test]
    fn random_search_consumes_uniform_stream() {
        let c = quick("hartmann-3d", AcquisitionPolicy::RandomSearch);
        let r = run_bo(&c, 0).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.hyperparam_trace.iter().all(Option::is_none));
        let mut rng = stream_rng(0, SELECT_STREAM);
        let _: f64 = rand::Rng::random(&mut rng);
        assert_eq!(r.points[2], acqopt::uniform_point(3, &mut rng));
    }

    #[test]
    fn best_so_far_is_running_max() {
        let c = quick("toy-f1", AcquisitionPolicy::Ei);
        let r = run_bo(&c, 3).unwrap();
        let mut m = f64::NEG_INFINITY;
        for (v, b) in r.values.iter().zip(&r.best_so_far) {
            m = m.max(*v);
            assert_eq!(*b, m);
        }
        assert!(r.hyperparam_trace[2..].iter().all(Option::is_some));
        assert_eq!(r.seed, 3);
    }

    #[test]
    fn runs_are_reproducible() {
        let c = quick("himmelblau-2d", AcquisitionPolicy::AlphaP { p: 4.0 });
        assert_eq!(run_bo(&c, 1).unwrap(), run_bo(&c, 1).unwrap());
    }

    #[test]
    fn invalid_protocol_is_rejected() {
        let mut c = quick("toy-f2", AcquisitionPolicy::Pi);
        c.n_iter = 0;
        assert!(matches!(run_bo(&c, 0), Err(Error::Config(_))));
        assert!(ExperimentConfig::new("nope", AcquisitionPolicy::Pi, 1, 1, 1).is_err());
    }

    #[test]
    fn regret_and_aggregate() {
        let task = objectives::benchmark("himmelblau-2d").unwrap();
        let rec = RunRecord {
            seed: 0,
            n_init: 1,
            points: vec![vec![0.0, 0.0]; 3],
            values: vec![-5.0, -2.0, -3.0],
            best_so_far: vec![-5.0, -2.0, -2.0],
            hyperparam_trace: vec![None; 3],
            fallback_steps: vec![],
        };
        assert_eq!(regret_trace(&rec, &task, false).regret, vec![2.0, 2.0]);
        assert_eq!(regret_trace(&rec, &task, true).regret, vec![5.0, 2.0, 2.0]);
        let agg = aggregate(&[vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(agg.mean, vec![1.0, 1.0]);
        assert!((agg.std[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg.stderr[0], 1.0);
        assert!(aggregate(&[vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn index_cases() {
        let gp = RegretTrace { regret: vec![0.4, 0.2, 0.0] };
        assert_eq!(tp_gp_index(&gp, &gp, INDEX_REGRET_FLOOR).unwrap(), 0.0);
        let half = RegretTrace { regret: vec![0.2, 0.1] };
        let full = RegretTrace { regret: vec![0.4, 0.2] };
        assert!((tp_gp_index(&half, &full, INDEX_REGRET_FLOOR).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!(tp_gp_index(&half, &gp, INDEX_REGRET_FLOOR).is_err());
    }
}
