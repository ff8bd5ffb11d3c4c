//! Declarative sweeps over tasks × surrogates × policies × seeds, the named
//! protocol presets, and the TP/GP comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acqopt::SearchBudget;
use crate::acquisition::AcquisitionPolicy;
use crate::error::{Error, Result};
use crate::gp;
use crate::harness::{self, ExperimentConfig, FailureMode, RunRecord, SurrogateKind};
use crate::objectives;
use crate::tp::NuPrior;

pub const PRESET_NAMES: [&str; 3] = ["toy-paper", "bench-paper", "tp-paper"];

pub const BENCH_TASKS: [&str; 6] =
    ["himmelblau-2d", "eggholder-2d", "hartmann-3d", "ackley-3d", "levy-4d", "michalewicz-4d"];
pub const TOY_TASKS: [&str; 2] = ["toy-f1", "toy-f2"];
pub const TOY_EXPONENTS: [f64; 6] = [0.0, 1.0, 3.0, 6.0, 9.0, 12.0];
pub const BENCH_EXPONENTS: [f64; 7] = [0.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];

fn default_surrogates() -> Vec<SurrogateKind> {
    vec![SurrogateKind::Gp]
}

fn default_restarts() -> usize {
    gp::DEFAULT_RESTARTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub tasks: Vec<String>,
    pub policies: Vec<AcquisitionPolicy>,
    /// For `tp-compare`: exactly two entries, `[treatment, baseline]`.
    #[serde(default = "default_surrogates")]
    pub surrogates: Vec<SurrogateKind>,
    pub n_init: usize,
    pub n_iter: usize,
    pub n_seeds: usize,
    #[serde(default)]
    pub seed0: u64,
    /// Overrides the per-dimension default search budget for every task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<SearchBudget>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub nu_prior: NuPrior,
    #[serde(default)]
    pub include_init_steps: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub on_failure: FailureMode,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() || self.policies.is_empty() || self.surrogates.is_empty() {
            return Err(Error::Config("tasks, policies and surrogates must be non-empty".into()));
        }
        for t in &self.tasks {
            objectives::benchmark(t).map_err(|e| Error::Config(e.to_string()))?;
        }
        for p in &self.policies {
            p.validate()?;
        }
        if let Some(b) = &self.budget {
            b.validate()?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let nu = &self.nu_prior;
        if !(nu.log_std > 0.0 && nu.log_mean.is_finite()) {
            return Err(Error::Config(format!("invalid nu prior {nu:?}")));
        }
        if self.n_init == 0 || self.n_iter == 0 || self.n_seeds == 0 {
            return Err(Error::Config("n_init, n_iter and n_seeds must be positive".into()));
        }
        Ok(())
    }

    pub fn experiment(&self, task: &str, policy: AcquisitionPolicy, surrogate: SurrogateKind) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::new(task, policy, self.n_init, self.n_iter, self.n_seeds)?;
        c.surrogate = surrogate;
        c.seed0 = self.seed0;
        c.restarts = self.restarts;
        c.nu_prior = self.nu_prior;
        c.on_failure = self.on_failure;
        if let Some(b) = self.budget {
            c.budget = b;
        }
        Ok(c)
    }

    /// Runs in output order: task, surrogate, policy, seed. Repeated
    /// surrogates run once.
    pub fn jobs(&self) -> Result<Vec<Job>> {
        let mut kinds: Vec<SurrogateKind> = Vec::new();
        for s in &self.surrogates {
            if !kinds.contains(s) {
                kinds.push(*s);
            }
        }
        let mut jobs = Vec::new();
        for task in &self.tasks {
            for &surrogate in &kinds {
                for &policy in &self.policies {
                    let config = self.experiment(task, policy, surrogate)?;
                    for seed_index in 0..self.n_seeds {
                        jobs.push(Job { config: config.clone(), seed_index });
                    }
                }
            }
        }
        Ok(jobs)
    }
}

fn alpha_policies(ps: &[f64]) -> Vec<AcquisitionPolicy> {
    ps.iter().map(|&p| AcquisitionPolicy::AlphaP { p }).collect()
}

/// The named protocols: `toy-paper` (2 initial points, 60 steps),
/// `bench-paper` (3 initial points, 50 steps, twelve policies) and `tp-paper`
/// (the benchmark protocol with paired TP and GP runs); 64 seeds each.
pub fn preset(name: &str) -> Result<SweepConfig> {
    let base = |tasks: &[&str], policies: Vec<AcquisitionPolicy>, n_init, n_iter| SweepConfig {
        tasks: tasks.iter().map(|s| s.to_string()).collect(),
        policies,
        surrogates: default_surrogates(),
        n_init,
        n_iter,
        n_seeds: 64,
        seed0: 0,
        budget: None,
        restarts: gp::DEFAULT_RESTARTS,
        nu_prior: NuPrior::default(),
        include_init_steps: false,
        workers: None,
        on_failure: FailureMode::Fallback,
    };
    match name {
        "toy-paper" => Ok(base(&TOY_TASKS, alpha_policies(&TOY_EXPONENTS), 2, 60)),
        "bench-paper" => {
            let mut policies = vec![
                AcquisitionPolicy::RandomSearch,
                AcquisitionPolicy::Ei,
                AcquisitionPolicy::Pi,
                AcquisitionPolicy::epsilon_ei(),
                AcquisitionPolicy::ucb(),
            ];
            policies.extend(alpha_policies(&BENCH_EXPONENTS));
            Ok(base(&BENCH_TASKS, policies, 3, 50))
        }
        "tp-paper" => {
            let mut c = base(&BENCH_TASKS, alpha_policies(&BENCH_EXPONENTS), 3, 50);
            c.surrogates = vec![SurrogateKind::Tp, SurrogateKind::Gp];
            Ok(c)
        }
        other => Err(Error::Config(format!("unknown preset `{other}` (expected one of {})", PRESET_NAMES.join(", ")))),
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub config: ExperimentConfig,
    pub seed_index: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub job: Job,
    pub result: std::result::Result<RunRecord, String>,
}

impl RunOutcome {
    pub fn seed(&self) -> u64 {
        self.job.config.seed0.wrapping_add(self.job.seed_index as u64)
    }
}

/// Executes `jobs` on `workers` threads; outcomes keep the job order.
pub fn execute(jobs: Vec<Job>, workers: usize) -> Result<Vec<RunOutcome>> {
    let results = harness::run_parallel(&jobs, workers, |job| {
        harness::run_bo(&job.config, job.seed_index).map_err(|e| {
            log::error!("{} / {} / seed index {}: {e}", job.config.task, job.config.policy, job.seed_index);
            e.to_string()
        })
    })?;
    Ok(jobs.into_iter().zip(results).map(|(job, result)| RunOutcome { job, result }).collect())
}

/// Failure counts that decide the process exit status.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FailureSummary {
    pub runs: usize,
    pub failed_runs: usize,
    pub fallback_steps: usize,
}

impl FailureSummary {
    pub fn of(outcomes: &[RunOutcome]) -> Self {
        let mut s = Self { runs: outcomes.len(), ..Self::default() };
        for o in outcomes {
            match &o.result {
                Ok(r) => s.fallback_steps += r.fallback_steps.len(),
                Err(_) => s.failed_runs += 1,
            }
        }
        s
    }

    pub fn is_clean(&self) -> bool {
        self.failed_runs == 0 && self.fallback_steps == 0
    }
}

/// Per-seed TP/GP index for one (task, policy) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexRow {
    pub task: String,
    pub policy: String,
    pub param: String,
    pub seed: u64,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub task: String,
    pub policy: String,
    pub param: String,
    pub n_seeds: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Pairs treatment and baseline runs (the two configured surrogates) seed by
/// seed. Pairs with a failed run on either side are skipped.
pub fn tp_compare_indices(config: &SweepConfig, outcomes: &[RunOutcome]) -> Result<(Vec<IndexRow>, Vec<IndexSummary>)> {
    let [treatment, baseline] = config.surrogates[..] else {
        return Err(Error::Config("tp-compare needs exactly two surrogates: [treatment, baseline]".into()));
    };
    let include = config.include_init_steps;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for task_name in &config.tasks {
        let task = objectives::benchmark(task_name)?;
        for policy in &config.policies {
            let pick = |kind: SurrogateKind| {
                outcomes.iter().filter(move |o| {
                    o.job.config.task == *task_name && o.job.config.policy == *policy && o.job.config.surrogate == kind
                })
            };
            let mut values = Vec::new();
            for (t, b) in pick(treatment).zip(pick(baseline)) {
                let (Ok(rt), Ok(rb)) = (&t.result, &b.result) else { continue };
                let index = harness::tp_gp_index(
                    &harness::regret_trace(rt, &task, include),
                    &harness::regret_trace(rb, &task, include),
                    harness::INDEX_REGRET_FLOOR,
                )?;
                values.push(index);
                rows.push(IndexRow {
                    task: task_name.clone(),
                    policy: policy.kind().to_string(),
                    param: policy.param_label(),
                    seed: t.seed(),
                    index,
                });
            }
            if values.is_empty() {
                continue;
            }
            let agg = harness::aggregate(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>())?;
            summaries.push(IndexSummary {
                task: task_name.clone(),
                policy: policy.kind().to_string(),
                param: policy.param_label(),
                n_seeds: values.len(),
                mean: agg.mean[0],
                stderr: agg.stderr[0],
            });
        }
    }
    Ok((rows, summaries))
}
