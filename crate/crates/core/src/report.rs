//! Result files: long-format CSV rows, JSON aggregate curves, the sweep
//! manifest, TP/GP index tables and acquisition tables.
//!
//! Floats are written in Rust's shortest round-trip form and every
//! collection is emitted in job order, so reruns are byte-identical.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::acquisition::{self, AcquisitionPolicy, RootConvention};
use crate::error::{Error, Result};
use crate::experiment::{FailureSummary, IndexRow, IndexSummary, RunOutcome, SweepConfig};
use crate::gp::GaussianPrediction;
use crate::harness;
use crate::objectives;

/// Bumped whenever a column is added, removed or reinterpreted.
pub const ROW_SCHEMA_VERSION: u32 = 1;

pub const ROW_HEADER: [&str; 12] = [
    "task", "surrogate", "policy", "param", "seed", "eval", "step", "phase", "x", "value", "best_so_far", "regret",
];

pub const ROWS_FILE: &str = "rows.csv";
pub const AGGREGATES_FILE: &str = "aggregates.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const INDEX_FILE: &str = "tp_index.csv";
pub const INDEX_SUMMARY_FILE: &str = "tp_summary.json";
pub const DIMENSIONLESS_FILE: &str = "acq_dimensionless.csv";
pub const UNIT_GAIN_FILE: &str = "acq_unit_gain.csv";

/// One evaluation of one run. `step` counts post-init evaluations and is 0
/// for the initial design; `x` joins the unit-cube coordinates with `;`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub task: String,
    pub surrogate: &'static str,
    pub policy: &'static str,
    pub param: String,
    pub seed: u64,
    pub eval: usize,
    pub step: usize,
    pub phase: &'static str,
    pub x: String,
    pub value: f64,
    pub best_so_far: f64,
    pub regret: f64,
}

pub fn result_rows(outcomes: &[RunOutcome]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for o in outcomes {
        let Ok(rec) = &o.result else { continue };
        let c = &o.job.config;
        let task = objectives::benchmark(&c.task)?;
        for (i, ((x, v), b)) in rec.points.iter().zip(&rec.values).zip(&rec.best_so_far).enumerate() {
            let init = i < rec.n_init;
            rows.push(ResultRow {
                task: c.task.clone(),
                surrogate: c.surrogate.name(),
                policy: c.policy.kind(),
                param: c.policy.param_label(),
                seed: rec.seed,
                eval: i + 1,
                step: if init { 0 } else { i + 1 - rec.n_init },
                phase: if init { "init" } else { "iter" },
                x: x.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                value: *v,
                best_so_far: *b,
                regret: (task.true_max() - b).max(0.0),
            });
        }
    }
    Ok(rows)
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(ROW_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCurve {
    pub task: String,
    pub surrogate: &'static str,
    pub policy: &'static str,
    pub param: String,
    /// Exponent for `alpha_p` policies, otherwise null.
    pub p: Option<f64>,
    pub metric: &'static str,
    pub n_runs: usize,
    pub step: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Regret and best-so-far curves per (task, surrogate, policy), over the
/// runs that completed.
pub fn aggregate_curves(outcomes: &[RunOutcome], include_init: bool) -> Result<Vec<AggregateCurve>> {
    let mut curves = Vec::new();
    let mut start = 0;
    while start < outcomes.len() {
        let c = &outcomes[start].job.config;
        let key = (&c.task, c.surrogate, c.policy);
        let end = start
            + outcomes[start..]
                .iter()
                .take_while(|o| (&o.job.config.task, o.job.config.surrogate, o.job.config.policy) == key)
                .count();
        let records: Vec<_> = outcomes[start..end].iter().filter_map(|o| o.result.as_ref().ok()).collect();
        if !records.is_empty() {
            let task = objectives::benchmark(&c.task)?;
            let regret: Vec<Vec<f64>> =
                records.iter().map(|r| harness::regret_trace(r, &task, include_init).regret).collect();
            let best: Vec<Vec<f64>> = records.iter().map(|r| harness::best_trace(r, include_init)).collect();
            for (metric, traces) in [("best_so_far", best), ("regret", regret)] {
                let agg = harness::aggregate(&traces)?;
                curves.push(AggregateCurve {
                    task: c.task.clone(),
                    surrogate: c.surrogate.name(),
                    policy: c.policy.kind(),
                    param: c.policy.param_label(),
                    p: match c.policy {
                        AcquisitionPolicy::AlphaP { p } => Some(p),
                        _ => None,
                    },
                    metric,
                    n_runs: records.len(),
                    // post-init step, or evaluation number with the init design included
                    step: (1..=agg.mean.len()).collect(),
                    mean: agg.mean,
                    std: agg.std,
                    stderr: agg.stderr,
                });
            }
        }
        start = end;
    }
    Ok(curves)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: &'a SweepConfig,
    pub jobs: usize,
    pub failures: FailureSummary,
    pub failed: Vec<FailedRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedRun {
    pub task: String,
    pub surrogate: &'static str,
    pub policy: String,
    pub seed: u64,
    pub error: String,
}

pub fn manifest<'a>(command: &'a str, config: &'a SweepConfig, outcomes: &[RunOutcome]) -> Manifest<'a> {
    let failed = outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().err().map(|e| FailedRun {
                task: o.job.config.task.clone(),
                surrogate: o.job.config.surrogate.name(),
                policy: o.job.config.policy.to_string(),
                seed: o.seed(),
                error: e.clone(),
            })
        })
        .collect();
    Manifest {
        schema_version: ROW_SCHEMA_VERSION,
        command,
        config,
        jobs: outcomes.len(),
        failures: FailureSummary::of(outcomes),
        failed,
    }
}

fn create(dir: &Path, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
    let path = dir.join(name);
    let f = std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(dir.join(name))
}

/// Writes rows, aggregates and the manifest for a finished sweep.
pub fn write_sweep(dir: &Path, command: &str, config: &SweepConfig, outcomes: &[RunOutcome]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut w = create(dir, ROWS_FILE)?;
    write_rows(&mut w, &result_rows(outcomes)?)?;
    w.flush()?;
    let aggregates = aggregate_curves(outcomes, config.include_init_steps)?;
    Ok(vec![
        dir.join(ROWS_FILE),
        write_json(dir, AGGREGATES_FILE, &aggregates)?,
        write_json(dir, MANIFEST_FILE, &manifest(command, config, outcomes))?,
    ])
}

pub fn write_index(dir: &Path, rows: &[IndexRow], summary: &[IndexSummary]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut w = csv::Writer::from_writer(create(dir, INDEX_FILE)?);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["task", "policy", "param", "seed", "index"])?;
    }
    w.flush()?;
    Ok(vec![dir.join(INDEX_FILE), write_json(dir, INDEX_SUMMARY_FILE, summary)?])
}

/// Grids for the acquisition tables.
#[derive(Debug, Clone, PartialEq)]
pub struct AcqTableSpec {
    pub p: Vec<f64>,
    pub w_min: f64,
    pub w_max: f64,
    pub w_points: usize,
    /// The σ grid is log-spaced between these bounds.
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_points: usize,
}

impl Default for AcqTableSpec {
    fn default() -> Self {
        Self {
            p: vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            w_min: -6.0,
            w_max: 6.0,
            w_points: 121,
            sigma_min: 1e-2,
            sigma_max: 1e2,
            sigma_points: 81,
        }
    }
}

impl AcqTableSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::Config(format!("p list must be non-empty and non-negative: {:?}", self.p)));
        }
        if !(self.w_min <= self.w_max) || self.w_points == 0 {
            return Err(Error::Config("invalid w range".into()));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max) || self.sigma_points == 0 {
            return Err(Error::Config("invalid sigma range".into()));
        }
        Ok(())
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn w_grid(&self) -> Vec<f64> {
        Self::grid(self.w_min, self.w_max, self.w_points)
    }

    /// Log-spaced, with the endpoints exact.
    pub fn sigma_grid(&self) -> Vec<f64> {
        let n = self.sigma_points;
        let mut g: Vec<f64> = Self::grid(self.sigma_min.ln(), self.sigma_max.ln(), n)
            .into_iter()
            .map(f64::exp)
            .collect();
        if n > 1 {
            g[0] = self.sigma_min;
            g[n - 1] = self.sigma_max;
        }
        g
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `(w, p, ŵα_p)` under both root conventions, and `α_p` at unit
/// gain `μ − y* = 1` over the σ grid. The `1/p` root is blank at `p = 0`.
pub fn write_acq_tables(dir: &Path, spec: &AcqTableSpec) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut w = csv::Writer::from_writer(create(dir, DIMENSIONLESS_FILE)?);
    w.write_record(["w", "p", "root_min", "root_inv"])?;
    for &p in &spec.p {
        for x in spec.w_grid() {
            let a = acquisition::alpha_p_dimensionless_with(x, p, RootConvention::MinInverse)?;
            let b = acquisition::alpha_p_dimensionless_with(x, p, RootConvention::Inverse).ok();
            w.write_record([x.to_string(), p.to_string(), a.to_string(), opt(b)])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(dir, UNIT_GAIN_FILE)?);
    w.write_record(["sigma", "p", "alpha", "root_min", "root_inv"])?;
    for &p in &spec.p {
        for sigma in spec.sigma_grid() {
            let alpha = acquisition::alpha_p_gaussian(&GaussianPrediction { mu: 1.0, sigma }, 0.0, p)?;
            let root_min = alpha.powf(if p <= 1.0 { 1.0 } else { 1.0 / p });
            let root_inv = (p > 0.0).then(|| alpha.powf(1.0 / p));
            w.write_record([sigma.to_string(), p.to_string(), alpha.to_string(), root_min.to_string(), opt(root_inv)])?;
        }
    }
    w.flush()?;
    Ok(vec![dir.join(DIMENSIONLESS_FILE), dir.join(UNIT_GAIN_FILE)])
}
