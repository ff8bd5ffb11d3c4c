use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphabo::experiment::{self, FailureSummary, SweepConfig};
use alphabo::report::{self, AcqTableSpec};
use alphabo::Error;
use clap::{Args, Parser, Subcommand};

/// Exit status when some runs failed or fell back to random points.
const PARTIAL_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "alphabo", version, about = "Bayesian optimization experiments with the alpha_p acquisition family")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark sweep (regret curves)
    Bench(SweepArgs),
    /// One-dimensional toy sweep (best-so-far curves)
    Toy(SweepArgs),
    /// Paired TP/GP runs and the per-seed log regret-ratio index
    TpCompare(SweepArgs),
    /// Tables of the dimensionless and unit-gain acquisition values
    AcqTable(AcqTableArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named protocol: toy-paper, bench-paper or tp-paper
    #[arg(long)]
    preset: Option<String>,
    /// Override the number of seeds
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Count the initial design in aggregate curves
    #[arg(long)]
    include_init_steps: bool,
}

#[derive(Args)]
struct AcqTableArgs {
    /// Comma-separated exponents
    #[arg(long, value_delimiter = ',', default_values_t = AcqTableSpec::default().p)]
    p: Vec<f64>,
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    w_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    w_max: f64,
    #[arg(long, default_value_t = 121)]
    w_points: usize,
    #[arg(long, default_value_t = 1e-2)]
    sigma_min: f64,
    #[arg(long, default_value_t = 1e2)]
    sigma_max: f64,
    #[arg(long, default_value_t = 81)]
    sigma_points: usize,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

impl SweepArgs {
    fn resolve(&self) -> Result<SweepConfig, Error> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => SweepConfig::load(path)?,
            (None, Some(name)) => experiment::preset(name)?,
            (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
        };
        if let Some(n) = self.seeds {
            config.n_seeds = n;
        }
        if let Some(w) = self.workers {
            config.workers = Some(w);
        }
        if self.include_init_steps {
            config.include_init_steps = true;
        }
        config.validate()?;
        Ok(config)
    }
}

fn workers(config: &SweepConfig) -> usize {
    config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn finish(summary: FailureSummary) -> ExitCode {
    if summary.is_clean() {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "{} of {} runs failed; {} steps fell back to random points",
            summary.failed_runs, summary.runs, summary.fallback_steps
        );
        ExitCode::from(PARTIAL_FAILURE)
    }
}

fn sweep(command: &str, args: &SweepArgs) -> Result<ExitCode, Error> {
    let config = args.resolve()?;
    let jobs = config.jobs()?;
    log::info!("{command}: {} runs on {} workers", jobs.len(), workers(&config));
    let outcomes = experiment::execute(jobs, workers(&config))?;
    report_files(&report::write_sweep(&args.out_dir, command, &config, &outcomes)?);
    Ok(finish(FailureSummary::of(&outcomes)))
}

fn tp_compare(args: &SweepArgs) -> Result<ExitCode, Error> {
    let config = args.resolve()?;
    if config.surrogates.len() != 2 {
        return Err(Error::Config("tp-compare needs `surrogates` = [treatment, baseline]".into()));
    }
    let outcomes = experiment::execute(config.jobs()?, workers(&config))?;
    let mut files = report::write_sweep(&args.out_dir, "tp-compare", &config, &outcomes)?;
    let (rows, summary) = experiment::tp_compare_indices(&config, &outcomes)?;
    files.extend(report::write_index(&args.out_dir, &rows, &summary)?);
    report_files(&files);
    for s in &summary {
        println!("{} {}({}): index {:.4} ± {:.4} over {} seeds", s.task, s.policy, s.param, s.mean, s.stderr, s.n_seeds);
    }
    Ok(finish(FailureSummary::of(&outcomes)))
}

fn acq_table(args: &AcqTableArgs) -> Result<ExitCode, Error> {
    let spec = AcqTableSpec {
        p: args.p.clone(),
        w_min: args.w_min,
        w_max: args.w_max,
        w_points: args.w_points,
        sigma_min: args.sigma_min,
        sigma_max: args.sigma_max,
        sigma_points: args.sigma_points,
    };
    report_files(&report::write_acq_tables(Path::new(&args.out_dir), &spec)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Bench(args) => sweep("bench", args),
        Command::Toy(args) => sweep("toy", args),
        Command::TpCompare(args) => tp_compare(args),
        Command::AcqTable(args) => acq_table(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
