//! Command-line front end.
//!
//! Exit codes: 0 success, 2 insufficient data, 64 invalid flags or
//! parameters, 65 malformed input, 70 internal error, 74 I/O error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::distributions::DistSpec;
use crate::error::Error;
use crate::estimator::{estimate_moment, estimate_with_batching, median_of_means_with_batching, BatchStream};
use crate::ingest::{self, TokenFormat};
use crate::planner::{plan_samples, required_batches, SamplePlan};
use crate::regime::learn_regime;
use crate::report::{BenchSummary, ConfigEcho, ErrorReport, ReportBody, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INSUFFICIENT_DATA: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_INTERNAL: i32 = 70;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "collide", version, about = "Frequency-moment and Renyi entropy estimation by collision counting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate sum_x p(x)^d and H_d from a token stream.
    Estimate(EstimateArgs),
    /// Print the sample plan for a target precision and entropy bound.
    Plan(PlanArgs),
    /// Bracket the moment with a doubling search over thresholds 2^-lambda.
    Regime(RegimeArgs),
    /// Repeated seeded runs against a known distribution; per-run CSV on stdout.
    Bench(BenchArgs),
    /// Draw samples from a distribution spec.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input file; standard input when absent or "-".
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Read 8-byte little-endian records instead of text lines.
    #[arg(long)]
    pub binary: bool,
}

impl InputArgs {
    fn format(&self) -> TokenFormat {
        if self.binary {
            TokenFormat::Binary
        } else {
            TokenFormat::Text
        }
    }

    fn format_name(&self) -> String {
        if self.binary { "binary" } else { "text" }.to_string()
    }
}

#[derive(Debug, Args)]
pub struct PrecisionArgs {
    /// Moment order.
    #[arg(short = 'd', long = "order", default_value_t = 2)]
    pub d: u32,
    /// Relative error target.
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Failure probability.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    /// Fixed batch length.
    #[arg(long, conflicts_with = "entropy_bound")]
    pub batch_size: Option<u64>,
    /// Upper bound on H_d in bits; runs the planned sample count.
    #[arg(long)]
    pub entropy_bound: Option<f64>,
    /// Add wall-clock and throughput to the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub precision: PrecisionArgs,
    /// Upper bound on H_d in bits.
    #[arg(long)]
    pub entropy_bound: f64,
}

#[derive(Debug, Args)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Moment order.
    #[arg(short = 'd', long = "order", default_value_t = 2)]
    pub d: u32,
    /// Total failure probability, split evenly across the tests.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Last test to run; the search covers moments down to 2^-lambda_max.
    #[arg(long)]
    pub lambda_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    Mean,
    MedianOfMeans,
}

impl EstimatorKind {
    fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mean => "mean",
            EstimatorKind::MedianOfMeans => "median-of-means",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Distribution spec, e.g. uniform:m=64 or zipf:m=256,s=1.
    #[arg(long)]
    pub dist: String,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[arg(long, default_value_t = 200)]
    pub runs: u64,
    /// Base seed; run i uses seed + i.
    #[arg(long, env = "COLLIDE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Mean)]
    pub estimator: EstimatorKind,
    /// Groups for the median-of-means estimator.
    #[arg(long, default_value_t = 9)]
    pub groups: u64,
    /// Entropy bound for the plan; defaults to the distribution's exact H_d.
    #[arg(long)]
    pub entropy_bound: Option<f64>,
    /// Write the summary report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Distribution spec, as for bench.
    #[arg(long)]
    pub dist: String,
    /// Number of samples.
    #[arg(short = 'n', long)]
    pub count: usize,
    #[arg(long, env = "COLLIDE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Emit 8-byte little-endian records instead of one decimal symbol per line.
    #[arg(long)]
    pub binary: bool,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// A failed command, mapped to an exit code by [`run`].
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::InsufficientData { .. } | Error::StreamExhausted { .. }) => {
                EXIT_INSUFFICIENT_DATA
            }
            CliError::Core(Error::Consistency(_)) => EXIT_INTERNAL,
            CliError::Core(_) => EXIT_USAGE,
            CliError::Io(e) if e.kind() == io::ErrorKind::InvalidData => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn to_report(&self) -> ErrorReport {
        let mut r = ErrorReport {
            kind: String::new(),
            message: match self {
                CliError::Core(e) => e.to_string(),
                CliError::Io(e) => e.to_string(),
            },
            required: None,
            available: None,
            last_completed_lambda: None,
        };
        r.kind = match self {
            CliError::Core(Error::InsufficientData { required, available }) => {
                r.required = Some(*required);
                r.available = Some(*available);
                "insufficient_data"
            }
            CliError::Core(Error::StreamExhausted {
                last_completed,
                samples_used,
                required,
                ..
            }) => {
                r.required = Some(*required);
                r.available = Some(*samples_used);
                r.last_completed_lambda = Some(*last_completed);
                "insufficient_data"
            }
            CliError::Core(Error::Consistency(_)) => "internal",
            CliError::Core(_) => "invalid_parameters",
            CliError::Io(e) if e.kind() == io::ErrorKind::InvalidData => "invalid_input",
            CliError::Io(_) => "io",
        }
        .to_string();
        r
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Estimate(a) => report_command(cmd_estimate(&a, stdin), stdout),
        Command::Plan(a) => report_command(cmd_plan(&a), stdout),
        Command::Regime(a) => report_command(cmd_regime(&a, stdin), stdout),
        Command::Bench(a) => cmd_bench(&a, stdout).map(|_| EXIT_OK),
        Command::Sample(a) => cmd_sample(&a, stdout).map(|_| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.to_report().message);
            f.exit_code()
        }
    }
}

/// A report plus the failure (if any) that ended the run after the report was started.
pub type Outcome = (RunReport, Option<CliError>);

/// Prints the report; a failure carried alongside it becomes the exit code.
fn report_command(res: Result<Outcome, CliError>, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (mut report, failure) = res?;
    if let Some(f) = &failure {
        report.error = Some(f.to_report());
    }
    stdout.write_all(report.to_json().as_bytes())?;
    stdout.flush()?;
    match failure {
        Some(f) => Err(f),
        None => Ok(EXIT_OK),
    }
}

fn open_input<'a>(input: &InputArgs, stdin: &'a mut dyn BufRead) -> io::Result<Box<dyn BufRead + 'a>> {
    match &input.input {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufReader::with_capacity(1 << 16, File::open(p)?))),
        _ => Ok(Box::new(stdin)),
    }
}

fn set_timing(report: &mut RunReport, start: Instant) {
    let secs = start.elapsed().as_secs_f64();
    report.stats.wall_clock_secs = Some(secs);
    report.stats.tokens_per_sec = Some(report.stats.tokens_read as f64 / secs.max(1e-9));
}

pub fn cmd_estimate(args: &EstimateArgs, stdin: &mut dyn BufRead) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let p = &args.precision;
    let mut config = EstimatorConfig::new(p.d, p.eps, p.delta)?;
    if let Some(n0) = args.batch_size {
        config = config.with_batch_size(n0)?;
    }
    let echo = ConfigEcho {
        d: Some(p.d),
        epsilon: Some(p.eps),
        delta: Some(p.delta),
        batch_size: args.batch_size,
        entropy_bound: args.entropy_bound,
        input_format: Some(args.input.format_name()),
        ..Default::default()
    };
    let mut report = RunReport::new("estimate", echo);

    let plan = args
        .entropy_bound
        .map(|h| plan_samples(&config, h))
        .transpose()?;
    let batching = match (&plan, config.batch_size) {
        (Some(plan), _) => Some((plan.batch_size, plan.n_batches)),
        (None, Some(n0)) => Some((n0, required_batches(config.epsilon, config.delta, 1.0)?)),
        (None, None) => None,
    };

    let reader = open_input(&args.input, stdin)?;
    let tokens = ingest::tokens(args.input.format(), reader);
    let result = match batching {
        Some((n0, m)) => {
            let mut stream = BatchStream::new(config.d, n0, m)?;
            for tok in tokens {
                stream.push(tok?)?;
                report.stats.tokens_read += 1;
            }
            stream.finish()
        }
        None => {
            let samples = tokens.collect::<io::Result<Vec<u64>>>()?;
            report.stats.tokens_read = samples.len() as u64;
            estimate_moment(&samples, &config)
        }
    };
    if args.timing {
        set_timing(&mut report, start);
    }
    match result {
        Ok(estimate) => {
            report.stats.peak_distinct_per_batch = estimate.peak_distinct;
            report.result = Some(ReportBody::Estimate { plan, estimate });
            Ok((report, None))
        }
        Err(e) => Ok((report, Some(e.into()))),
    }
}

pub fn cmd_plan(args: &PlanArgs) -> Result<Outcome, CliError> {
    let p = &args.precision;
    let config = EstimatorConfig::new(p.d, p.eps, p.delta)?;
    let plan = plan_samples(&config, args.entropy_bound)?;
    let mut report = RunReport::new(
        "plan",
        ConfigEcho {
            d: Some(p.d),
            epsilon: Some(p.eps),
            delta: Some(p.delta),
            entropy_bound: Some(args.entropy_bound),
            ..Default::default()
        },
    );
    report.result = Some(ReportBody::Plan(plan));
    Ok((report, None))
}

pub fn cmd_regime(args: &RegimeArgs, stdin: &mut dyn BufRead) -> Result<Outcome, CliError> {
    let mut report = RunReport::new(
        "regime",
        ConfigEcho {
            d: Some(args.d),
            delta: Some(args.delta),
            lambda_max: Some(args.lambda_max),
            input_format: Some(args.input.format_name()),
            ..Default::default()
        },
    );
    let reader = open_input(&args.input, stdin)?;
    let mut io_error = None;
    let mut read = 0u64;
    let tokens = ingest::tokens(args.input.format(), reader).map_while(|t| match t {
        Ok(v) => {
            read += 1;
            Some(v)
        }
        Err(e) => {
            io_error = Some(e);
            None
        }
    });
    let result = learn_regime(tokens, args.d, args.delta, args.lambda_max);
    report.stats.tokens_read = read;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    match result {
        Ok(r) => {
            report.stats.peak_distinct_per_batch = 0;
            report.result = Some(ReportBody::Regime(r));
            Ok((report, None))
        }
        Err(e) => Ok((report, Some(e.into()))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub run: u64,
    pub estimator: &'static str,
    pub p_true: f64,
    pub p_hat: f64,
    pub rel_err: f64,
    pub covered: bool,
}

/// Seeded runs of the chosen estimator at the planned sample count.
pub fn bench_rows(args: &BenchArgs) -> Result<(SamplePlan, f64, Vec<BenchRow>, u64), Error> {
    let spec: DistSpec = args.dist.parse()?;
    let dist = spec.build()?;
    let p = &args.precision;
    let config = EstimatorConfig::new(p.d, p.eps, p.delta)?.with_seed(args.seed);
    let p_true = dist.exact_moment(p.d);
    let bound = match args.entropy_bound {
        Some(h) => h,
        None => dist.exact_entropy(p.d)?,
    };
    let plan = plan_samples(&config, bound)?;
    if args.estimator == EstimatorKind::MedianOfMeans && (args.groups == 0 || args.groups > plan.n_batches) {
        return Err(Error::Precondition(format!(
            "groups = {} must lie in [1, {}]",
            args.groups, plan.n_batches
        )));
    }
    let results: Vec<(BenchRow, u64)> = (0..args.runs)
        .into_par_iter()
        .map(|run| {
            let samples = dist.sample(plan.n_total as usize, args.seed.wrapping_add(run));
            let est = match args.estimator {
                EstimatorKind::Mean => estimate_with_batching(&samples, p.d, plan.batch_size, plan.n_batches)?,
                EstimatorKind::MedianOfMeans => median_of_means_with_batching(
                    &samples,
                    p.d,
                    plan.batch_size,
                    plan.n_batches,
                    args.groups,
                )?,
            };
            let rel_err = (est.p_hat - p_true).abs() / p_true;
            Ok((
                BenchRow {
                    run,
                    estimator: args.estimator.name(),
                    p_true,
                    p_hat: est.p_hat,
                    rel_err,
                    covered: rel_err <= p.eps,
                },
                est.peak_distinct,
            ))
        })
        .collect::<Result<_, Error>>()?;
    let peak = results.iter().map(|r| r.1).max().unwrap_or(0);
    Ok((plan, p_true, results.into_iter().map(|r| r.0).collect(), peak))
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let p = &args.precision;
    let (plan, p_true, rows, peak) = bench_rows(args)?;
    {
        let mut w = csv::Writer::from_writer(&mut *stdout);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.report {
        let failures = rows.iter().filter(|r| !r.covered).count() as u64;
        let runs = rows.len() as u64;
        let mut report = RunReport::new(
            "bench",
            ConfigEcho {
                d: Some(p.d),
                epsilon: Some(p.eps),
                delta: Some(p.delta),
                entropy_bound: args.entropy_bound,
                dist: Some(args.dist.clone()),
                runs: Some(args.runs),
                estimator: Some(args.estimator.name().to_string()),
                groups: (args.estimator == EstimatorKind::MedianOfMeans).then_some(args.groups),
                seed: Some(args.seed),
                ..Default::default()
            },
        );
        report.stats.tokens_read = plan.n_total * runs;
        report.stats.peak_distinct_per_batch = peak;
        report.result = Some(ReportBody::Bench(BenchSummary {
            p_true,
            plan,
            runs,
            failures,
            coverage: if runs == 0 { 1.0 } else { 1.0 - failures as f64 / runs as f64 },
            mean_rel_err: if runs == 0 {
                0.0
            } else {
                rows.iter().map(|r| r.rel_err).sum::<f64>() / runs as f64
            },
        }));
        std::fs::write(path, report.to_json())?;
    }
    Ok(())
}

pub fn cmd_sample(args: &SampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let dist = args.dist.parse::<DistSpec>()?.build()?;
    let mut out: Box<dyn Write + '_> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(stdout)),
    };
    let sampler = dist.sampler(args.seed).take(args.count);
    if args.binary {
        for s in sampler {
            out.write_all(&s.to_le_bytes())?;
        }
    } else {
        for s in sampler {
            writeln!(out, "{s}")?;
        }
    }
    out.flush()?;
    Ok(())
}
