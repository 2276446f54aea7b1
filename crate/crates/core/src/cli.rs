//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or invalid parameters, 2 unreadable or
//! malformed input, 3 runtime failure (mechanism or output).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eval::{bound_experiment, error_report, utility_bound};
use crate::mechanism::{self, NoiseMode, PrivacyParams};
use crate::model::{contingency, ingest_csv, Dataset, IngestOptions};
use crate::rng::SeedKey;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "inftda",
    version,
    about = "Differentially private synthetic contingency tables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Release a private synthetic table and write an error report beside it.
    Run(RunArgs),
    /// Print the high-probability bound on the maximum error per level.
    Bound(BoundArgs),
    /// Repeat the mechanism and measure how often the error bound holds.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// One row per synthetic record.
    Records,
    /// One row per nonzero cell with a `count` column.
    Table,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Total zCDP budget, as a decimal (`0.5`) or fraction (`1/2`).
    #[arg(long)]
    pub rho: String,
    /// Failure probability used for the reported error bounds.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Seed for all randomness. Drawn from the OS and reported if omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hierarchy order as a comma-separated list of column names.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Disable noise. The output is NOT private; for testing only.
    #[arg(long)]
    pub zero_noise: bool,
    /// Worker thread cap (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Include wall-clock runtime in the JSON report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output CSV path. The report goes to the same path with extension `.report.json`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Records)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Path of the JSON report.
    #[arg(long)]
    pub output: PathBuf,
    /// Number of independent runs of the mechanism.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Level to evaluate (1..=d). Required unless --all-levels is given.
    #[arg(long, required_unless_present = "all_levels")]
    pub k: Option<usize>,
    /// Comma-separated domain sizes, one per attribute, in hierarchy order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub domains: Vec<usize>,
    /// Total zCDP budget, as a decimal (`0.5`) or fraction (`1/2`).
    #[arg(long)]
    pub rho: String,
    /// Failure probability of the bound.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Print the bound for every level 1..=d.
    #[arg(long)]
    pub all_levels: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }

    fn input(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Self::usage(e),
            other => Self {
                code: EXIT_PARSE,
                message: other.to_string(),
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, err),
        Command::Bound(args) => cmd_bound(args, out),
        Command::Evaluate(args) => cmd_evaluate(args, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn in_pool<T, F>(threads: Option<usize>, f: F) -> Result<T, Failure>
where
    T: Send,
    F: FnOnce() -> Result<T, Failure> + Send,
{
    match threads {
        None | Some(0) => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(Failure::runtime)?
            .install(f),
    }
}

fn check_beta(beta: f64) -> Result<(), Failure> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--beta must lie in (0, 1), got {beta}"
        )))
    }
}

struct Prepared {
    dataset: Dataset,
    params: PrivacyParams,
    seed: u64,
    noise: NoiseMode,
}

fn prepare(common: &CommonArgs, err: &mut dyn Write) -> Result<Prepared, Failure> {
    check_beta(common.beta)?;
    if common.threads == Some(0) {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    let rho = mechanism::parse_rational(&common.rho).map_err(Failure::usage)?;
    let file = fs::File::open(&common.input).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("cannot open {}: {e}", common.input.display()),
    })?;
    let options = IngestOptions {
        columns: common.columns.clone(),
    };
    let dataset = ingest_csv(file, &options).map_err(Failure::input)?;
    let params = PrivacyParams::new(rho, dataset.schema().depth()).map_err(Failure::usage)?;
    let seed = match common.seed {
        Some(seed) => seed,
        None => {
            let seed = rand::RngCore::next_u64(&mut rand::rngs::OsRng);
            let _ = writeln!(err, "using seed {seed}");
            seed
        }
    };
    let noise = if common.zero_noise {
        let _ = writeln!(
            err,
            "warning: --zero-noise output is not differentially private"
        );
        NoiseMode::Zero
    } else {
        NoiseMode::DiscreteGaussian
    };
    Ok(Prepared {
        dataset,
        params,
        seed,
        noise,
    })
}

/// `out.csv` -> `out.report.json`.
pub fn report_path(output: &Path) -> PathBuf {
    output.with_extension("report.json")
}

fn cmd_run(args: &RunArgs, err: &mut dyn Write) -> Result<(), Failure> {
    let started = Instant::now();
    let p = prepare(&args.common, err)?;
    let dp = in_pool(args.common.threads, || {
        mechanism::run(&p.dataset, &p.params, SeedKey::from_u64(p.seed), p.noise)
            .and_then(|tree| tree.to_table())
            .map_err(Failure::runtime)
    })?;
    let csv = match args.format {
        OutputFormat::Records => dp.materialize_records().to_csv(),
        OutputFormat::Table => dp.to_table_csv(),
    };
    let truth = contingency(&p.dataset);
    let mut report =
        error_report(&truth, &dp, &p.params, args.common.beta, p.seed).map_err(Failure::runtime)?;
    if args.common.timings {
        report.runtime_ms = Some(started.elapsed().as_millis() as u64);
    }
    fs::write(&args.output, csv).map_err(Failure::runtime)?;
    write_json(&report_path(&args.output), &report)?;
    Ok(())
}

fn cmd_evaluate(
    args: &EvaluateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let started = Instant::now();
    if args.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let p = prepare(&args.common, err)?;
    let mut report = in_pool(args.common.threads, || {
        bound_experiment(
            &p.dataset,
            &p.params,
            args.common.beta,
            args.trials,
            p.seed,
            p.noise,
        )
        .map_err(Failure::runtime)
    })?;
    if args.common.timings {
        report.runtime_ms = Some(started.elapsed().as_millis() as u64);
    }
    write_json(&args.output, &report)?;
    let _ = writeln!(
        out,
        "{:>5} {:>13} {:>12} {:>10}",
        "level", "max_abs_error", "bound", "pass_rate"
    );
    for l in &report.levels {
        let _ = writeln!(
            out,
            "{:>5} {:>13} {:>12.3} {:>10.3}",
            l.level, l.max_abs_error, l.bound, l.pass_rate
        );
    }
    let _ = writeln!(out, "joint pass rate: {:.3}", report.joint_pass_rate);
    Ok(())
}

fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> Result<(), Failure> {
    check_beta(args.beta)?;
    let rho = mechanism::parse_rational(&args.rho).map_err(Failure::usage)?;
    let params = PrivacyParams::new(rho, args.domains.len()).map_err(Failure::usage)?;
    let rho = num_traits::ToPrimitive::to_f64(params.rho()).unwrap_or(f64::INFINITY);
    let d = params.depth();
    let levels: Vec<usize> = if args.all_levels {
        (1..=d).collect()
    } else {
        vec![args.k.unwrap_or(0)]
    };
    for k in levels {
        let bound = utility_bound(k, d, rho, args.beta, &args.domains).map_err(Failure::usage)?;
        let _ = writeln!(out, "{bound:.3}");
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::runtime)?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}
