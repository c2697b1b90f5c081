//! The `ssc` command line: `check`, `gen` and `experiment`.
//!
//! Exit codes: 0 holds, 1 fails, 2 unknown, 3 usage error, 4 input/output
//! or data error.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::geometry::{FactorMatrix, Tolerances};
use crate::io::{read_matrix, write_csv, write_matrix_market, DenseMatrix, Format};
use crate::ssc::{check_ssc, Method, SscOptions};
use crate::synth::{csv_line, generate_raw, run_grid, success_table, GenSpec, GridSpec, CSV_HEADER};

pub const EXIT_USAGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "ssc", version, about = "Check the sufficiently scattered condition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a matrix is sufficiently scattered.
    Check(CheckArgs),
    /// Generate a random sparse nonnegative matrix.
    Gen(GenArgs),
    /// Run a success-rate grid over random matrices.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Csv,
    #[value(alias = "mm", alias = "mtx")]
    Matrixmarket,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Matrixmarket => Format::MatrixMarket,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Auto,
    Bnb,
    Oracle,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Bnb => Method::Bnb,
            MethodArg::Oracle => Method::Oracle,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Time budget in seconds.
    #[arg(long, default_value_t = 300.0)]
    pub deadline: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Squared-norm value that counts as a violation.
    #[arg(long, default_value_t = 1.0001)]
    pub stop_threshold: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub eps_feas: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_gap: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_pool: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta_unit: f64,
    /// Fail immediately when some row has fewer than r - 1 zeros.
    #[arg(long)]
    pub strict_sparsity: bool,
}

impl SolverArgs {
    fn options(&self, workers: usize) -> Result<SscOptions> {
        if !(self.deadline.is_finite() && self.deadline >= 0.0) {
            return Err(Error::InvalidSpec("deadline must be a nonnegative number".into()));
        }
        let tol = Tolerances {
            eps_feas: self.eps_feas,
            eps_gap: self.eps_gap,
            stop_threshold: self.stop_threshold,
            eps_pool: self.eps_pool,
            delta_unit: self.delta_unit,
        };
        tol.validate()?;
        Ok(SscOptions {
            tol,
            deadline: Duration::from_secs_f64(self.deadline),
            method: self.method.into(),
            workers,
            strict_sparsity: self.strict_sparsity,
            ..Default::default()
        })
    }
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the file extension (.mtx/.mm or CSV).
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Check the transpose of the file contents.
    #[arg(long)]
    pub transpose: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Search threads (further capped by SSC_THREADS).
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Ranks, as `a..b` (inclusive) or a comma list.
    #[arg(long)]
    pub r: String,
    #[arg(long)]
    pub k: String,
    /// n = nmult · r; several values allowed.
    #[arg(long, default_value = "5")]
    pub nmult: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Allow r > 10, which can take hours.
    #[arg(long)]
    pub allow_large: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Parses `a..b`, `a..=b`, `a` or `a,b,c`.
pub fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start in {s:?}"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad range end in {s:?}"))?;
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad value {t:?}")))
        .collect()
}

/// Worker cap from `SSC_THREADS`.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SSC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::InvalidTolerance(_) | Error::BudgetExceeded { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Check(a) => cmd_check(&a),
        Command::Gen(a) => cmd_gen(&a).map(|_| 0),
        Command::Experiment(a) => cmd_experiment(&a).map(|_| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_IO
        }
    }
}

fn cmd_check(a: &CheckArgs) -> std::result::Result<i32, Failure> {
    let workers = a.threads.max(1).min(thread_cap().unwrap_or(usize::MAX));
    let opts = a.solver.options(workers)?;
    let mut m = read_matrix(&a.input, a.format.map(Format::from))?;
    if a.transpose {
        m = m.transpose();
    }
    let h = FactorMatrix::from_row_major(m.rows, m.cols, &m.data)?;
    let report = check_ssc(&h, &opts)?;
    let json = report.to_json();
    match &a.json {
        Some(path) => {
            std::fs::write(path, json + "\n")?;
            eprintln!("{}", report.verdict_label);
        }
        None => println!("{json}"),
    }
    Ok(report.exit_code())
}

fn cmd_gen(a: &GenArgs) -> std::result::Result<(), Failure> {
    let spec = GenSpec {
        r: a.r,
        n: a.n,
        k: a.k,
        seed: a.seed,
    };
    let data = generate_raw(&spec)?;
    let m = DenseMatrix {
        rows: a.r,
        cols: a.n,
        data,
    };
    let text = match a.format {
        FormatArg::Csv => write_csv(&m),
        FormatArg::Matrixmarket => write_matrix_market(&m),
    };
    eprintln!(
        "gen r={} n={} k={} seed={} (ChaCha8 stream per column, Exp(1) weights)",
        spec.r, spec.n, spec.k, spec.seed
    );
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> std::result::Result<(), Failure> {
    let r_values = parse_list(&a.r).map_err(Failure::Usage)?;
    let k_values = parse_list(&a.k).map_err(Failure::Usage)?;
    let n_multipliers = parse_list(&a.nmult).map_err(Failure::Usage)?;
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    if r_values.iter().any(|&r| r < 2) || n_multipliers.contains(&0) {
        return Err(Failure::Usage("r must be at least 2 and nmult positive".into()));
    }
    if !a.allow_large && r_values.iter().any(|&r| r > 10) {
        return Err(Failure::Usage("r > 10 requires --allow-large".into()));
    }
    let grid = GridSpec {
        r_values,
        k_values,
        n_multipliers,
        trials: a.trials,
        seed_base: a.seed,
        options: a.solver.options(1)?,
    };

    let mut sink: Box<dyn Write + Send> = match &a.csv {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    writeln!(sink, "{CSV_HEADER}")?;
    sink.flush()?;
    let mut write_err = None;
    let mut run = || {
        run_grid(&grid, |rec| {
            let res = writeln!(sink, "{}", csv_line(rec)).and_then(|_| sink.flush());
            if let Err(e) = res {
                write_err.get_or_insert(e);
            }
            eprintln!(
                "r={} k={} n={}: {}/{} hold, {} timeouts",
                rec.r, rec.k, rec.n, rec.ssc_count, rec.trials, rec.timeout_count
            );
        })
    };
    let records = match thread_cap() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Io(e.to_string()))?
            .install(run),
        None => run(),
    }?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    eprint!("{}", success_table(&records));
    Ok(())
}
