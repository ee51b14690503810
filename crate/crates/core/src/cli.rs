//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 I/O or parse error, 3 invalid
//! parameters. Matrix files ending in `.blpm` are binary, anything else is
//! CSV (see [`crate::io`]).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    fit_complexity, generate_matrix, identity_sweep_in, median, sparsity_sweep, time_projection,
    write_bench_csv, write_identity_csv, write_sparsity_csv, Distribution, RadiusGrid,
};
use crate::bilevel::{make_report, project, BallSpec, Family};
use crate::error::{Error, Result};
use crate::io::{read_matrix, write_matrix};
use crate::matrix::MatrixNorm;
use crate::vector::Radius;

/// Environment variable read when `--threads` is not given.
pub const THREADS_ENV: &str = "BILEVEL_THREADS";

/// Relative bound on the identity gap accepted by `check-identity`.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bilevel", version, about = "Structured-sparsity matrix projections")]
pub struct Cli {
    /// Worker threads (default: 1 for `bench`, all cores otherwise).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a matrix onto a norm ball.
    Project(ProjectArgs),
    /// Sweep radii and check the norm identity ||Y-X|| + ||X|| = ||Y||.
    CheckIdentity(CheckIdentityArgs),
    /// Time projections and fit complexity models.
    Bench(BenchArgs),
    /// Generate a synthetic matrix.
    Gen(GenArgs),
    /// Count zero columns along a radius grid.
    Sparsity(SparsityArgs),
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// l1inf, l11, l12 or l1inf-exact.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub radius: f64,
    /// Write the projection report as key=value lines.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormChoice {
    /// The norm of the projection family.
    Matching,
    /// Frobenius norm.
    L22,
}

#[derive(Debug, Args)]
pub struct CheckIdentityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub family: String,
    /// `log:lo:hi:count`, `rel:count` or comma separated radii.
    #[arg(long, default_value = "rel:40")]
    pub radius_grid: String,
    #[arg(long, value_enum, default_value_t = NormChoice::Matching)]
    pub norm: NormChoice,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "bp-l1inf")]
    pub methods: Vec<String>,
    /// Comma separated `ROWSxCOLS` sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Samples CSV (`method,n,m,repeat,seconds`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistChoice {
    Gaussian,
    Uniform,
    SparseSignal,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, value_enum, default_value_t = DistChoice::Gaussian)]
    pub dist: DistChoice,
    /// Informative columns for `sparse-signal`.
    #[arg(long, default_value_t = 0)]
    pub informative: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "bp-l1inf,bp-l11,bp-l12,l1inf-exact")]
    pub methods: Vec<String>,
    #[arg(long, default_value = "rel:40")]
    pub radius_grid: String,
    /// Sweep CSV (`eta,method,zero_columns`); standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) | Error::Parse(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn parse_families(names: &[String]) -> Result<Vec<Family>> {
    names.iter().map(|n| n.parse()).collect()
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("size `{s}` is not ROWSxCOLS"));
    let (n, m) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let n: usize = n.parse().map_err(|_| bad())?;
    let m: usize = m.parse().map_err(|_| bad())?;
    if n == 0 || m == 0 {
        return Err(bad());
    }
    Ok((n, m))
}

fn resolve_threads(cli: &Cli) -> Result<usize> {
    let default = match cli.command {
        Command::Bench(_) => 1,
        _ => 0,
    };
    let threads = match cli.threads {
        Some(t) => t,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("{THREADS_ENV}=`{v}` is not a thread count"))
            })?,
            Err(_) => default,
        },
    };
    Ok(threads)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_INVALID
                }
            };
        }
    };
    let result = resolve_threads(&cli).and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut buffer = Vec::new();
        let code = pool.install(|| dispatch(&cli, &mut buffer));
        out.write_all(&buffer)?;
        code
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>) -> Result<i32> {
    match &cli.command {
        Command::Project(args) => cmd_project(args),
        Command::CheckIdentity(args) => cmd_check_identity(args, out),
        Command::Bench(args) => cmd_bench(args, out),
        Command::Gen(args) => cmd_gen(args),
        Command::Sparsity(args) => cmd_sparsity(args, out),
    }
}

pub fn cmd_project(args: &ProjectArgs) -> Result<i32> {
    let spec = BallSpec::new(args.family.parse()?, args.radius)?;
    let y = read_matrix(&args.input)?;
    let x = project(&y, spec)?;
    write_matrix(&args.output, &x)?;
    if let Some(path) = &args.report {
        let report = make_report(&y, &x, spec)?;
        std::fs::write(path, report.to_key_values())?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_check_identity(args: &CheckIdentityArgs, out: &mut dyn Write) -> Result<i32> {
    let family: Family = args.family.parse()?;
    let grid: RadiusGrid = args.radius_grid.parse()?;
    let y = read_matrix(&args.input)?;
    let norm = match args.norm {
        NormChoice::Matching => family.norm(),
        NormChoice::L22 => MatrixNorm::Frobenius,
    };
    let curve = identity_sweep_in(&y, family, &grid, norm)?;
    write_identity_csv(&mut *out, &curve)?;
    let bound = IDENTITY_TOLERANCE * y.norm(norm).max(1.0);
    let worst = curve.values.iter().map(|p| p.gap.abs()).fold(0.0, f64::max);
    Ok(if worst <= bound { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let methods = parse_families(&args.methods)?;
    let sizes = args
        .sizes
        .iter()
        .map(|s| parse_size(s))
        .collect::<Result<Vec<_>>>()?;
    let eta = Radius::new(args.radius)?;
    if args.repeats < 3 {
        return Err(Error::InvalidParameter(format!(
            "--repeats must be at least 3, got {}",
            args.repeats
        )));
    }
    writeln!(out, "threads: {}", rayon::current_num_threads())?;
    let mut all = Vec::new();
    for &method in &methods {
        let samples = time_projection(method, &sizes, args.repeats, eta, args.seed)?;
        for &(n, m) in &sizes {
            let mut times: Vec<f64> = samples
                .iter()
                .filter(|s| (s.rows, s.cols) == (n, m))
                .map(|s| s.seconds)
                .collect();
            writeln!(out, "{method} {n}x{m} median {:.6e} s", median(&mut times))?;
        }
        match fit_complexity(&samples) {
            Ok(fit) => writeln!(out, "{method} fit: {fit}")?,
            Err(_) => writeln!(out, "{method} fit: skipped (needs at least 4 sizes)")?,
        }
        all.extend(samples);
    }
    if let Some(path) = &args.out {
        let file = BufWriter::new(File::create(path)?);
        write_bench_csv(file, &all)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let dist = match args.dist {
        DistChoice::Gaussian => Distribution::Gaussian,
        DistChoice::Uniform => Distribution::Uniform,
        DistChoice::SparseSignal => Distribution::SparseSignal {
            informative: args.informative,
        },
    };
    let y = generate_matrix(args.rows, args.cols, dist, args.seed)?;
    write_matrix(&args.out, &y)?;
    Ok(EXIT_OK)
}

pub fn cmd_sparsity(args: &SparsityArgs, out: &mut dyn Write) -> Result<i32> {
    let methods = parse_families(&args.methods)?;
    let grid: RadiusGrid = args.radius_grid.parse()?;
    let y = read_matrix(&args.input)?;
    let sweep = sparsity_sweep(&y, &methods, &grid)?;
    match &args.out {
        Some(path) => write_sparsity_csv(BufWriter::new(File::create(path)?), &sweep)?,
        None => write_sparsity_csv(&mut *out, &sweep)?,
    }
    for (method, cumulative) in methods.iter().zip(&sweep.cumulative) {
        writeln!(out, "cumulative sparsity {method}: {cumulative:.6}")?;
    }
    Ok(EXIT_OK)
}
