use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyeig::format::{read_blocks, read_mpoly, write_mpoly};
use polyeig::generate::{random_polynomial, NormProfile};
use polyeig::solver::finite_value;
use polyeig::{solve, Flavor, MatrixPolynomial, ScaleMode, Side, Solution, SolverOptions, C64};

mod report;

use report::Table;

/// Environment variable overriding the largest `n = d·k` that `check` accepts.
const DENSE_LIMIT_VAR: &str = "POLYEIG_DENSE_LIMIT";
const DEFAULT_DENSE_LIMIT: usize = 64;

#[derive(Parser)]
#[command(name = "polyeig", version, about = "Eigenvalues and eigenvectors of matrix polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, and optionally eigenvectors with residuals, as CSV.
    Solve(SolveArgs),
    /// Backward error of the computed Schur form, with dense accumulation.
    Check(CheckArgs),
    /// Median wall time of the structured solver over a grid of sizes.
    Bench(BenchArgs),
    /// Write a random problem file.
    Gen(GenArgs),
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value_t = FlavorArg::Gaussian)]
    flavor: FlavorArg,
    #[arg(long, value_enum, default_value_t = ScaleArg::Coeff)]
    scale: ScaleArg,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file in `mpoly 1` format.
    input: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Left eigenvectors, `wᵀ·P(λ) = 0`.
    #[arg(long, conflicts_with = "right")]
    left: bool,
    /// Right eigenvectors, `P(λ)·v = 0`.
    #[arg(long)]
    right: bool,
    /// Blocks `N_1 .. N_{d−1}` of the pencil split, as `mpoly 1` with `<d−1> <k>`.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Degrees to time, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32])]
    d: Vec<usize>,
    /// Coefficient sizes to time, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4])]
    k: Vec<usize>,
    /// Timed runs per grid point; the median is reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include left eigenvector extraction in the timing.
    #[arg(long)]
    vectors: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Uniform)]
    profile: ProfileArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Gaussian,
    Frobenius,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Coeff,
    Pencil,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Uniform,
    Unbalanced,
}

impl PipelineArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            flavor: match self.flavor {
                FlavorArg::Gaussian => Flavor::Gaussian,
                FlavorArg::Frobenius => Flavor::Frobenius,
            },
            scale: match self.scale {
                ScaleArg::Coeff => ScaleMode::CoefficientNorm,
                ScaleArg::Pencil => ScaleMode::PencilMax,
                ScaleArg::None => ScaleMode::None,
            },
            ..Default::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Solver(#[from] polyeig::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use polyeig::Error as E;
        match self {
            CliError::Solver(E::Parse(_)) => 3,
            CliError::Solver(E::Dimension(_)) => 4,
            CliError::Solver(E::Convergence(_)) => 5,
            CliError::SizeLimit(_) => 6,
            CliError::Io { .. } => 7,
            CliError::Solver(E::Input(_)) | CliError::Usage(_) => 8,
            CliError::Solver(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn read_problem(path: &Path) -> CliResult<MatrixPolynomial> {
    Ok(read_mpoly(&read_text(path)?)?)
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eigen_row(table: &mut Table, lambda: (C64, C64)) {
    match finite_value(lambda) {
        Some(z) => table.push(z.re).push(z.im).push(0),
        None => table.push(f64::INFINITY).push(0.0).push(1),
    };
}

fn solve_table(sol: &Solution, k: usize) -> Table {
    let mut header = vec!["re".to_string(), "im".into(), "is_infinite".into()];
    if sol.side == Side::None {
        let mut table = Table::new(header);
        for &lambda in &sol.eigenvalues {
            eigen_row(&mut table, lambda);
            table.end_row();
        }
        return table;
    }
    header.push("residual".into());
    header.extend((0..k).flat_map(|j| [format!("v{j}_re"), format!("v{j}_im")]));
    let mut table = Table::new(header);
    for pair in &sol.eigenpairs {
        eigen_row(&mut table, pair.lambda);
        table.push(pair.residual);
        for z in &pair.vector {
            table.push(z.re).push(z.im);
        }
        table.end_row();
    }
    table
}

fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let p = read_problem(&args.input)?;
    let mut opts = args.pipeline.options();
    opts.vectors = match (args.left, args.right) {
        (true, _) => Side::Left,
        (_, true) => Side::Right,
        _ => Side::None,
    };
    if let Some(path) = &args.split {
        opts.split = Some(read_blocks(&read_text(path)?, p.size(), p.degree() - 1)?);
    }
    let sol = solve(&p, &opts)?;
    emit(&solve_table(&sol, p.size()).to_csv(), args.output.as_deref())
}

fn dense_limit() -> CliResult<usize> {
    match std::env::var(DENSE_LIMIT_VAR) {
        Err(_) => Ok(DEFAULT_DENSE_LIMIT),
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{DENSE_LIMIT_VAR} must be an integer, got `{v}`"))),
    }
}

fn cmd_check(args: &CheckArgs) -> CliResult<()> {
    let p = read_problem(&args.input)?;
    let n = p.degree() * p.size();
    let limit = dense_limit()?;
    if n > limit {
        return Err(CliError::SizeLimit(format!(
            "n = {n} exceeds the dense limit {limit}; raise {DENSE_LIMIT_VAR} to allow it"
        )));
    }
    let opts = SolverOptions { dense_check: true, ..args.pipeline.options() };
    let b = solve(&p, &opts)?.backward.expect("dense check was requested");
    let mut table = Table::new(["s_error", "t_error", "s_norm", "t_norm", "alpha"]);
    table.push(b.s_error).push(b.t_error).push(b.s_norm).push(b.t_norm).push(b.alpha).end_row();
    emit(&table.to_csv(), args.output.as_deref())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 { xs[m] } else { 0.5 * (xs[m - 1] + xs[m]) }
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    if args.reps == 0 || args.d.contains(&0) || args.k.contains(&0) {
        return Err(CliError::Usage("grid values and --reps must be positive".into()));
    }
    let mut opts = args.pipeline.options();
    if args.vectors {
        opts.vectors = Side::Left;
    }
    let mut table = Table::new(["d", "k", "seconds", "sweeps", "turnovers"]);
    table.comment("seconds: median wall time of the structured solver only (factor, reduce, iterate); no dense baseline, no file I/O");
    for &d in &args.d {
        for &k in &args.k {
            let p = random_polynomial(d, k, args.seed, NormProfile::Uniform);
            let mut times = Vec::with_capacity(args.reps);
            let mut counters = None;
            for _ in 0..args.reps {
                let start = Instant::now();
                let sol = solve(&p, &opts)?;
                times.push(start.elapsed().as_secs_f64());
                counters = Some(sol.counters);
            }
            let c = counters.expect("at least one repetition");
            table.push(d).push(k).push(median(times)).push(c.sweeps).push(c.turnovers).end_row();
        }
    }
    emit(&table.to_csv(), args.output.as_deref())
}

fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    if args.d == 0 || args.k == 0 {
        return Err(CliError::Solver(polyeig::Error::Input("--d and --k must be at least 1".into())));
    }
    let profile = match args.profile {
        ProfileArg::Uniform => NormProfile::Uniform,
        ProfileArg::Unbalanced => NormProfile::Unbalanced,
    };
    emit(&write_mpoly(&random_polynomial(args.d, args.k, args.seed, profile)), args.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Check(a) => cmd_check(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polyeig: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
