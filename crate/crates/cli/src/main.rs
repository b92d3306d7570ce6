//! `phfem` command-line driver.

mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phfem::analysis::ManufacturedProblem;
use phfem::bench::run_benchmark;
use phfem::mesh::Mesh;
use phfem::refine::refine_uniform;
use phfem::study::{run_convergence_study, solve_level, StudyOptions, StudyReport};
use phfem::topology::Discretization;

use config::{FileConfig, Origin, Settings};

/// Primal hybrid finite elements on triangular meshes.
#[derive(Debug, Parser)]
#[command(name = "phfem", version)]
struct Cli {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the edge table of a mesh.
    Topology(CommonArgs),
    /// Refine a mesh uniformly and write the result.
    Refine(CommonArgs),
    /// Solve an elliptic manufactured problem on each level.
    SolveElliptic(CommonArgs),
    /// Solve a parabolic manufactured problem on each level.
    SolveParabolic(CommonArgs),
    /// Convergence study with error and order tables.
    Convergence(CommonArgs),
    /// Time refinement, topology and assembly per level.
    Bench(CommonArgs),
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Directory with coordinates.dat, elements.dat, Dirichlet.dat and
    /// Neumann.dat. Defaults to the built-in unit square.
    #[arg(long, value_name = "DIR")]
    pub mesh: Option<PathBuf>,
    /// Manufactured problem: elliptic-poly or parabolic-poly.
    #[arg(long)]
    pub problem: Option<String>,
    /// Refinement level `n` or inclusive range `a..b`.
    #[arg(long, value_name = "RANGE")]
    pub levels: Option<String>,
    /// Time step; defaults to the mesh size of each level.
    #[arg(long)]
    pub k: Option<f64>,
    /// Final time of parabolic runs.
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Time of the initial state.
    #[arg(long = "time-origin", value_enum)]
    pub time_origin: Option<Origin>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write the finest solution as element and multiplier CSV files.
    #[arg(long = "export-solution", value_name = "DIR")]
    pub export_solution: Option<PathBuf>,
    /// Diffusion tensor entries `a11,a12,a21,a22`.
    #[arg(long, value_name = "A11,A12,A21,A22", value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Option<Vec<f64>>,
    /// Convection vector `p1,p2`.
    #[arg(long, value_name = "P1,P2", value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Reaction coefficient.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Largest accepted constraint residual.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<phfem::error::Error> for CliError {
    fn from(err: phfem::error::Error) -> Self {
        use phfem::error::Error as E;
        let code = match err {
            E::InvalidArgument(_) | E::UnknownProblem(_) | E::InvalidCoefficients(_) => EXIT_CONFIG,
            E::Singular(_) | E::Solver(_) | E::BlowUp(_) | E::NonFiniteData { .. } | E::DimensionMismatch(_) => {
                EXIT_SOLVER
            }
            _ => EXIT_IO,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn load_mesh(settings: &Settings) -> CliResult<Mesh> {
    match &settings.mesh {
        Some(dir) => Ok(Mesh::read_dir(dir)?),
        None => Ok(Mesh::unit_square()),
    }
}

/// Writes `body` to `out/name`, or to stdout without an output directory.
fn emit(out: Option<&Path>, name: &str, body: &str) -> CliResult {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn topology(settings: &Settings) -> CliResult {
    let disc = Discretization::new(load_mesh(settings)?)?;
    emit(settings.out.as_deref(), "edges.csv", &output::edge_table(&disc))
}

fn refine(settings: &Settings) -> CliResult {
    let out = settings
        .out
        .as_deref()
        .ok_or_else(|| CliError::config("refine needs --out"))?;
    let levels = settings.levels(1..=1)?;
    if levels.start() != levels.end() {
        return Err(CliError::config("refine takes a single level"));
    }
    let mesh = refine_uniform(&load_mesh(settings)?, *levels.end())?;
    mesh.write_dir(out)?;
    eprintln!(
        "wrote {} nodes and {} elements to {}",
        mesh.num_nodes(),
        mesh.num_elements(),
        out.display()
    );
    Ok(())
}

fn problem(settings: &Settings, default: &str, transient: Option<bool>) -> CliResult<ManufacturedProblem> {
    let name = settings.problem.as_deref().unwrap_or(default);
    let mut problem = ManufacturedProblem::by_name(name)?;
    if let Some(t) = transient {
        if problem.is_transient() != t {
            let kind = if t { "parabolic" } else { "elliptic" };
            return Err(CliError::config(format!("problem '{name}' is not {kind}")));
        }
    }
    if let Some(coeffs) = settings.coefficients(problem.coeffs())? {
        problem = problem.with_coefficients(coeffs);
    }
    Ok(problem)
}

fn study(settings: &Settings, problem: &ManufacturedProblem, default_levels: (usize, usize)) -> CliResult<StudyReport> {
    let base = load_mesh(settings)?;
    let options = settings.study_options(default_levels.0..=default_levels.1)?;
    let report = run_convergence_study(&base, problem, &options)?;
    let tol = settings.tolerance();
    if let Some(bad) = report.levels.iter().find(|l| l.constraint_residual > tol) {
        return Err(CliError {
            code: EXIT_SOLVER,
            message: format!(
                "constraint residual {:e} at level {} exceeds {tol:e}",
                bad.constraint_residual, bad.level
            ),
        });
    }
    if let Some(dir) = &settings.export_solution {
        export(&base, problem, &options, dir)?;
    }
    Ok(report)
}

fn export(base: &Mesh, problem: &ManufacturedProblem, options: &StudyOptions, dir: &Path) -> CliResult {
    let level = *options.levels.end();
    let disc = Discretization::new(refine_uniform(base, level)?)?;
    let (_, solution) = solve_level(&disc, level, problem, options)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, body) in [
        ("elements.csv", output::element_values(&solution)),
        ("multipliers.csv", output::multipliers(&disc, &solution)),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    eprintln!("exported level {level} solution to {}", dir.display());
    Ok(())
}

fn solve(settings: &Settings, transient: bool) -> CliResult {
    let (default, name) = if transient {
        ("parabolic-poly", "parabolic.csv")
    } else {
        ("elliptic-poly", "elliptic.csv")
    };
    let problem = problem(settings, default, Some(transient))?;
    let report = study(settings, &problem, (3, 3))?;
    emit(settings.out.as_deref(), name, &report.to_csv(true))
}

fn convergence(settings: &Settings) -> CliResult {
    let problem = problem(settings, "elliptic-poly", None)?;
    let report = study(settings, &problem, (1, 5))?;
    let summary = report.summary();
    match settings.out.as_deref() {
        Some(dir) => {
            emit(Some(dir), "convergence.csv", &report.to_csv(false))?;
            emit(Some(dir), "timings.csv", &report.to_csv(true))?;
            emit(Some(dir), "summary.txt", &summary)?;
            print!("{summary}");
        }
        None => {
            print!("{}", report.to_csv(false));
            println!();
            print!("{summary}");
        }
    }
    Ok(())
}

fn bench(settings: &Settings) -> CliResult {
    let levels = settings.levels(5..=8)?;
    let coeffs = settings
        .coefficients(&phfem::assembly::ProblemCoefficients::laplace())?
        .unwrap_or_else(phfem::assembly::ProblemCoefficients::laplace);
    let report = run_benchmark(&load_mesh(settings)?, levels, &coeffs)?;
    emit(settings.out.as_deref(), "bench.csv", &report.to_csv())?;
    println!("{}", report.regression_line());
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let file = match &cli.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    let (args, command): (&CommonArgs, fn(&Settings) -> CliResult) = match &cli.command {
        Command::Topology(a) => (a, topology),
        Command::Refine(a) => (a, refine),
        Command::SolveElliptic(a) => (a, |s| solve(s, false)),
        Command::SolveParabolic(a) => (a, |s| solve(s, true)),
        Command::Convergence(a) => (a, convergence),
        Command::Bench(a) => (a, bench),
    };
    let settings = Settings::merge(args, file)?;
    command(&settings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}
