//! Command-line front end. Exit codes: 0 success, 1 solver failure, 2 usage.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    multiplier_table, run_convergence_study, table_columns, threshold_experiment,
    MultiplierColumn, PressureNormalization, StudyConfig, FALLBACK_LEVELS, FALLBACK_REFERENCE,
    STUDY_LEVELS, STUDY_REFERENCE,
};
use crate::assembly::ManufacturedCase;
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::friction::FrictionModulus;
use crate::io::{iteration_log_csv, multiplier_csv, write_vtk};
use crate::saddle::PressureGauge;
use crate::spaces::BcKind;
use crate::uzawa::{default_rho, run_uzawa, StepScaling, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Parser)]
#[command(name = "friction-stokes", version, about = "Stokes flow with friction-type slip or leak on the top side")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write the field, multiplier and iteration log.
    Solve(SolveArgs),
    /// Errors against a fine reference solve over a list of levels.
    Convergence(ConvergenceArgs),
    /// Boundary motion as the friction threshold varies.
    Thresholds(ThresholdArgs),
    /// Multiplier samples at x = 0.0, 0.1, ..., 1.0 for several settings.
    MultiplierTable(TableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Sbcf,
    Lbcf,
}

impl From<BcArg> for BcKind {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Sbcf => BcKind::Sbcf,
            BcArg::Lbcf => BcKind::Lbcf,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GaugeArg {
    Mean,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Modulus,
    Plain,
}

impl From<ScalingArg> for StepScaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Modulus => StepScaling::Modulus,
            ScalingArg::Plain => StepScaling::Plain,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    /// Match pressures at the corner (0, 0).
    Point,
    /// Match pressure means.
    Mean,
}

#[derive(Debug, Args)]
pub struct IterationArgs {
    /// Multiplier step; defaults to the tabulated value for (bc, g), else 8/g².
    #[arg(long)]
    pub rho: Option<f64>,
    /// Constant initial multiplier, clipped into [-1, 1].
    #[arg(long = "lambda0", default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda0: f64,
    /// Stop once the H1 velocity increment is at most this.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Whether the multiplier step is multiplied by g at each node.
    #[arg(long, value_enum, default_value_t = ScalingArg::Modulus)]
    pub scaling: ScalingArg,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub bc: BcArg,
    /// Friction modulus: a positive number, or `affine:A:B` for g(x) = A + B x.
    #[arg(long, allow_negative_numbers = true)]
    pub g: String,
    /// Divisions per side.
    #[arg(long, short = 'n', default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    /// Pressure gauge; must be `mean` for sbcf and `full` for lbcf.
    #[arg(long, value_enum)]
    pub gauge: Option<GaugeArg>,
    #[command(flatten)]
    pub iteration: IterationArgs,
    /// Directory for solution.vtk, multiplier.csv and iterations.csv.
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum)]
    pub bc: BcArg,
    #[arg(long)]
    pub g: f64,
    /// Comma-separated levels, each dividing the reference level.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long)]
    pub reference: Option<usize>,
    /// Levels 10,20,40 against reference 80.
    #[arg(long, conflicts_with_all = ["levels", "reference"])]
    pub fallback: bool,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Point)]
    pub normalization: NormalizationArg,
    #[command(flatten)]
    pub iteration: IterationArgs,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, value_enum)]
    pub bc: BcArg,
    /// Comma-separated friction thresholds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub g: Vec<f64>,
    #[arg(long, short = 'n', default_value_t = 10)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ScalingArg::Modulus)]
    pub scaling: ScalingArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Column as bc:g:rho:lambda; repeat for several. Defaults to the seven
    /// standard columns.
    #[arg(long = "column")]
    pub columns: Vec<String>,
    #[arg(long, short = 'n', default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = ScalingArg::Modulus)]
    pub scaling: ScalingArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Usage problem found after parsing.
struct Usage(ErrorKind, String);

fn usage(msg: impl Into<String>) -> Usage {
    Usage(ErrorKind::ValueValidation, msg.into())
}

fn parse_modulus(s: &str) -> std::result::Result<FrictionModulus, Usage> {
    if let Some(rest) = s.strip_prefix("affine:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let parsed: Vec<f64> = parts.iter().filter_map(|p| p.parse().ok()).collect();
        return match parsed[..] {
            [intercept, slope] if parts.len() == 2 => {
                if intercept <= 0.0 || intercept + slope <= 0.0 {
                    Err(usage(format!("--g {s}: g must be positive on [0, 1]")))
                } else {
                    Ok(FrictionModulus::Affine { intercept, slope })
                }
            }
            _ => Err(usage(format!("--g {s}: expected affine:A:B"))),
        };
    }
    match s.parse::<f64>() {
        Ok(g) if g > 0.0 && g.is_finite() => Ok(FrictionModulus::Constant(g)),
        Ok(_) => Err(usage(format!("--g {s}: g must be positive"))),
        Err(_) => Err(usage(format!("--g {s}: expected a number or affine:A:B"))),
    }
}

fn check_iteration(it: &IterationArgs) -> std::result::Result<(), Usage> {
    if let Some(r) = it.rho {
        if !(r > 0.0 && r.is_finite()) {
            return Err(usage(format!("--rho {r}: must be positive")));
        }
    }
    if !(it.tol > 0.0) {
        return Err(usage(format!("--tol {}: must be positive", it.tol)));
    }
    if it.max_iter == 0 {
        return Err(usage("--max-iter must be at least 1"));
    }
    Ok(())
}

fn check_n(n: usize) -> std::result::Result<(), Usage> {
    if n == 0 {
        return Err(usage("-n must be at least 1"));
    }
    Ok(())
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Failure of a validated command.
enum Failure {
    Usage(Usage),
    Solver(Error),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

fn cmd_solve(a: &SolveArgs) -> std::result::Result<(), Failure> {
    let bc: BcKind = a.bc.into();
    let g = parse_modulus(&a.g)?;
    check_iteration(&a.iteration)?;
    check_n(a.n)?;
    if !(a.nu > 0.0) {
        return Err(usage(format!("--nu {}: must be positive", a.nu)).into());
    }
    let expected = PressureGauge::for_bc(bc);
    if let Some(gauge) = a.gauge {
        let given = match gauge {
            GaugeArg::Mean => PressureGauge::MeanZero,
            GaugeArg::Full => PressureGauge::Full,
        };
        if given != expected {
            return Err(Usage(
                ErrorKind::ArgumentConflict,
                format!(
                    "--gauge {} conflicts with --bc {}; {} requires the {} gauge",
                    given.name(),
                    bc,
                    bc,
                    expected.name()
                ),
            )
            .into());
        }
    }
    let rho = a.iteration.rho.unwrap_or_else(|| match &g {
        FrictionModulus::Constant(c) => default_rho(bc, *c),
        FrictionModulus::Affine { intercept, slope } => default_rho(bc, intercept.max(intercept + slope)),
        FrictionModulus::Nodal(v) => default_rho(bc, v.iter().copied().fold(0.0, f64::max)),
    });
    let disc = Discretization::new(a.n, bc, a.nu, Execution::default())?;
    let params = crate::uzawa::UzawaParams::new(rho)?
        .with_lambda_constant(a.iteration.lambda0)
        .with_scaling(a.iteration.scaling.into())
        .with_tol(a.iteration.tol)
        .with_max_iter(a.iteration.max_iter);
    let sol = run_uzawa(&disc, &ManufacturedCase { nu: a.nu }, &g, &params)?;
    fs::create_dir_all(&a.out_dir).map_err(Error::from)?;
    let vtk = fs::File::create(a.out_dir.join("solution.vtk")).map_err(Error::from)?;
    write_vtk(std::io::BufWriter::new(vtk), disc.mesh(), &sol)?;
    fs::write(a.out_dir.join("multiplier.csv"), multiplier_csv(&sol)).map_err(Error::from)?;
    fs::write(a.out_dir.join("iterations.csv"), iteration_log_csv(&sol)).map_err(Error::from)?;
    eprintln!(
        "{} N={} converged in {} iterations (last H1 increment {:.3e})",
        bc, a.n, sol.iterations, sol.final_increment
    );
    Ok(())
}

fn cmd_convergence(a: &ConvergenceArgs) -> std::result::Result<(), Failure> {
    if !(a.g > 0.0) {
        return Err(usage(format!("--g {}: must be positive", a.g)).into());
    }
    check_iteration(&a.iteration)?;
    let bc: BcKind = a.bc.into();
    let (levels, reference) = if a.fallback {
        (FALLBACK_LEVELS.to_vec(), FALLBACK_REFERENCE)
    } else {
        (
            a.levels.clone().unwrap_or_else(|| STUDY_LEVELS.to_vec()),
            a.reference.unwrap_or(STUDY_REFERENCE),
        )
    };
    let config = StudyConfig {
        levels,
        reference,
        rho: a.iteration.rho,
        lambda_init: a.iteration.lambda0,
        scaling: a.iteration.scaling.into(),
        tol: a.iteration.tol,
        max_iter: a.iteration.max_iter,
        normalization: match a.normalization {
            NormalizationArg::Point => PressureNormalization::default(),
            NormalizationArg::Mean => PressureNormalization::MeanZero,
        },
        ..StudyConfig::new(bc, a.g)
    };
    let study = match run_convergence_study(&config) {
        Err(e @ (Error::NonNested { .. } | Error::InvalidArgument(_))) => {
            return Err(usage(e.to_string()).into())
        }
        r => r?,
    };
    write_or_print(a.out.as_deref(), &study.to_csv())?;
    if let (Some(h1), Some(l2)) = (study.h1_slope(), study.l2_slope()) {
        eprintln!("fitted slopes: H1 {h1:.3}, L2 {l2:.3}");
    }
    Ok(())
}

fn cmd_thresholds(a: &ThresholdArgs) -> std::result::Result<(), Failure> {
    check_n(a.n)?;
    if let Some(g) = a.g.iter().find(|g| !(**g > 0.0)) {
        return Err(usage(format!("--g {g}: must be positive")).into());
    }
    let report = threshold_experiment(a.bc.into(), &a.g, a.n, a.scaling.into())?;
    write_or_print(a.out.as_deref(), &report.to_csv())?;
    Ok(())
}

fn cmd_table(a: &TableArgs) -> std::result::Result<(), Failure> {
    check_n(a.n)?;
    let columns = if a.columns.is_empty() {
        table_columns()
    } else {
        a.columns
            .iter()
            .map(|c| c.parse::<MultiplierColumn>().map_err(|e| usage(format!("--column: {e}"))))
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    let table = multiplier_table(&columns, a.n, a.scaling.into(), a.tol, a.max_iter)?;
    write_or_print(a.out.as_deref(), &table.to_csv())?;
    Ok(())
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::MultiplierTable(a) => cmd_table(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(Usage(kind, msg))) => {
            let e = Cli::command().error(kind, msg);
            let _ = e.print();
            2
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
