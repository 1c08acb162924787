use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fgscan_core::data::ColumnRef;
use fgscan_core::tuning::BicSampleSize;
use fgscan_core::{EngineKind, Method, SweepMode};

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal error
  2  invalid command line
  3  file could not be read or written
  4  malformed CSV input
  5  invalid data or options
  6  numerical failure (overflow, empty risk set, undefined weight)
  7  fit did not converge (only with --strict, or when every grid point fails)
  8  check found a scan/naive discrepancy above 1e-8

Environment:
  FGSCAN_THREADS  maximum number of worker threads
  RUST_LOG        log filter (overrides -v)";

#[derive(Parser, Debug)]
#[command(
    name = "fgscan",
    version,
    about = "Sparse Fine-Gray competing-risks regression with linear-time likelihood scans",
    after_help = EXIT_CODES
)]
pub struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one model and write its coefficients as JSON
    #[command(args_override_self = true, after_help = EXIT_CODES)]
    Fit(FitArgs),
    /// Fit a grid of penalties and select by BIC
    #[command(args_override_self = true, after_help = EXIT_CODES)]
    Tune(TuneArgs),
    /// Generate a competing-risks dataset as CSV
    #[command(args_override_self = true, after_help = EXIT_CODES)]
    Simulate(SimulateArgs),
    /// Time fits across sample sizes, methods and engines
    #[command(args_override_self = true, after_help = EXIT_CODES)]
    Bench(BenchArgs),
    /// Compare the scan engine against direct enumeration on a dataset
    #[command(args_override_self = true, after_help = EXIT_CODES)]
    Check(CheckArgs),
}

/// Options for reading a dataset.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Input CSV file
    pub data: PathBuf,

    /// Time column: header name or 1-based position
    #[arg(long, default_value = "time")]
    pub time_col: String,

    /// Status column (0 censored, 1 event of interest, 2 competing)
    #[arg(long, default_value = "status")]
    pub status_col: String,

    /// Covariate columns: names, 1-based positions or ranges such as 3-10,
    /// comma separated. Defaults to every other column
    #[arg(long)]
    pub covariates: Option<String>,

    /// The file has no header row (columns must be given by position)
    #[arg(long)]
    pub no_header: bool,

    /// Treat status codes above 2 as the competing cause
    #[arg(long)]
    pub collapse_causes: bool,

    /// Standardize covariates before fitting; coefficients are reported on
    /// both scales
    #[arg(long)]
    pub standardize: bool,

    /// TOML file with option values; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Solver options shared by `fit` and `tune`.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Cycbar)]
    pub method: MethodArg,

    /// Ridge penalty of the BAR initial estimate: a number or log-p
    #[arg(long, default_value = "log-p")]
    pub xi: Preset,

    /// Convergence tolerance on the coefficient change
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,

    #[arg(long, value_enum, default_value_t = SweepArg::GaussSeidel)]
    pub sweep_mode: SweepArg,

    #[arg(long, value_enum, default_value_t = EngineArg::Scan)]
    pub engine: EngineArg,

    /// SCAD/MCP shape (defaults 3.7 and 3.0)
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Sample size in the BIC penalty
    #[arg(long, value_enum, default_value_t = BicArg::Subjects)]
    pub bic_n: BicArg,

    /// Exit with an error when a fit does not converge
    #[arg(long)]
    pub strict: bool,

    /// Write JSON here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Penalty: a number, log-p, or grid (BIC-tuned over the default grid).
    /// Defaults to log-p for BAR methods and grid for the others
    #[arg(long)]
    pub lambda: Option<LambdaArg>,

    /// Write the censoring survival estimate as (time, G) steps
    #[arg(long)]
    pub dump_censoring_km: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// "default", or a file of penalty values separated by commas,
    /// whitespace or newlines
    #[arg(long, default_value = "default")]
    pub grid: String,

    /// Fit every grid point from the initial estimate instead of the
    /// previous solution
    #[arg(long)]
    pub no_warm_start: bool,

    /// Write (lambda, bic, support_size, converged) rows here
    #[arg(long)]
    pub path_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub p: usize,

    /// AR(1) correlation of adjacent covariates
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,

    /// Cause-1 probability at z = 0
    #[arg(long, default_value_t = 0.5)]
    pub pi: f64,

    /// File with the p cause-1 coefficients (default: the standard sparse
    /// vector padded with zeros)
    #[arg(long)]
    pub beta1: Option<PathBuf>,

    /// Upper bound of the uniform censoring distribution, or
    /// target-censoring=<rate> to calibrate it
    #[arg(long, default_value = "1.42")]
    pub umax: UmaxArg,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Replicate index; each index gives an independent stream
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,

    /// Output CSV (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "600,1000,2000")]
    pub sizes: List<usize>,

    #[arg(long, default_value_t = 100)]
    pub p: usize,

    #[arg(long, default_value = "cycbar,bar")]
    pub methods: List<Method>,

    /// Which likelihood engines to time
    #[arg(long, value_enum, default_value_t = ScanArg::Both)]
    pub scan: ScanArg,

    #[arg(long, default_value_t = 10)]
    pub replicates: usize,

    #[arg(long, default_value_t = 2024)]
    pub seed: u64,

    /// Penalty used for every fit (default log p)
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Cell that fold changes are measured against, as method:engine.
    /// Defaults to bar:naive, falling back to the first method and engine
    #[arg(long)]
    pub reference: Option<String>,

    /// CSV output (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Rows kept after random subsampling
    #[arg(long, default_value_t = 2000)]
    pub max_rows: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Write JSON here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Cycbar,
    Bar,
    Lasso,
    Alasso,
    Scad,
    Mcp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Cycbar => Method::CycBar,
            MethodArg::Bar => Method::Bar,
            MethodArg::Lasso => Method::Lasso,
            MethodArg::Alasso => Method::Alasso,
            MethodArg::Scad => Method::Scad,
            MethodArg::Mcp => Method::Mcp,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepArg {
    GaussSeidel,
    Jacobi,
}

impl From<SweepArg> for SweepMode {
    fn from(s: SweepArg) -> SweepMode {
        match s {
            SweepArg::GaussSeidel => SweepMode::GaussSeidel,
            SweepArg::Jacobi => SweepMode::Jacobi,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineArg {
    Scan,
    Naive,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> EngineKind {
        match e {
            EngineArg::Scan => EngineKind::Scan,
            EngineArg::Naive => EngineKind::Naive,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BicArg {
    Subjects,
    Events,
}

impl From<BicArg> for BicSampleSize {
    fn from(b: BicArg) -> BicSampleSize {
        match b {
            BicArg::Subjects => BicSampleSize::Subjects,
            BicArg::Events => BicSampleSize::Events,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanArg {
    On,
    Off,
    Both,
}

/// A number or the `log-p` keyword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Value(f64),
    LogP,
}

impl Preset {
    pub fn resolve(self, p: usize) -> f64 {
        match self {
            Preset::Value(v) => v,
            Preset::LogP => (p as f64).ln(),
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("log-p") {
            return Ok(Preset::LogP);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or log-p, got '{s}'"))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("penalty must be finite and non-negative, got {v}"));
        }
        Ok(Preset::Value(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaArg {
    Fixed(Preset),
    Grid,
}

impl FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("grid") {
            Ok(LambdaArg::Grid)
        } else {
            s.parse().map(LambdaArg::Fixed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UmaxArg {
    Value(f64),
    TargetCensoring(f64),
}

impl FromStr for UmaxArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rate) = s.strip_prefix("target-censoring=") {
            let r: f64 = rate.parse().map_err(|_| format!("bad censoring rate '{rate}'"))?;
            if !(r > 0.0 && r < 1.0) {
                return Err(format!("censoring rate must be in (0, 1), got {r}"));
            }
            return Ok(UmaxArg::TargetCensoring(r));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("expected a number or target-censoring=<rate>, got '{s}'"))?;
        Ok(UmaxArg::Value(v))
    }
}

/// Comma-separated list parsed as a single value, so that a later flag
/// replaces an earlier one instead of appending to it.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<T>().map_err(|e| format!("'{t}': {e}")))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err("empty list".to_string())
                } else {
                    Ok(List(v))
                }
            })
    }
}

/// Parses a column given by header name or 1-based position.
pub fn column_ref(token: &str) -> Result<ColumnRef, String> {
    match token.parse::<usize>() {
        Ok(0) => Err("column positions start at 1".into()),
        Ok(k) => Ok(ColumnRef::Index(k - 1)),
        Err(_) => Ok(ColumnRef::Name(token.to_string())),
    }
}

/// Expands a covariate selection such as `age,3-5,bmi`.
pub fn covariate_refs(spec: &str) -> Result<Vec<ColumnRef>, String> {
    let mut out = Vec::new();
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let range = token
            .split_once('-')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)));
        match range {
            Some((a, b)) if a >= 1 && a <= b => out.extend((a - 1..b).map(ColumnRef::Index)),
            Some(_) => return Err(format!("bad column range '{token}'")),
            None => out.push(column_ref(token)?),
        }
    }
    if out.is_empty() {
        return Err("no covariates selected".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariate_selection() {
        let refs = covariate_refs("age, 3-5,bmi").unwrap();
        assert_eq!(
            refs,
            vec![
                ColumnRef::Name("age".into()),
                ColumnRef::Index(2),
                ColumnRef::Index(3),
                ColumnRef::Index(4),
                ColumnRef::Name("bmi".into()),
            ]
        );
        assert!(covariate_refs("5-3").is_err());
        assert!(covariate_refs("0").is_err());
        assert_eq!(covariate_refs("x-ray").unwrap(), vec![ColumnRef::Name("x-ray".into())]);
    }

    #[test]
    fn presets() {
        assert_eq!("log-p".parse::<Preset>().unwrap().resolve(40), 40f64.ln());
        assert_eq!("0.5".parse::<LambdaArg>().unwrap(), LambdaArg::Fixed(Preset::Value(0.5)));
        assert_eq!("grid".parse::<LambdaArg>().unwrap(), LambdaArg::Grid);
        assert!("-1".parse::<Preset>().is_err());
        assert_eq!(
            "target-censoring=0.33".parse::<UmaxArg>().unwrap(),
            UmaxArg::TargetCensoring(0.33)
        );
        assert!("target-censoring=2".parse::<UmaxArg>().is_err());
    }

    #[test]
    fn lists() {
        assert_eq!("600, 1000,2000".parse::<List<usize>>().unwrap().0, vec![600, 1000, 2000]);
        assert!("".parse::<List<usize>>().is_err());
        assert!("cycbar,nope".parse::<List<Method>>().is_err());
    }

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
