//! Flag definitions, config-file merging and conversion into typed run
//! configurations.
//!
//! A `--config FILE` holds flag values as TOML. Top-level keys apply to
//! every subcommand that takes the flag; a table named after a subcommand
//! applies to that subcommand only. The file's values are inserted ahead
//! of the command line, and because every subcommand lets later
//! occurrences of a flag override earlier ones, explicit flags win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use dlselect::conditions::{PicOptions, DEFAULT_CANDIDATE_CAP, DEFAULT_TOL_COND, DEFAULT_TOL_RANK};
use dlselect::dual::DEFAULT_TOL_ACTIVE;
use dlselect::eval::{ExperimentConfig, Method, ReportFormat};
use dlselect::io::ResponseColumn;
use dlselect::pipeline::{default_lambda2_grid, PipelineOptions, DEFAULT_GRID_SIZE};
use dlselect::sim::{DesignKind, DesignSpec};
use dlselect::SolverOptions;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "dlselect",
    version,
    about = "Dual Lasso selection for correlated predictors"
)]
pub struct Cli {
    /// More log output on standard error (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// TOML file with default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one simulated replication (train/validation/test) to CSV.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Fit a single Lasso, Ridge or Elastic-Net model.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Dual Lasso selection followed by a Ridge refit.
    #[command(args_override_self = true)]
    Select(SelectArgs),
    /// Check PSD, irrepresentable and pseudo irrepresentable conditions.
    #[command(args_override_self = true)]
    Check(CheckArgs),
    /// Compare the estimators over simulated replications.
    #[command(args_override_self = true)]
    Benchmark(BenchmarkArgs),
    /// Re-render a CSV benchmark report.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

fn parse_rho(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > -1.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("rho = {v} must lie in (-1, 1)"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be nonnegative"))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie in (0, 1)"))
    }
}

fn parse_design(s: &str) -> Result<DesignKind, String> {
    s.parse().map_err(|e: dlselect::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: dlselect::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// block_diagonal, single_block_noise, single_block, toeplitz or identity.
    #[arg(long, value_parser = parse_design)]
    pub design: DesignKind,
    #[arg(long)]
    pub p: usize,
    #[arg(long, value_parser = parse_rho, allow_negative_numbers = true, default_value = "0")]
    pub rho: f64,
    /// Number of active coefficients; min(20, p) by default.
    #[arg(long)]
    pub s: Option<usize>,
    /// Validation size; defaults to the training size.
    #[arg(long)]
    pub n_val: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    #[arg(long, value_parser = parse_nonnegative, default_value = "1")]
    pub sigma: f64,
    /// Block size for the block designs.
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub num_blocks: Option<usize>,
}

impl DesignArgs {
    fn spec(&self, n: usize, seed: u64, reps: usize) -> Result<DesignSpec, CliError> {
        let s = self.s.unwrap_or(self.p.min(20));
        let mut spec = DesignSpec::new(self.design, self.p, self.rho, n, s, seed);
        spec.n_val = self.n_val.unwrap_or(n);
        spec.n_test = self.n_test;
        spec.sigma = self.sigma;
        spec.reps = reps;
        if let Some(b) = self.block_size {
            spec.block_size = b;
            if self.num_blocks.is_none() && b > 0 && self.design == DesignKind::BlockDiagonal {
                spec.num_blocks = self.p / b;
            }
        }
        if let Some(k) = self.num_blocks {
            spec.num_blocks = k;
        }
        spec.validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Training size.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Replication index (selects the noise draw).
    #[arg(long, default_value_t = 0)]
    pub rep: usize,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file, one observation per row.
    #[arg(value_name = "DATA")]
    pub input: PathBuf,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Response column: a header name or a 1-based index. Defaults to the
    /// last column.
    #[arg(long)]
    pub response: Option<String>,
}

impl DataArgs {
    fn response_column(&self) -> Result<ResponseColumn, CliError> {
        Ok(match &self.response {
            None => ResponseColumn::Last,
            Some(r) => match r.parse::<usize>() {
                Ok(0) => return Err(CliError::Usage("--response index is 1-based".into())),
                Ok(i) => ResponseColumn::Index(i - 1),
                Err(_) if self.no_header => {
                    return Err(CliError::Usage(format!(
                        "--response {r:?} names a column but --no-header is set"
                    )))
                }
                Err(_) => ResponseColumn::Name(r.clone()),
            },
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative objective change per sweep.
    #[arg(long, value_parser = parse_positive, default_value = "1e-9")]
    pub tol_obj: f64,
    /// Absolute KKT tolerance; by default relative to the penalty.
    #[arg(long, value_parser = parse_positive)]
    pub tol_kkt: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_sweeps: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, CliError> {
        let opts = SolverOptions {
            tol_obj: self.tol_obj,
            tol_kkt: self.tol_kkt,
            max_sweeps: self.max_sweeps,
            ..Default::default()
        };
        opts.validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Lasso,
    Ridge,
    Enet,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "lasso")]
    pub method: FitMethod,
    /// ℓ₁ penalty on the standardized scale.
    #[arg(long, value_parser = parse_nonnegative)]
    pub lambda1: Option<f64>,
    /// ℓ₂ penalty on the standardized scale.
    #[arg(long, value_parser = parse_nonnegative)]
    pub lambda2: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Coefficient CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_positive, conflicts_with = "tune")]
    pub lambda1: Option<f64>,
    #[arg(long, value_parser = parse_positive, conflicts_with = "tune")]
    pub lambda2: Option<f64>,
    /// Choose both penalties on a held-out validation split.
    #[arg(long)]
    pub tune: bool,
    /// Points in each tuning grid.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Seed for the train/validation split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of rows held out for validation when tuning.
    #[arg(long, value_parser = parse_fraction, default_value = "0.3")]
    pub val_frac: f64,
    /// Relative tolerance for a dual constraint to count as tight.
    #[arg(long, value_parser = parse_fraction, default_value_t = DEFAULT_TOL_ACTIVE)]
    pub tol_active: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Per-column CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    /// Four independent active predictors and one noise predictor
    /// correlated `rho` with each.
    #[value(name = "5x5")]
    FiveByFive,
    /// The 5x5 example with the first two active predictors duplicated.
    #[value(name = "7x7")]
    SevenBySeven,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceArgs {
    /// Covariance matrix CSV; cells may read `rho` or `-rho`.
    #[arg(long, value_name = "FILE", group = "source")]
    pub matrix: Option<PathBuf>,
    /// Raw design CSV (predictors only); its empirical covariance is checked.
    #[arg(long, value_name = "FILE", group = "source")]
    pub design: Option<PathBuf>,
    #[arg(long, value_enum, group = "source")]
    pub example: Option<Example>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// The input file has a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_parser = parse_rho, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// 1-based active indices, comma separated.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    pub support: Vec<usize>,
    /// Signs on the support (`+` or `-`), comma separated; all `+` by default.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Vec<String>,
    #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_TOL_RANK)]
    pub tol_rank: f64,
    #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_TOL_COND)]
    pub tol_cond: f64,
    /// Largest number of PIC candidate submatrices to evaluate.
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    pub cap: usize,
    /// Per-candidate PIC margins as CSV.
    #[arg(long, value_name = "FILE")]
    pub candidates_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Training sizes, comma separated; one table block per size.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Methods, comma separated: lasso, ridge, enet, dlselect.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Output prefix; writes PREFIX.csv and PREFIX.md. Markdown goes to
    /// standard output when absent.
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
    /// Worker threads for replications; all cores by default.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV reports written by `benchmark`; rows are concatenated.
    #[arg(long = "input", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

// ---- typed configurations ----------------------------------------------

#[derive(Debug, Clone)]
pub struct DataSource {
    pub path: PathBuf,
    pub has_header: bool,
    pub response: ResponseColumn,
}

#[derive(Debug, Clone)]
pub enum FitPenalty {
    Lasso { lambda1: f64 },
    Ridge { lambda2: f64 },
    Enet { lambda1: f64, lambda2: f64 },
}

#[derive(Debug, Clone)]
pub enum SelectMode {
    Fixed {
        lambda1: f64,
        lambda2: f64,
    },
    Tune {
        grid_size: usize,
        seed: u64,
        val_frac: f64,
    },
}

#[derive(Debug, Clone)]
pub enum MatrixSource {
    Covariance(PathBuf),
    Design(PathBuf),
    Example(Example),
}

#[derive(Debug, Clone)]
pub enum RunConfig {
    Generate {
        spec: DesignSpec,
        rep: usize,
        out_dir: PathBuf,
    },
    Fit {
        data: DataSource,
        penalty: FitPenalty,
        solver: SolverOptions,
        out: Option<PathBuf>,
    },
    Select {
        data: DataSource,
        mode: SelectMode,
        pipeline: PipelineOptions,
        out: Option<PathBuf>,
    },
    Check {
        source: MatrixSource,
        has_header: bool,
        rho: Option<f64>,
        /// 0-based; `None` means the example's own support.
        support: Option<Vec<usize>>,
        signs: Option<Vec<i8>>,
        pic: PicOptions,
        candidates_out: Option<PathBuf>,
    },
    Benchmark {
        specs: Vec<DesignSpec>,
        experiment: ExperimentConfig,
        out: Option<PathBuf>,
        jobs: Option<usize>,
    },
    Report {
        inputs: Vec<PathBuf>,
        format: ReportFormat,
        out: Option<PathBuf>,
    },
}

/// Parsed command line: log verbosity and the validated run configuration.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub verbose: u8,
    pub config: RunConfig,
}

/// Parse and validate `argv` (program name first), merging a `--config`
/// file if one is named.
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = merge_config_file(argv)?;
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    Ok(Invocation {
        verbose: cli.verbose,
        config: to_run_config(cli.command)?,
    })
}

fn to_run_config(command: Command) -> Result<RunConfig, CliError> {
    let usage = |m: String| Err(CliError::Usage(m));
    match command {
        Command::Generate(a) => Ok(RunConfig::Generate {
            spec: a.design.spec(a.n, a.seed, 1)?,
            rep: a.rep,
            out_dir: a.out_dir,
        }),
        Command::Fit(a) => {
            let penalty = match (a.method, a.lambda1, a.lambda2) {
                (FitMethod::Lasso, Some(l1), None) => FitPenalty::Lasso { lambda1: l1 },
                (FitMethod::Ridge, None, Some(l2)) if l2 > 0.0 => FitPenalty::Ridge { lambda2: l2 },
                (FitMethod::Enet, Some(l1), Some(l2)) if l1 > 0.0 || l2 > 0.0 => FitPenalty::Enet {
                    lambda1: l1,
                    lambda2: l2,
                },
                (FitMethod::Lasso, _, _) => return usage("lasso needs --lambda1 only".into()),
                (FitMethod::Ridge, _, _) => {
                    return usage("ridge needs a positive --lambda2 only".into())
                }
                (FitMethod::Enet, _, _) => {
                    return usage("enet needs --lambda1 and --lambda2, not both zero".into())
                }
            };
            Ok(RunConfig::Fit {
                data: data_source(&a.data)?,
                penalty,
                solver: a.solver.options()?,
                out: a.out,
            })
        }
        Command::Select(a) => {
            let mode = match (a.tune, a.lambda1, a.lambda2) {
                (true, _, _) => {
                    if a.grid_size == 0 {
                        return usage("--grid-size must be positive".into());
                    }
                    SelectMode::Tune {
                        grid_size: a.grid_size,
                        seed: a.seed,
                        val_frac: a.val_frac,
                    }
                }
                (false, Some(lambda1), Some(lambda2)) => SelectMode::Fixed { lambda1, lambda2 },
                _ => return usage("select needs --lambda1 and --lambda2, or --tune".into()),
            };
            Ok(RunConfig::Select {
                data: data_source(&a.data)?,
                mode,
                pipeline: PipelineOptions {
                    solver: a.solver.options()?,
                    tol_active: a.tol_active,
                    ..Default::default()
                },
                out: a.out,
            })
        }
        Command::Check(a) => {
            let source = match (a.source.matrix, a.source.design, a.source.example) {
                (Some(m), _, _) => MatrixSource::Covariance(m),
                (_, Some(d), _) => MatrixSource::Design(d),
                (_, _, Some(e)) => MatrixSource::Example(e),
                _ => return usage("one of --matrix, --design, --example is required".into()),
            };
            if a.support.is_empty() && !matches!(source, MatrixSource::Example(_)) {
                return usage("--support is required unless --example is given".into());
            }
            if a.support.contains(&0) {
                return usage("--support indices are 1-based".into());
            }
            let needs_rho = matches!(source, MatrixSource::Example(_));
            if needs_rho && a.rho.is_none() {
                return usage("--example needs --rho".into());
            }
            let signs = if a.signs.is_empty() {
                None
            } else {
                Some(
                    a.signs
                        .iter()
                        .map(|s| match s.trim() {
                            "+" | "+1" | "1" => Ok(1i8),
                            "-" | "-1" => Ok(-1i8),
                            other => Err(CliError::Usage(format!("bad sign {other:?}"))),
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                )
            };
            Ok(RunConfig::Check {
                source,
                has_header: a.header,
                rho: a.rho,
                support: (!a.support.is_empty()).then(|| a.support.iter().map(|i| i - 1).collect()),
                signs,
                pic: PicOptions {
                    tol_rank: a.tol_rank,
                    cap: a.cap,
                    tol_cond: a.tol_cond,
                },
                candidates_out: a.candidates_out,
            })
        }
        Command::Benchmark(a) => {
            if a.reps == 0 {
                return usage("--reps must be at least 1".into());
            }
            if a.grid_size == 0 {
                return usage("--grid-size must be positive".into());
            }
            if a.jobs == Some(0) {
                return usage("--jobs must be at least 1".into());
            }
            let specs =
                a.n.iter()
                    .map(|&n| a.design.spec(n, a.seed, a.reps))
                    .collect::<Result<Vec<_>, _>>()?;
            let mut methods = if a.methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                a.methods
            };
            methods.sort();
            methods.dedup();
            Ok(RunConfig::Benchmark {
                specs,
                experiment: ExperimentConfig {
                    methods,
                    grid1_size: a.grid_size,
                    grid2: default_lambda2_grid(a.grid_size),
                    ..Default::default()
                },
                out: a.out,
                jobs: a.jobs,
            })
        }
        Command::Report(a) => Ok(RunConfig::Report {
            inputs: a.inputs,
            format: a
                .format
                .parse()
                .map_err(|e: dlselect::Error| CliError::Usage(e.to_string()))?,
            out: a.out,
        }),
    }
}

fn data_source(a: &DataArgs) -> Result<DataSource, CliError> {
    Ok(DataSource {
        path: a.input.clone(),
        has_header: !a.no_header,
        response: a.response_column()?,
    })
}

// ---- config file ------------------------------------------------------

const SUBCOMMANDS: [&str; 6] = ["generate", "fit", "select", "check", "benchmark", "report"];

/// Path given by `--config`, in either `--config PATH` or `--config=PATH`
/// form.
fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn merge_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    // insert right after the subcommand name so explicit flags come later
    let Some(pos) = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(argv);
    };
    let sub = argv[pos].to_string_lossy().into_owned();
    let flags = config_flags(&path, &sub)?;
    let mut out = argv[..=pos].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn config_flags(path: &Path, subcommand: &str) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| dlselect::Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| dlselect::Error::Input {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
    let accepts = |sub: &str, key: &str| {
        let long = key.replace('_', "-");
        Cli::command().find_subcommand(sub).is_some_and(|c| {
            c.get_arguments()
                .any(|a| a.get_long() == Some(long.as_str()))
        })
    };
    let mut flags = Vec::new();
    for (key, value) in &table {
        match value {
            toml::Value::Table(section) if key == subcommand => {
                for (k, v) in section {
                    push_flag(&mut flags, k, v, path)?;
                }
            }
            toml::Value::Table(_) if SUBCOMMANDS.contains(&key.as_str()) => {}
            // shared keys only reach the subcommands that take them
            v if accepts(subcommand, key) => push_flag(&mut flags, key, v, path)?,
            _ if SUBCOMMANDS.iter().any(|s| accepts(s, key)) => {}
            _ => {
                return Err(CliError::Usage(format!(
                    "{}: unknown key {key:?}",
                    path.display()
                )))
            }
        }
    }
    Ok(flags)
}

fn push_flag(
    flags: &mut Vec<String>,
    key: &str,
    value: &toml::Value,
    path: &Path,
) -> Result<(), CliError> {
    if key == "config" {
        return Err(CliError::Usage(format!(
            "{}: nested config files are not supported",
            path.display()
        )));
    }
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &toml::Value| -> Result<String, CliError> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(CliError::Usage(format!(
                "{}: unsupported value for {key}: {other}",
                path.display()
            ))),
        }
    };
    match value {
        toml::Value::Boolean(true) => flags.push(flag),
        toml::Value::Boolean(false) => {}
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
            flags.push(format!("{flag}={}", parts.join(",")));
        }
        v => flags.push(format!("{flag}={}", scalar(v)?)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &str) -> Result<Invocation, CliError> {
        parse_args(std::iter::once("dlselect").chain(args.split_whitespace()))
    }

    #[test]
    fn benchmark_flags_build_a_spec() {
        let inv =
            parse("benchmark --design block_diagonal --p 100 --n 200 --reps 20 --seed 7").unwrap();
        let RunConfig::Benchmark {
            specs, experiment, ..
        } = inv.config
        else {
            panic!("wrong command");
        };
        assert_eq!(specs.len(), 1);
        let s = &specs[0];
        assert_eq!(
            (s.p, s.n_train, s.n_val, s.reps, s.design_seed),
            (100, 200, 200, 20, 7)
        );
        assert_eq!((s.block_size, s.num_blocks), (10, 10));
        assert_eq!(experiment.methods, Method::ALL.to_vec());
    }

    #[test]
    fn out_of_range_rho_is_a_usage_error() {
        let err =
            parse("benchmark --design toeplitz --p 10 --n 20 --seed 1 --rho 1.5").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("rho"), "{err}");
        assert!(parse("benchmark --design toeplitz --p 10 --n 20 --seed 1 --rho -0.5").is_ok());
    }

    #[test]
    fn benchmark_requires_a_seed() {
        assert!(parse("benchmark --design identity --p 10 --n 20").is_err());
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(parse("benchmark --design identity --p 10 --n 20 --seed 1 --bogus 3").is_err());
    }

    #[test]
    fn select_needs_penalties_or_tuning() {
        assert!(parse("select data.csv").is_err());
        assert!(parse("select data.csv --lambda1 1").is_err());
        assert!(parse("select data.csv --lambda1 1 --lambda2 2").is_ok());
        assert!(parse("select data.csv --tune --seed 3").is_ok());
        assert!(parse("select data.csv --tune --lambda1 1").is_err());
    }

    #[test]
    fn check_supports_are_one_based() {
        let inv = parse("check --example 5x5 --rho 0.2 --support 1,2,3,4").unwrap();
        let RunConfig::Check { support, .. } = inv.config else {
            panic!("wrong command");
        };
        assert_eq!(support, Some(vec![0, 1, 2, 3]));
        assert!(parse("check --example 5x5 --rho 0.2 --support 0,1").is_err());
        assert!(parse("check --matrix m.csv").is_err());
        assert!(parse("check --matrix m.csv --example 7x7 --support 1").is_err());
    }

    #[test]
    fn config_file_values_yield_to_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "seed = 5\nreps = 3\n[benchmark]\ndesign = \"toeplitz\"\np = 30\nn = [40, 60]\nrho = 0.5").unwrap();
        let path = f.path().display().to_string();
        let inv = parse(&format!("benchmark --config {path} --p 20 --seed 9")).unwrap();
        let RunConfig::Benchmark { specs, .. } = inv.config else {
            panic!("wrong command");
        };
        assert_eq!(specs.len(), 2);
        assert_eq!(
            (specs[0].p, specs[0].design_seed, specs[0].reps),
            (20, 9, 3)
        );
        assert_eq!((specs[0].n_train, specs[1].n_train), (40, 60));
        assert_eq!(specs[0].rho, 0.5);
    }

    #[test]
    fn config_file_keys_must_be_known_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "unknown_key = 1").unwrap();
        let path = f.path().display().to_string();
        assert!(parse(&format!(
            "benchmark --config {path} --design identity --p 10 --n 20 --seed 1"
        ))
        .is_err());

        // keys for other subcommands are skipped, unknown keys in a section are not
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "tol_rank = 1e-6\n[check]\nrho = 0.2").unwrap();
        let path = f.path().display().to_string();
        assert!(parse(&format!(
            "benchmark --config {path} --design identity --p 10 --n 20 --seed 1"
        ))
        .is_ok());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[benchmark]\ntol_rank = 1e-6").unwrap();
        let path = f.path().display().to_string();
        assert!(parse(&format!(
            "benchmark --config {path} --design identity --p 10 --n 20 --seed 1"
        ))
        .is_err());
    }
}
