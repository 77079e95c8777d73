//! Command-line front end: `fit`, `report`, `calibrate`, `validate` and
//! `replay`.
//!
//! Every command writes a `manifest.json` next to its outputs. `replay` reads
//! one back and reruns the recorded command, which reproduces the numeric
//! outputs byte for byte.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand};

pub use commands::{CommandSpec, Outcome, Smoothing};
pub use manifest::{sha256_hex, RunManifest, MANIFEST_FILE};

use crate::analysis::CalibrationConfig;
use crate::error::{Error, Result};
use crate::gibbs::ChainConfig;
use crate::model::Hyperparams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INPUT: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_CALIBRATION_FAILURES: i32 = 6;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "povcast", version, about = "Fit and evaluate the on-stage window count model")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a count matrix and write a samples bundle.
    Fit(FitArgs),
    /// Tables, zero probabilities and the new-entity estimate from a bundle.
    Report(ReportArgs),
    /// Coverage study on simulated data.
    Calibrate(CalibrateArgs),
    /// Fit a leading slice of a matrix and check a held-out column.
    Validate(ValidateArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 101_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub thin: usize,
    /// Grid points per latent update.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Integer seed, or `random`.
    #[arg(long, default_value = "1")]
    pub seed: String,
    /// Perturb the starting point.
    #[arg(long)]
    pub random_start: bool,
}

impl ChainArgs {
    fn to_config(&self) -> Result<ChainConfig> {
        let cfg = ChainConfig {
            grid_points: self.grid,
            seed: parse_seed(&self.seed)?,
            random_start: self.random_start,
            ..ChainConfig::default().with_schedule(self.iterations, self.burn_in, self.thin)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row of period labels and one row per entity.
    pub data: PathBuf,
    pub out: PathBuf,
    /// Smooth two columns (1-based) before fitting.
    #[arg(long, num_args = 2, value_names = ["J1", "J2"])]
    pub smooth: Option<Vec<usize>>,
    /// Smoothing weights; defaults to the two column sums.
    #[arg(long, num_args = 2, value_names = ["C1", "C2"], requires = "smooth")]
    pub weights: Option<Vec<f64>>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `fit`.
    pub samples: PathBuf,
    pub out: PathBuf,
    /// Skip the SVG charts.
    #[arg(long)]
    pub no_charts: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    /// Six comma-separated values: mu_lambda, sigma_lambda, mu_tau, sigma_tau, mu_beta, sigma_beta.
    #[arg(long, default_value = "1.3,0.75,2,1,4,1.5")]
    pub base: String,
    /// Fit only entities with a nonzero observed count.
    #[arg(long)]
    pub drop_zero_rows: bool,
    #[arg(long, default_value_t = 11_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Integer seed, or `random`.
    #[arg(long, default_value = "1")]
    pub seed: String,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    /// 1-based rows, e.g. `1-9` or `1,3,5-7`.
    #[arg(long, default_value = "1-9")]
    pub train_rows: String,
    /// 1-based contiguous columns.
    #[arg(long, default_value = "1-2")]
    pub train_cols: String,
    /// 1-based column to predict.
    #[arg(long, default_value_t = 3)]
    pub target_col: usize,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    pub out: PathBuf,
}

fn parse_seed(s: &str) -> Result<u64> {
    if s == "random" {
        return Ok(rand::random());
    }
    s.parse()
        .map_err(|_| Error::Config(format!("seed must be an integer or `random`, got {s:?}")))
}

/// Parse `1-9`, `2,4` or `1-3,7` into a sorted list of 1-based indices.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad index list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let a: usize = a.parse().map_err(|_| bad())?;
        let b: usize = b.parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        out.extend(a..=b);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_base(s: &str) -> Result<Hyperparams> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad --base {s:?}")))?;
    let arr: [f64; 6] = values
        .try_into()
        .map_err(|_| Error::Config("--base needs six values".into()))?;
    Hyperparams::from_array(arr).map_err(|e| Error::Config(e.to_string()))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(|e| Error::io(path, e))
}

impl Command {
    /// Resolve the arguments into a replayable command and its output
    /// directory. `replay` is handled separately.
    fn resolve(&self) -> Result<(CommandSpec, PathBuf)> {
        match self {
            Command::Fit(a) => {
                let smoothing = a.smooth.as_ref().map(|cols| Smoothing {
                    columns: (cols[0], cols[1]),
                    weights: a.weights.as_ref().map(|w| (w[0], w[1])),
                });
                let spec = CommandSpec::Fit {
                    data: absolute(&a.data)?,
                    smoothing,
                    chain: a.chain.to_config()?,
                };
                Ok((spec, a.out.clone()))
            }
            Command::Report(a) => Ok((
                CommandSpec::Report {
                    samples: absolute(&a.samples)?,
                    charts: !a.no_charts,
                },
                a.out.clone(),
            )),
            Command::Calibrate(a) => {
                let config = CalibrationConfig {
                    replicates: a.replicates,
                    base: parse_base(&a.base)?,
                    drop_zero_rows: a.drop_zero_rows,
                    chain: ChainConfig {
                        grid_points: a.grid,
                        ..ChainConfig::default().with_schedule(a.iterations, a.burn_in, a.thin)
                    },
                    seed: parse_seed(&a.seed)?,
                    workers: a.workers,
                    ..CalibrationConfig::default()
                };
                config.validate()?;
                Ok((
                    CommandSpec::Calibrate {
                        config,
                        max_failure_fraction: 0.2,
                    },
                    a.out.clone(),
                ))
            }
            Command::Validate(a) => {
                let spec = CommandSpec::Validate {
                    data: absolute(&a.data)?,
                    train_rows: parse_index_list(&a.train_rows)?,
                    train_cols: parse_index_list(&a.train_cols)?,
                    target_col: a.target_col,
                    chain: a.chain.to_config()?,
                };
                Ok((spec, a.out.clone()))
            }
            Command::Replay(_) => unreachable!("replay has no spec of its own"),
        }
    }
}

/// Run `spec` into `out` and write its manifest. Returns the manifest and the
/// command's status code.
pub fn execute(spec: CommandSpec, out: &Path) -> Result<(RunManifest, i32)> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let outcome = spec.execute(out)?;
    let mut manifest = RunManifest::new(spec, outcome.input_sha256, started, clock.elapsed());
    manifest.artifacts = outcome.artifacts;
    manifest.write(out)?;
    Ok((manifest, outcome.status))
}

/// Rerun the command recorded at `manifest_path` into `out`, after checking
/// that its input is unchanged.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<(RunManifest, i32)> {
    let recorded = RunManifest::read(manifest_path)?;
    let now = recorded.command.input_fingerprint()?;
    if now != recorded.input_sha256 {
        return Err(Error::Format(format!(
            "input of the recorded {} run has changed since {}",
            recorded.command.name(),
            manifest_path.display()
        )));
    }
    execute(recorded.command, out)
}

fn error_class(e: &Error) -> (&'static str, i32) {
    match e {
        Error::Parse { .. } => ("parse", EXIT_INPUT),
        Error::Format(_) => ("format", EXIT_INPUT),
        Error::Shape(_) => ("shape", EXIT_INPUT),
        Error::Empty => ("empty", EXIT_INPUT),
        Error::Index(_) => ("index", EXIT_CONFIG),
        Error::Domain(_) => ("domain", EXIT_CONFIG),
        Error::Degenerate(_) => ("degenerate", EXIT_CONFIG),
        Error::Config(_) => ("config", EXIT_CONFIG),
        Error::Io { .. } => ("io", EXIT_IO),
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    error_class(e).1
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let style = if std::env::var_os("NO_COLOR").is_some() {
        env_logger::WriteStyle::Never
    } else {
        env_logger::WriteStyle::Auto
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .write_style(style)
        .format_timestamp(None)
        .try_init();
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    let run = std::panic::catch_unwind(|| match &cli.command {
        Command::Replay(a) => replay(&a.manifest, &a.out),
        other => other.resolve().and_then(|(spec, out)| execute(spec, &out)),
    });
    // The default hook has already printed the panic message.
    let Ok(result) = run else {
        return EXIT_INTERNAL;
    };
    match result {
        Ok((manifest, status)) => {
            log::info!(
                "{} finished in {:.1}s, {} artifacts",
                manifest.command.name(),
                manifest.duration_secs,
                manifest.artifacts.len()
            );
            status
        }
        Err(e) => {
            let (class, code) = error_class(&e);
            eprintln!("error[{class}]: {e}");
            code
        }
    }
}
