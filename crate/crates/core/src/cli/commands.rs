use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{sha256_files, sha256_hex};
use crate::analysis::{
    backtest, calibration_study, new_entity_estimate, predictive_summary, predictive_table, summary_csv,
    zero_probability, zero_probability_csv, BacktestConfig, CalibrationConfig, TYPICAL_TOTAL,
};
use crate::data::load_matrix;
use crate::error::{Error, Result};
use crate::gibbs::{run_chain, ChainConfig};
use crate::plot;
use crate::samples::{Horizon, PosteriorSamples, BUNDLE_FILE};

/// Error bar half-width on the zero-probability chart; the spread seen
/// between independent runs.
const ZERO_PROBABILITY_BAND: f64 = 0.03;

/// Fully resolved command, as stored in a run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum CommandSpec {
    Fit {
        data: PathBuf,
        smoothing: Option<Smoothing>,
        chain: ChainConfig,
    },
    Report {
        samples: PathBuf,
        charts: bool,
    },
    Calibrate {
        config: CalibrationConfig,
        /// Largest tolerated fraction of failed replicates.
        max_failure_fraction: f64,
    },
    Validate {
        data: PathBuf,
        /// 1-based.
        train_rows: Vec<usize>,
        /// 1-based.
        train_cols: Vec<usize>,
        /// 1-based.
        target_col: usize,
        chain: ChainConfig,
    },
}

/// Columns (1-based) and weights of a smoothing step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub columns: (usize, usize),
    /// `None` uses the two column sums.
    pub weights: Option<(f64, f64)>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<String>,
    pub input_sha256: Option<String>,
    /// Nonzero when the command finished but its result counts as a failure.
    pub status: i32,
}

impl CommandSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            CommandSpec::Fit { chain, .. } | CommandSpec::Validate { chain, .. } => Some(chain.seed),
            CommandSpec::Calibrate { config, .. } => Some(config.seed),
            CommandSpec::Report { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CommandSpec::Fit { .. } => "fit",
            CommandSpec::Report { .. } => "report",
            CommandSpec::Calibrate { .. } => "calibrate",
            CommandSpec::Validate { .. } => "validate",
        }
    }

    /// Fingerprint of the command's input, if it has one.
    pub fn input_fingerprint(&self) -> Result<Option<String>> {
        match self {
            CommandSpec::Fit { data, .. } | CommandSpec::Validate { data, .. } => {
                Ok(Some(sha256_hex(&read_bytes(data)?)))
            }
            CommandSpec::Report { samples, .. } => {
                check_bundle_dir(samples)?;
                Ok(Some(sha256_files(samples, &bundle_files())?))
            }
            CommandSpec::Calibrate { .. } => Ok(None),
        }
    }

    /// Run the command, writing its artifacts into `out`.
    pub fn execute(&self, out: &Path) -> Result<Outcome> {
        let input_sha256 = self.input_fingerprint()?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let (artifacts, status) = match self {
            CommandSpec::Fit { data, smoothing, chain } => (fit(data, *smoothing, chain, out)?, 0),
            CommandSpec::Report { samples, charts } => (report(samples, *charts, out)?, 0),
            CommandSpec::Calibrate {
                config,
                max_failure_fraction,
            } => calibrate(config, *max_failure_fraction, out)?,
            CommandSpec::Validate {
                data,
                train_rows,
                train_cols,
                target_col,
                chain,
            } => (validate(data, train_rows, train_cols, *target_col, chain, out)?, 0),
        };
        Ok(Outcome {
            artifacts,
            input_sha256,
            status,
        })
    }
}

fn bundle_files() -> [&'static str; 5] {
    [BUNDLE_FILE, "hyper.csv", "latents.csv", "pred_next.csv", "pred_next2.csv"]
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(out: &Path, name: &str, body: &str, written: &mut Vec<String>) -> Result<()> {
    let path = out.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    written.push(name.to_string());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format(e.to_string()))
}

fn zero_based(one_based: usize, what: &str) -> Result<usize> {
    one_based
        .checked_sub(1)
        .ok_or_else(|| Error::Config(format!("{what} numbers start at 1")))
}

fn fit(data: &Path, smoothing: Option<Smoothing>, chain: &ChainConfig, out: &Path) -> Result<Vec<String>> {
    let matrix = load_matrix(&read_text(data)?)?;
    matrix.ensure_no_zero_rows()?;
    let smoothed = match smoothing {
        None => matrix.to_real(),
        Some(s) => {
            let j1 = zero_based(s.columns.0, "column")?;
            let j2 = zero_based(s.columns.1, "column")?;
            match s.weights {
                Some((c1, c2)) => matrix.smooth(j1, j2, c1, c2)?,
                None => matrix.smooth_by_column_sums(j1, j2)?,
            }
        }
    };
    let samples = run_chain(&smoothed, chain)?;
    let mut written = samples.write_bundle(out)?;
    write(out, "smoothed.csv", &smoothed.to_csv(), &mut written)?;
    Ok(written)
}

fn check_bundle_dir(dir: &Path) -> Result<()> {
    if dir.join(BUNDLE_FILE).exists() {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "{} does not hold a samples bundle (no {BUNDLE_FILE})",
            dir.display()
        )))
    }
}

fn report(samples_dir: &Path, charts: bool, out: &Path) -> Result<Vec<String>> {
    let samples = PosteriorSamples::read_bundle(samples_dir)?;
    let mut written = Vec::new();
    for (horizon, tag) in [(Horizon::Next, "next"), (Horizon::Following, "following")] {
        let table = predictive_table(&samples, horizon);
        write(out, &format!("predictive_{tag}.csv"), &table.to_csv(), &mut written)?;
        let summary = predictive_summary(&samples, horizon);
        write(out, &format!("summary_{tag}.csv"), &summary_csv(&summary), &mut written)?;
        if charts && horizon == Horizon::Next {
            for (i, name) in samples.entity_names().iter().enumerate() {
                let file = format!("charts/predictive_{:02}_{}.svg", i + 1, slug(name));
                write(out, &file, &plot::predictive_bars(&table, i), &mut written)?;
            }
        }
    }
    write(out, "zero_probability.csv", &zero_probability_csv(&samples), &mut written)?;
    let estimate = new_entity_estimate(&samples, TYPICAL_TOTAL);
    write(out, "new_entities.json", &to_json(&estimate)?, &mut written)?;
    if charts {
        let svg = plot::zero_probability_chart(
            samples.entity_names(),
            &zero_probability(&samples, Horizon::Next),
            &zero_probability(&samples, Horizon::Following),
            ZERO_PROBABILITY_BAND,
        );
        write(out, "charts/zero_probability.svg", &svg, &mut written)?;
    }
    Ok(written)
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn calibrate(config: &CalibrationConfig, max_failure_fraction: f64, out: &Path) -> Result<(Vec<String>, i32)> {
    let result = calibration_study(config)?;
    let mut written = Vec::new();
    write(out, "coverage_hyper.csv", &result.hyper.to_csv(), &mut written)?;
    write(out, "coverage_predictive.csv", &result.predictive.to_csv(), &mut written)?;
    write(out, "coverage_per_parameter.csv", &result.per_parameter_csv(), &mut written)?;
    write(out, "replicates.csv", &result.replicates_csv(), &mut written)?;
    write(out, "calibration.json", &to_json(&result)?, &mut written)?;
    write(
        out,
        "charts/coverage.svg",
        &plot::coverage_chart(&result.hyper, &result.predictive),
        &mut written,
    )?;
    let failed = result.failures();
    let status = if failed as f64 > max_failure_fraction * config.replicates as f64 {
        log::error!("{failed} of {} replicates failed", config.replicates);
        super::EXIT_CALIBRATION_FAILURES
    } else {
        0
    };
    Ok((written, status))
}

fn validate(
    data: &Path,
    train_rows: &[usize],
    train_cols: &[usize],
    target_col: usize,
    chain: &ChainConfig,
    out: &Path,
) -> Result<Vec<String>> {
    let matrix = load_matrix(&read_text(data)?)?;
    let to_zero = |v: &[usize], what| v.iter().map(|&x| zero_based(x, what)).collect::<Result<Vec<_>>>();
    let config = BacktestConfig {
        train_rows: to_zero(train_rows, "row")?,
        train_cols: to_zero(train_cols, "column")?,
        target_col: zero_based(target_col, "column")?,
        chain: *chain,
    };
    let report = backtest(&matrix, &config)?;
    if report.heuristic_only {
        log::warn!("target period total is far from the training totals; evaluation heuristic only");
    }
    let mut written = Vec::new();
    write(out, "backtest.csv", &report.to_csv(), &mut written)?;
    write(out, "backtest.json", &to_json(&report)?, &mut written)?;
    write(out, "charts/backtest.svg", &plot::backtest_chart(&report), &mut written)?;
    Ok(written)
}
