//! Fit on the leading periods of a matrix and check the predictions against a
//! later, held-out period.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{credible_interval, mean_variance};
use crate::data::PovMatrix;
use crate::error::{Error, Result};
use crate::gibbs::{run_chain, ChainConfig};
use crate::samples::Horizon;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// 0-based row indices.
    pub train_rows: Vec<usize>,
    /// 0-based, contiguous and increasing column indices.
    pub train_cols: Vec<usize>,
    /// 0-based; one or two columns past the last training column.
    pub target_col: usize,
    pub chain: ChainConfig,
}

impl BacktestConfig {
    fn horizon(&self, n_periods: usize) -> Result<Horizon> {
        if self.train_cols.is_empty() || self.train_rows.is_empty() {
            return Err(Error::Config("empty training slice".into()));
        }
        if self.train_cols.contains(&self.target_col) {
            return Err(Error::Config(format!(
                "target column {} is one of the training columns",
                self.target_col + 1
            )));
        }
        if self.train_cols.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::Config("training columns must be contiguous and increasing".into()));
        }
        if self.target_col >= n_periods {
            return Err(Error::Index(format!(
                "target column {} out of range for {n_periods} periods",
                self.target_col + 1
            )));
        }
        let last = *self.train_cols.last().expect("checked nonempty");
        match self.target_col.checked_sub(last) {
            Some(1) => Ok(Horizon::Next),
            Some(2) => Ok(Horizon::Following),
            _ => Err(Error::Config(format!(
                "target column {} must be one or two periods after the last training column {}",
                self.target_col + 1,
                last + 1
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRow {
    pub entity: String,
    pub truth: u32,
    pub mean: f64,
    pub interval50: (u32, u32),
    pub interval80: (u32, u32),
    pub hit50: bool,
    pub hit80: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub target_label: String,
    pub rows: Vec<BacktestRow>,
    /// Training rows left out because they were all zero.
    pub dropped: Vec<String>,
    pub hits50: usize,
    pub hits80: usize,
    /// The target period's total is far from the training periods' typical
    /// total, so the hit counts say little about the model.
    pub heuristic_only: bool,
}

impl BacktestReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity,truth,mean,lo50,hi50,lo80,hi80,hit50,hit80\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.entity,
                r.truth,
                r.mean,
                r.interval50.0,
                r.interval50.1,
                r.interval80.0,
                r.interval80.1,
                r.hit50,
                r.hit80
            );
        }
        out
    }
}

/// A target total outside `[1/2, 2]` times the mean training-period total
/// marks the comparison as heuristic.
const TOTAL_RATIO_LIMIT: f64 = 2.0;

/// Fit the training slice (zero rows dropped) and compare the central 50% and
/// 80% predictive intervals with the target column.
pub fn backtest(matrix: &PovMatrix, config: &BacktestConfig) -> Result<BacktestReport> {
    let horizon = config.horizon(matrix.n_periods())?;
    let train = matrix.submatrix(&config.train_rows, &config.train_cols)?;
    let zero = train.zero_rows();
    let keep: Vec<usize> = (0..config.train_rows.len()).filter(|i| !zero.contains(i)).collect();
    if keep.is_empty() {
        return Err(Error::Empty);
    }
    let kept_rows: Vec<usize> = keep.iter().map(|&i| config.train_rows[i]).collect();
    let fit = matrix.submatrix(&kept_rows, &config.train_cols)?;
    let samples = run_chain(&fit.to_real(), &config.chain)?;

    let mut rows = Vec::with_capacity(kept_rows.len());
    for (i, &r) in kept_rows.iter().enumerate() {
        let draws = samples.predictions(horizon, i);
        let truth = matrix.get(r, config.target_col);
        let interval50 = credible_interval(&draws, 0.5)?;
        let interval80 = credible_interval(&draws, 0.8)?;
        rows.push(BacktestRow {
            entity: matrix.entity_names()[r].clone(),
            truth,
            mean: mean_variance(&draws).0,
            interval50,
            interval80,
            hit50: interval50.0 <= truth && truth <= interval50.1,
            hit80: interval80.0 <= truth && truth <= interval80.1,
        });
    }

    let target_total: f64 = rows.iter().map(|r| f64::from(r.truth)).sum();
    let train_mean = (0..fit.n_periods()).map(|j| fit.column_sum(j) as f64).sum::<f64>()
        / fit.n_periods() as f64;
    let ratio = target_total / train_mean;
    Ok(BacktestReport {
        target_label: matrix.period_labels()[config.target_col].clone(),
        hits50: rows.iter().filter(|r| r.hit50).count(),
        hits80: rows.iter().filter(|r| r.hit80).count(),
        dropped: zero.iter().map(|&i| train.entity_names()[i].clone()).collect(),
        heuristic_only: !(1.0 / TOTAL_RATIO_LIMIT..=TOTAL_RATIO_LIMIT).contains(&ratio),
        rows,
    })
}
