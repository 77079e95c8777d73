//! Summaries of posterior samples and the experiments built on them.

mod backtest;
mod calibration;

pub use backtest::{backtest, BacktestConfig, BacktestReport, BacktestRow};
pub use calibration::{
    calibration_study, perturb, CalibrationConfig, CalibrationResult, CoverageReport,
    ReplicateOutcome, DEFAULT_ALPHAS,
};

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samples::{Horizon, PosteriorSamples};

/// Past counts of newly introduced entities per period, for comparison with
/// [`new_entity_estimate`].
pub const NEW_ENTITY_HISTORY: [u32; 4] = [9, 14, 27, 11];

/// Typical per-period total used by [`new_entity_estimate`].
pub const TYPICAL_TOTAL: f64 = 70.0;

/// Per-entity histograms of predicted counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveTable {
    pub horizon: Horizon,
    pub n: usize,
    pub entity_names: Vec<String>,
    /// `histograms[i][x]` counts draws equal to `x`; all rows have the same
    /// length, one past the largest draw of any entity.
    pub histograms: Vec<Vec<u32>>,
}

impl PredictiveTable {
    pub fn max_count(&self) -> usize {
        self.histograms.first().map_or(0, |h| h.len().saturating_sub(1))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity");
        for x in 0..=self.max_count() {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
        for (name, h) in self.entity_names.iter().zip(&self.histograms) {
            out.push_str(name);
            for c in h {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn predictive_table(samples: &PosteriorSamples, horizon: Horizon) -> PredictiveTable {
    let draws: Vec<Vec<u32>> = (0..samples.n_entities())
        .map(|i| samples.predictions(horizon, i))
        .collect();
    let max = draws.iter().flatten().copied().max().unwrap_or(0) as usize;
    let histograms = draws
        .iter()
        .map(|d| {
            let mut h = vec![0u32; max + 1];
            for &x in d {
                h[x as usize] += 1;
            }
            h
        })
        .collect();
    PredictiveTable {
        horizon,
        n: samples.n(),
        entity_names: samples.entity_names().to_vec(),
        histograms,
    }
}

/// Posterior probability of a zero count, per entity.
pub fn zero_probability(samples: &PosteriorSamples, horizon: Horizon) -> Vec<f64> {
    let n = samples.n() as f64;
    (0..samples.n_entities())
        .map(|i| {
            samples
                .predictions(horizon, i)
                .iter()
                .filter(|&&x| x == 0)
                .count() as f64
                / n
        })
        .collect()
}

/// Largest per-entity difference in zero probability between two fits of the
/// same data.
pub fn zero_probability_gap(a: &PosteriorSamples, b: &PosteriorSamples, horizon: Horizon) -> Result<f64> {
    if a.entity_names() != b.entity_names() {
        return Err(Error::Shape("samples cover different entities".into()));
    }
    Ok(zero_probability(a, horizon)
        .iter()
        .zip(zero_probability(b, horizon))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Central interval holding `100 alpha%` of the draws.
///
/// Nearest-rank rule: with `n` sorted draws the endpoints are the order
/// statistics of rank `ceil(n (1 - alpha) / 2)` and `ceil(n (1 + alpha) / 2)`,
/// clamped to `[1, n]`. For draws `1..=100` and `alpha = 0.8` this gives
/// `[10, 90]`.
pub fn credible_interval<T: Copy + PartialOrd>(draws: &[T], alpha: f64) -> Result<(T, T)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if draws.is_empty() {
        return Err(Error::Domain("no draws".into()));
    }
    if draws.iter().any(|x| x.partial_cmp(x).is_none()) {
        return Err(Error::Domain("draws contain NaN".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sorted.len();
    let lo = nearest_rank(n, 0.5 * (1.0 - alpha));
    let hi = nearest_rank(n, 0.5 * (1.0 + alpha));
    Ok((sorted[lo - 1], sorted[hi - 1]))
}

fn nearest_rank(n: usize, q: f64) -> usize {
    // The small offset keeps exact products like 100 * 0.1 from rounding up.
    ((n as f64 * q - 1e-9).ceil() as usize).clamp(1, n)
}

/// Per-entity predictive summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySummary {
    pub entity: String,
    pub zero_probability: f64,
    pub mean: f64,
    pub variance: f64,
    pub interval50: (u32, u32),
    pub interval80: (u32, u32),
}

pub fn predictive_summary(samples: &PosteriorSamples, horizon: Horizon) -> Vec<EntitySummary> {
    (0..samples.n_entities())
        .map(|i| {
            let draws = samples.predictions(horizon, i);
            let (mean, variance) = mean_variance(&draws);
            EntitySummary {
                entity: samples.entity_names()[i].clone(),
                zero_probability: draws.iter().filter(|&&x| x == 0).count() as f64 / draws.len() as f64,
                mean,
                variance,
                interval50: credible_interval(&draws, 0.5).expect("draws are nonempty"),
                interval80: credible_interval(&draws, 0.8).expect("draws are nonempty"),
            }
        })
        .collect()
}

/// Sample mean and (population) variance.
pub fn mean_variance(draws: &[u32]) -> (f64, f64) {
    let n = draws.len() as f64;
    let mean = draws.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    let var = draws.iter().map(|&x| (f64::from(x) - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewEntityEstimate {
    pub typical_total: f64,
    /// Posterior mean of the summed next-period predictions.
    pub existing_total_mean: f64,
    pub estimate: f64,
    pub history: Vec<u32>,
}

/// Counts left over for entities not yet seen: `typical_total` minus the
/// posterior mean of the next-period total over existing entities.
pub fn new_entity_estimate(samples: &PosteriorSamples, typical_total: f64) -> NewEntityEstimate {
    let totals = samples.prediction_totals(Horizon::Next);
    let mean = totals.iter().map(|&t| t as f64).sum::<f64>() / totals.len() as f64;
    NewEntityEstimate {
        typical_total,
        existing_total_mean: mean,
        estimate: typical_total - mean,
        history: NEW_ENTITY_HISTORY.to_vec(),
    }
}

/// Zero probabilities for both horizons, sorted by the next-period value
/// (largest first, ties by entity order).
pub fn zero_probability_csv(samples: &PosteriorSamples) -> String {
    let next = zero_probability(samples, Horizon::Next);
    let following = zero_probability(samples, Horizon::Following);
    let mut order: Vec<usize> = (0..next.len()).collect();
    order.sort_by(|&a, &b| next[b].total_cmp(&next[a]).then(a.cmp(&b)));
    let mut out = String::from("entity,zero_next,zero_following\n");
    for i in order {
        let _ = writeln!(out, "{},{},{}", samples.entity_names()[i], next[i], following[i]);
    }
    out
}

pub fn summary_csv(rows: &[EntitySummary]) -> String {
    let mut out = String::from("entity,zero_probability,mean,variance,lo50,hi50,lo80,hi80\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.entity,
            r.zero_probability,
            r.mean,
            r.variance,
            r.interval50.0,
            r.interval50.1,
            r.interval80.0,
            r.interval80.1
        );
    }
    out
}
