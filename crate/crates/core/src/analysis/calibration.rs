//! Coverage of credible intervals on data simulated from known
//! hyperparameters.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::credible_interval;
use crate::error::{Error, Result};
use crate::gibbs::{run_chain_with, ChainConfig};
use crate::model::{simulate_entity, Hyperparams};
use crate::rng::RngState;
use crate::data::PovMatrix;
use crate::samples::Horizon;

pub const DEFAULT_ALPHAS: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub replicates: usize,
    pub base: Hyperparams,
    /// Standard deviation of the additive noise on the three locations.
    pub location_jitter: f64,
    /// Standard deviation of the log-scale noise on the three scales.
    pub scale_jitter: f64,
    pub n_entities: usize,
    pub observed_periods: usize,
    /// Fit only the entities with a nonzero count in the observed periods.
    pub drop_zero_rows: bool,
    pub alphas: Vec<f64>,
    pub chain: ChainConfig,
    pub seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            base: Hyperparams {
                mu_lambda: 1.3,
                sigma_lambda: 0.75,
                mu_tau: 2.0,
                sigma_tau: 1.0,
                mu_beta: 4.0,
                sigma_beta: 1.5,
            },
            location_jitter: 0.1,
            scale_jitter: 0.01,
            n_entities: 24,
            observed_periods: 5,
            drop_zero_rows: false,
            alphas: DEFAULT_ALPHAS.to_vec(),
            chain: ChainConfig::default().with_schedule(11_000, 1_000, 10),
            seed: 1,
            workers: 0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n_entities < 2 {
            return Err(Error::Config("need at least 2 entities per data set".into()));
        }
        let horizon = self.chain.model.horizon as usize;
        if self.observed_periods == 0 || self.observed_periods + 1 > horizon {
            return Err(Error::Config(format!(
                "observed periods must be in 1..{horizon} so a held-out period exists"
            )));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Config(format!("alpha {a} outside (0, 1)")));
        }
        if !(self.location_jitter >= 0.0 && self.scale_jitter >= 0.0) {
            return Err(Error::Config("jitter must be non-negative".into()));
        }
        self.chain.validate()
    }
}

/// Add `N(0, location_jitter^2)` to each location and multiply each scale by
/// `exp(N(0, scale_jitter^2))`.
pub fn perturb(rng: &mut RngState, base: &Hyperparams, location_jitter: f64, scale_jitter: f64) -> Hyperparams {
    let mut v = base.to_array();
    for (k, x) in v.iter_mut().enumerate() {
        let z = rng.standard_normal();
        if k % 2 == 0 {
            *x += location_jitter * z;
        } else {
            *x *= (scale_jitter * z).exp();
        }
    }
    Hyperparams::from_array(v).expect("perturbation keeps scales positive")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub truth: Hyperparams,
    /// Entities that were fitted.
    pub n_fitted: usize,
    /// `hyper_hits[a][k]`: did the interval at `alphas[a]` cover parameter `k`.
    pub hyper_hits: Vec<[bool; 6]>,
    /// `predictive_hits[a]`: number of fitted entities whose held-out count
    /// fell in its interval at `alphas[a]`.
    pub predictive_hits: Vec<usize>,
    pub error: Option<String>,
}

impl ReplicateOutcome {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Coverage per nominal level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub alphas: Vec<f64>,
    pub coverage: Vec<f64>,
    /// Intervals behind each coverage fraction.
    pub intervals: usize,
    pub replicates: usize,
}

impl CoverageReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,coverage,intervals\n");
        for (a, c) in self.alphas.iter().zip(&self.coverage) {
            let _ = writeln!(out, "{a},{c},{}", self.intervals);
        }
        out
    }

    pub fn at(&self, alpha: f64) -> Option<f64> {
        self.alphas
            .iter()
            .position(|&a| (a - alpha).abs() < 1e-12)
            .map(|k| self.coverage[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub hyper: CoverageReport,
    pub predictive: CoverageReport,
    /// `per_parameter[a][k]`: coverage of parameter `k` alone at `alphas[a]`.
    pub per_parameter: Vec<[f64; 6]>,
    pub replicates: Vec<ReplicateOutcome>,
}

impl CalibrationResult {
    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.failed()).count()
    }

    pub fn per_parameter_csv(&self) -> String {
        let mut out = format!("alpha,{}\n", Hyperparams::NAMES.join(","));
        for (a, row) in self.hyper.alphas.iter().zip(&self.per_parameter) {
            let _ = write!(out, "{a}");
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn replicates_csv(&self) -> String {
        let mut out = format!("replicate,{},n_fitted", Hyperparams::NAMES.join(","));
        for a in &self.hyper.alphas {
            let _ = write!(out, ",hyper_hits_{a},pred_hits_{a}");
        }
        out.push_str(",error\n");
        for r in &self.replicates {
            let _ = write!(out, "{}", r.index + 1);
            for v in r.truth.to_array() {
                let _ = write!(out, ",{v}");
            }
            let _ = write!(out, ",{}", r.n_fitted);
            for a in 0..self.hyper.alphas.len() {
                let h = r.hyper_hits.get(a).map_or(0, |h| h.iter().filter(|&&b| b).count());
                let p = r.predictive_hits.get(a).copied().unwrap_or(0);
                let _ = write!(out, ",{h},{p}");
            }
            let msg = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(out, ",{msg}");
        }
        out
    }
}

/// Run `config.replicates` independent simulate-and-fit rounds and aggregate
/// interval coverage. Replicate `r` draws everything from the stream
/// `(config.seed, r)`, so results do not depend on the worker count.
pub fn calibration_study(config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let replicates: Vec<ReplicateOutcome> = pool.install(|| {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(config, r))
            .collect()
    });
    Ok(aggregate(config, replicates))
}

fn run_replicate(config: &CalibrationConfig, index: usize) -> ReplicateOutcome {
    let mut rng = RngState::with_stream(config.seed, index as u64);
    let truth = perturb(&mut rng, &config.base, config.location_jitter, config.scale_jitter);
    let mut outcome = ReplicateOutcome {
        index,
        truth,
        n_fitted: 0,
        hyper_hits: Vec::new(),
        predictive_hits: Vec::new(),
        error: None,
    };
    match fit_replicate(config, rng, &truth, &mut outcome) {
        Ok(()) => outcome,
        Err(e) => {
            log::warn!("calibration replicate {} failed: {e}", index + 1);
            outcome.error = Some(e.to_string());
            outcome
        }
    }
}

fn fit_replicate(
    config: &CalibrationConfig,
    mut rng: RngState,
    truth: &Hyperparams,
    outcome: &mut ReplicateOutcome,
) -> Result<()> {
    let d = config.observed_periods;
    let mut rows = Vec::new();
    let mut held_out = Vec::new();
    for _ in 0..config.n_entities {
        let (_, row) = simulate_entity(&mut rng, truth, &config.chain.model);
        if config.drop_zero_rows && row[..d].iter().all(|&c| c == 0) {
            continue;
        }
        held_out.push(row[d]);
        rows.push(row[..d].to_vec());
    }
    let names = (1..=rows.len()).map(|i| format!("entity{i:03}")).collect();
    let labels = (1..=d).map(|t| format!("P{t}")).collect();
    let matrix = PovMatrix::new(names, labels, rows)?;
    outcome.n_fitted = matrix.n_entities();

    let samples = run_chain_with(rng, &matrix.to_real(), &config.chain)?;
    let truth = truth.to_array();
    for &alpha in &config.alphas {
        let mut hits = [false; 6];
        for (k, hit) in hits.iter_mut().enumerate() {
            let (lo, hi) = credible_interval(&samples.hyper_column(k), alpha)?;
            *hit = lo <= truth[k] && truth[k] <= hi;
        }
        outcome.hyper_hits.push(hits);
        let mut covered = 0;
        for (i, &x) in held_out.iter().enumerate() {
            let (lo, hi) = credible_interval(&samples.predictions(Horizon::Next, i), alpha)?;
            covered += usize::from(lo <= x && x <= hi);
        }
        outcome.predictive_hits.push(covered);
    }
    Ok(())
}

fn aggregate(config: &CalibrationConfig, replicates: Vec<ReplicateOutcome>) -> CalibrationResult {
    let ok: Vec<&ReplicateOutcome> = replicates.iter().filter(|r| !r.failed()).collect();
    let n_alpha = config.alphas.len();
    let hyper_intervals = 6 * ok.len();
    let pred_intervals: usize = ok.iter().map(|r| r.n_fitted).sum();
    let mut per_parameter = vec![[0.0; 6]; n_alpha];
    let mut hyper = vec![0.0; n_alpha];
    let mut predictive = vec![0.0; n_alpha];
    for a in 0..n_alpha {
        for r in &ok {
            for (count, &hit) in per_parameter[a].iter_mut().zip(&r.hyper_hits[a]) {
                if hit {
                    *count += 1.0;
                    hyper[a] += 1.0;
                }
            }
            predictive[a] += r.predictive_hits[a] as f64;
        }
        if !ok.is_empty() {
            for c in per_parameter[a].iter_mut() {
                *c /= ok.len() as f64;
            }
            hyper[a] /= hyper_intervals as f64;
        }
        if pred_intervals > 0 {
            predictive[a] /= pred_intervals as f64;
        }
    }
    CalibrationResult {
        hyper: CoverageReport {
            alphas: config.alphas.clone(),
            coverage: hyper,
            intervals: hyper_intervals,
            replicates: ok.len(),
        },
        predictive: CoverageReport {
            alphas: config.alphas.clone(),
            coverage: predictive,
            intervals: pred_intervals,
            replicates: ok.len(),
        },
        per_parameter,
        replicates,
    }
}
