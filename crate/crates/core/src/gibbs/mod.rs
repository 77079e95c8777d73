//! Gibbs sampler for the on-stage window model.
//!
//! Each iteration redraws the six hyperparameters from their normal
//! location-scale conditionals (on `ln lambda_i`, `tau_i`, `beta_i`), then for
//! every entity redraws `lambda_i`, `tau_i` and `beta_i` in that order by the
//! histogram approximation in [`grid`]. On retained iterations the counts for
//! the next two periods are drawn from the current latents.

pub mod conjugate;
pub mod grid;

use log::warn;
use serde::{Deserialize, Serialize};

pub use conjugate::{update_location_scale, Priors};
pub use grid::{update_latent_grid, Coordinate, GridConfig};

use crate::data::SmoothedMatrix;
use crate::error::{Error, Result};
use crate::model::{sample_predictive, CharacterLatents, Hyperparams, ModelConfig};
use crate::rng::RngState;
use crate::samples::PosteriorSamples;
use grid::{GridSampler, RowStats};

/// Span, in nats either side of the data-based estimate of `mu_lambda`, of the
/// default lambda grid.
pub const LAMBDA_GRID_HALF_SPAN: f64 = 8.0;

/// Fraction of iterations a coordinate may stay in one grid cell before the
/// chain reports it as stuck.
pub const DEGENERATE_CELL_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub grid_points: usize,
    /// Upper end of the lambda grid; defaults to `exp(mu_hat + 8)`.
    pub lambda_grid_max: Option<f64>,
    /// Lower end of the lambda grid; defaults to `exp(mu_hat - 8)`.
    pub lambda_grid_min: Option<f64>,
    pub seed: u64,
    pub prior_loc_sd: f64,
    pub prior_scale_shape: f64,
    pub prior_scale_rate: f64,
    pub model: ModelConfig,
    /// Perturb the deterministic starting point.
    pub random_start: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 101_000,
            burn_in: 1_000,
            thin: 100,
            grid_points: 512,
            lambda_grid_max: None,
            lambda_grid_min: None,
            seed: 1,
            prior_loc_sd: 1000.0,
            prior_scale_shape: 0.001,
            prior_scale_rate: 0.001,
            model: ModelConfig::default(),
            random_start: false,
        }
    }
}

impl ChainConfig {
    pub fn with_schedule(mut self, iterations: usize, burn_in: usize, thin: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = burn_in;
        self.thin = thin;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn priors(&self) -> Priors {
        Priors {
            loc_sd: self.prior_loc_sd,
            scale_shape: self.prior_scale_shape,
            scale_rate: self.prior_scale_rate,
        }
    }

    /// Number of retained draws, `(iterations - burn_in) / thin`.
    pub fn n_samples(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be positive".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if !(self.iterations - self.burn_in).is_multiple_of(self.thin) {
            return Err(Error::Config(format!(
                "iterations - burn-in ({}) is not divisible by thin ({})",
                self.iterations - self.burn_in,
                self.thin
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        for (name, v) in [
            ("prior_loc_sd", self.prior_loc_sd),
            ("prior_scale_shape", self.prior_scale_shape),
            ("prior_scale_rate", self.prior_scale_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for v in [self.lambda_grid_min, self.lambda_grid_max].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("lambda grid bounds must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Starting values: `lambda` is the mean nonzero count, the window spans the
/// nonzero periods with one period to spare on each side.
pub fn initial_latents(row: &[f64], model: &ModelConfig) -> CharacterLatents {
    let upper = model.upper();
    let nonzero: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(j, &x)| (j + 1, x))
        .collect();
    match (nonzero.first(), nonzero.last()) {
        (Some(&(first, _)), Some(&(last, _))) => {
            let lambda = nonzero.iter().map(|p| p.1).sum::<f64>() / nonzero.len() as f64;
            let (first, last) = (first as f64, last as f64);
            CharacterLatents {
                lambda,
                tau: ((last - first) / 2.0 + 1.0).clamp(0.0, upper),
                beta: ((first + last) / 2.0).clamp(0.0, upper),
            }
        }
        _ => CharacterLatents {
            lambda: 1.0,
            tau: 1.0_f64.min(upper),
            beta: upper / 2.0,
        },
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt().max(0.1))
}

/// Per-(entity, coordinate) count of iterations that landed in the same grid
/// cell as the previous one.
#[derive(Debug, Clone)]
struct CellTracker {
    last: Vec<usize>,
    repeats: Vec<u64>,
}

impl CellTracker {
    fn new(slots: usize) -> Self {
        Self {
            last: vec![usize::MAX; slots],
            repeats: vec![0; slots],
        }
    }

    fn record(&mut self, slot: usize, cell: usize) {
        if self.last[slot] == cell {
            self.repeats[slot] += 1;
        }
        self.last[slot] = cell;
    }
}

/// Mutable state of one chain.
pub struct Chain<'a> {
    data: &'a SmoothedMatrix,
    config: ChainConfig,
    rows: Vec<RowStats>,
    sampler: GridSampler,
    rng: RngState,
    hyper: Hyperparams,
    log_lambda: Vec<f64>,
    tau: Vec<f64>,
    beta: Vec<f64>,
    cells: CellTracker,
    iteration: usize,
}

impl<'a> Chain<'a> {
    pub fn new(data: &'a SmoothedMatrix, config: ChainConfig) -> Result<Self> {
        Self::with_rng(data, config, RngState::new(config.seed))
    }

    pub fn with_rng(data: &'a SmoothedMatrix, config: ChainConfig, mut rng: RngState) -> Result<Self> {
        config.validate()?;
        config.model.validate(data.n_periods())?;
        let n = data.n_entities();
        if n < 2 {
            return Err(Error::Degenerate(format!(
                "need at least 2 entities to fit the population, got {n}"
            )));
        }
        let upper = config.model.upper();
        let mut start: Vec<CharacterLatents> = (0..n)
            .map(|i| initial_latents(data.row(i), &config.model))
            .collect();
        let log_lambda: Vec<f64> = start.iter().map(|l| l.lambda.ln()).collect();
        let mu_hat = log_lambda.iter().sum::<f64>() / n as f64;
        let lambda_max = config
            .lambda_grid_max
            .unwrap_or_else(|| (mu_hat + LAMBDA_GRID_HALF_SPAN).exp());
        let lambda_min = config
            .lambda_grid_min
            .unwrap_or_else(|| (mu_hat - LAMBDA_GRID_HALF_SPAN).exp());
        let grid = GridConfig::new(config.grid_points, lambda_min, lambda_max, config.model)?;

        if config.random_start {
            for (i, l) in start.iter_mut().enumerate() {
                randomize_start(&mut rng, l, data.row(i), upper);
            }
        }
        for l in start.iter_mut() {
            l.lambda = l.lambda.clamp(lambda_min, lambda_max);
        }
        let log_lambda: Vec<f64> = start.iter().map(|l| l.lambda.ln()).collect();
        let tau: Vec<f64> = start.iter().map(|l| l.tau).collect();
        let beta: Vec<f64> = start.iter().map(|l| l.beta).collect();
        let (ml, sl) = mean_sd(&log_lambda);
        let (mt, st) = mean_sd(&tau);
        let (mb, sb) = mean_sd(&beta);
        let hyper = Hyperparams::new(ml, sl, mt, st, mb, sb)?;

        Ok(Self {
            data,
            config,
            rows: (0..n).map(|i| RowStats::new(data.row(i))).collect(),
            sampler: GridSampler::new(grid),
            rng,
            hyper,
            log_lambda,
            tau,
            beta,
            cells: CellTracker::new(3 * n),
            iteration: 0,
        })
    }

    pub fn hyper(&self) -> Hyperparams {
        self.hyper
    }

    pub fn grid(&self) -> &GridConfig {
        self.sampler.config()
    }

    pub fn latents(&self, entity: usize) -> CharacterLatents {
        CharacterLatents {
            lambda: self.log_lambda[entity].exp(),
            tau: self.tau[entity],
            beta: self.beta[entity],
        }
    }

    /// One full Gibbs iteration.
    pub fn step(&mut self) -> Result<()> {
        let priors = self.config.priors();
        let h = &mut self.hyper;
        (h.mu_lambda, h.sigma_lambda) =
            conjugate::sweep(&mut self.rng, &self.log_lambda, h.mu_lambda, &priors);
        (h.mu_tau, h.sigma_tau) = conjugate::sweep(&mut self.rng, &self.tau, h.mu_tau, &priors);
        (h.mu_beta, h.sigma_beta) = conjugate::sweep(&mut self.rng, &self.beta, h.mu_beta, &priors);
        let h = self.hyper;

        for i in 0..self.rows.len() {
            let row = &self.rows[i];
            let (u, cell) = self.sampler.draw_log_lambda(
                &mut self.rng,
                row,
                self.tau[i],
                self.beta[i],
                h.mu_lambda,
                h.sigma_lambda,
            )?;
            self.log_lambda[i] = u;
            self.cells.record(3 * i, cell);

            let lambda = u.exp();
            let (tau, cell) =
                self.sampler
                    .draw_tau(&mut self.rng, row, lambda, self.beta[i], h.mu_tau, h.sigma_tau)?;
            self.tau[i] = tau;
            self.cells.record(3 * i + 1, cell);

            let (beta, cell) =
                self.sampler
                    .draw_beta(&mut self.rng, row, lambda, tau, h.mu_beta, h.sigma_beta)?;
            self.beta[i] = beta;
            self.cells.record(3 * i + 2, cell);
        }
        self.iteration += 1;
        Ok(())
    }

    /// Run the configured schedule and collect the retained draws.
    pub fn run(mut self) -> Result<PosteriorSamples> {
        let n = self.rows.len();
        let d = self.data.n_periods();
        let next_t = (d + 1) as f64;
        let next2_t = (d + 2) as f64;
        let keep = self.config.n_samples();
        let mut hyper_draws = Vec::with_capacity(keep);
        let mut latent_draws = Vec::with_capacity(keep * n);
        let mut pred_next = Vec::with_capacity(keep * n);
        let mut pred_next2 = Vec::with_capacity(keep * n);

        for it in 1..=self.config.iterations {
            self.step()?;
            if it > self.config.burn_in && (it - self.config.burn_in).is_multiple_of(self.config.thin) {
                hyper_draws.push(self.hyper.to_array());
                for i in 0..n {
                    let l = self.latents(i);
                    latent_draws.push(l);
                    pred_next.push(sample_predictive(&mut self.rng, &l, &self.config.model, next_t));
                    pred_next2.push(sample_predictive(&mut self.rng, &l, &self.config.model, next2_t));
                }
            }
        }

        let diagnostics = self.degenerate_coordinates();
        for msg in &diagnostics {
            warn!("{msg}");
        }
        PosteriorSamples::from_parts(
            self.data.entity_names().to_vec(),
            self.data.period_labels().to_vec(),
            self.config,
            hyper_draws,
            latent_draws,
            pred_next,
            pred_next2,
            diagnostics,
        )
    }

    fn degenerate_coordinates(&self) -> Vec<String> {
        let steps = self.iteration.saturating_sub(1).max(1) as f64;
        let names = self.data.entity_names();
        let coords = ["lambda", "tau", "beta"];
        self.cells
            .repeats
            .iter()
            .enumerate()
            .filter(|(_, &r)| r as f64 / steps > DEGENERATE_CELL_FRACTION)
            .map(|(slot, &r)| {
                format!(
                    "{} of {:?} stayed in one grid cell for {:.1}% of iterations",
                    coords[slot % 3],
                    names[slot / 3],
                    100.0 * r as f64 / steps
                )
            })
            .collect()
    }
}

fn randomize_start(rng: &mut RngState, l: &mut CharacterLatents, row: &[f64], upper: f64) {
    l.lambda *= (0.5 * rng.standard_normal()).exp();
    l.tau = (l.tau + rng.uniform()).min(upper);
    let positive: Vec<f64> = row
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(j, _)| (j + 1) as f64)
        .collect();
    let (lo, hi) = match (positive.first(), positive.last()) {
        (Some(&first), Some(&last)) => ((last - l.tau).max(0.0), (first + l.tau).min(upper)),
        _ => (0.0, upper),
    };
    if hi > lo {
        l.beta = lo + (0.1 + 0.8 * rng.uniform()) * (hi - lo);
    }
}

/// Fit the model with a chain seeded from `config.seed`.
pub fn run_chain(data: &SmoothedMatrix, config: &ChainConfig) -> Result<PosteriorSamples> {
    Chain::new(data, *config)?.run()
}

/// [`run_chain`] driven by a caller-supplied generator.
pub fn run_chain_with(
    rng: RngState,
    data: &SmoothedMatrix,
    config: &ChainConfig,
) -> Result<PosteriorSamples> {
    Chain::with_rng(data, *config, rng)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::table1;
    use crate::model::row_log_likelihood;

    fn smoothed() -> SmoothedMatrix {
        table1().smooth_by_column_sums(3, 4).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::default().validate().is_ok());
        assert_eq!(ChainConfig::default().n_samples(), 1000);
        let bad = ChainConfig::default().with_schedule(101_000, 1000, 7);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(ChainConfig::default().with_schedule(10, 10, 1).validate().is_err());
        assert!(ChainConfig::default().with_schedule(10, 0, 0).validate().is_err());
    }

    #[test]
    fn initial_state_is_feasible() {
        let m = smoothed();
        let model = ModelConfig::default();
        for i in 0..m.n_entities() {
            let l = initial_latents(m.row(i), &model);
            assert!(row_log_likelihood(m.row(i), &l).is_finite(), "{}", m.entity_names()[i]);
        }
        let z = initial_latents(&[0.0; 5], &model);
        assert_eq!((z.lambda, z.tau, z.beta), (1.0, 1.0, 3.5));
    }

    #[test]
    fn single_retained_sample() {
        let m = smoothed();
        let cfg = ChainConfig::default().with_schedule(30, 20, 10);
        let s = run_chain(&m, &cfg).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.n_entities(), 24);
    }

    #[test]
    fn replay_is_bit_identical() {
        let m = smoothed();
        let cfg = ChainConfig::default().with_schedule(60, 10, 5).with_seed(99);
        let a = run_chain(&m, &cfg).unwrap();
        let b = run_chain(&m, &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&m, &cfg.with_seed(100)).unwrap();
        assert_ne!(a.hyper_draws(), c.hyper_draws());
    }

    #[test]
    fn retained_states_are_feasible() {
        let m = smoothed();
        let cfg = ChainConfig {
            random_start: true,
            ..ChainConfig::default().with_schedule(300, 100, 2)
        };
        let s = run_chain(&m, &cfg).unwrap();
        for k in 0..s.n() {
            for i in 0..s.n_entities() {
                let l = s.latents(k, i);
                assert!(l.is_valid(7.0));
                assert!(row_log_likelihood(m.row(i), &l).is_finite());
            }
        }
    }

    #[test]
    fn too_few_entities() {
        let m = table1().submatrix(&[0], &[0, 1]).unwrap().to_real();
        let cfg = ChainConfig::default().with_schedule(20, 10, 10);
        assert!(matches!(run_chain(&m, &cfg), Err(Error::Degenerate(_))));
    }
}
