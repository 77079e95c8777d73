//! The on-stage window model.
//!
//! Entity `i` produces `Poisson(lambda_i)` counts in period `t` while
//! `|t - beta_i| < tau_i` and zero otherwise, with
//!
//! ```text
//! ln lambda_i ~ N(mu_lambda, sigma_lambda^2)
//! tau_i       ~ N(mu_tau, sigma_tau^2)   truncated to [0, horizon]
//! beta_i      ~ N(mu_beta, sigma_beta^2) truncated to [0, horizon]
//! ```
//!
//! Periods are numbered from 1, so `row[0]` holds period `t = 1`.

use serde::{Deserialize, Serialize};

use crate::data::PovMatrix;
use crate::error::{Error, Result};
use crate::rng::{poisson_unchecked, truncnorm_unchecked, RngState};

/// Population-level parameters. The sigmas are standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub mu_lambda: f64,
    pub sigma_lambda: f64,
    pub mu_tau: f64,
    pub sigma_tau: f64,
    pub mu_beta: f64,
    pub sigma_beta: f64,
}

impl Hyperparams {
    pub const NAMES: [&'static str; 6] = [
        "mu_lambda",
        "sigma_lambda",
        "mu_tau",
        "sigma_tau",
        "mu_beta",
        "sigma_beta",
    ];

    pub fn new(
        mu_lambda: f64,
        sigma_lambda: f64,
        mu_tau: f64,
        sigma_tau: f64,
        mu_beta: f64,
        sigma_beta: f64,
    ) -> Result<Self> {
        Self::from_array([mu_lambda, sigma_lambda, mu_tau, sigma_tau, mu_beta, sigma_beta])
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("hyperparameters must be finite: {v:?}")));
        }
        if !(v[1] > 0.0 && v[3] > 0.0 && v[5] > 0.0) {
            return Err(Error::Domain(format!("scale hyperparameters must be positive: {v:?}")));
        }
        Ok(Self {
            mu_lambda: v[0],
            sigma_lambda: v[1],
            mu_tau: v[2],
            sigma_tau: v[3],
            mu_beta: v[4],
            sigma_beta: v[5],
        })
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.mu_lambda,
            self.sigma_lambda,
            self.mu_tau,
            self.sigma_tau,
            self.mu_beta,
            self.sigma_beta,
        ]
    }
}

/// Per-entity random effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterLatents {
    /// Expected count per period while on stage.
    pub lambda: f64,
    /// Half-width of the on-stage window.
    pub tau: f64,
    /// Centre of the on-stage window.
    pub beta: f64,
}

impl CharacterLatents {
    pub fn new(lambda: f64, tau: f64, beta: f64) -> Self {
        Self { lambda, tau, beta }
    }

    pub fn is_valid(&self, upper: f64) -> bool {
        self.lambda > 0.0
            && self.lambda.is_finite()
            && (0.0..=upper).contains(&self.tau)
            && (0.0..=upper).contains(&self.beta)
    }

    /// First on-stage time, `beta - tau`.
    pub fn start(&self) -> f64 {
        self.beta - self.tau
    }

    /// Last on-stage time, `beta + tau`.
    pub fn end(&self) -> f64 {
        self.beta + self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Largest period index; also the upper truncation bound of `tau` and `beta`.
    pub horizon: u32,
    /// Use `|t - beta| < tau` (the default) rather than `<=`.
    pub strict_window: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            horizon: 7,
            strict_window: true,
        }
    }
}

impl ModelConfig {
    pub fn upper(&self) -> f64 {
        f64::from(self.horizon)
    }

    pub fn validate(&self, observed_periods: usize) -> Result<()> {
        if self.horizon == 0 || (self.horizon as usize) < observed_periods {
            return Err(Error::Config(format!(
                "horizon {} is shorter than the {observed_periods} observed periods",
                self.horizon
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn in_window(&self, t: f64, latents: &CharacterLatents) -> bool {
        window_test(self.strict_window, t, latents.beta, latents.tau)
    }

    pub fn count_log_density(&self, x: f64, latents: &CharacterLatents, t: f64) -> f64 {
        if self.in_window(t, latents) {
            poisson_log_density(x, latents.lambda)
        } else if x == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn row_log_likelihood(&self, row: &[f64], latents: &CharacterLatents) -> f64 {
        row.iter()
            .enumerate()
            .map(|(j, &x)| self.count_log_density(x, latents, (j + 1) as f64))
            .sum()
    }
}

#[inline]
pub(crate) fn window_test(strict: bool, t: f64, beta: f64, tau: f64) -> bool {
    let d = (t - beta).abs();
    if strict {
        d < tau
    } else {
        d <= tau
    }
}

/// `x ln(lambda) - lambda - ln Gamma(x + 1)`: the Poisson log pmf, continued to
/// non-integer `x` through the gamma function.
#[inline]
pub fn poisson_log_density(x: f64, lambda: f64) -> f64 {
    let log_term = if x == 0.0 { 0.0 } else { x * lambda.ln() };
    log_term - lambda - libm::lgamma(x + 1.0)
}

/// `|t - beta| < tau`.
pub fn in_window(t: f64, latents: &CharacterLatents) -> bool {
    ModelConfig::default().in_window(t, latents)
}

/// Log density of one observed count: Poisson inside the window, a point mass
/// at zero outside it (so a positive count off stage has log density `-inf`).
pub fn count_log_density(x: f64, latents: &CharacterLatents, t: f64) -> f64 {
    ModelConfig::default().count_log_density(x, latents, t)
}

/// Sum of [`count_log_density`] over a row whose entry `j` is period `j + 1`.
pub fn row_log_likelihood(row: &[f64], latents: &CharacterLatents) -> f64 {
    ModelConfig::default().row_log_likelihood(row, latents)
}

/// Draw one entity's latents and its counts for periods `1..=horizon`.
pub fn simulate_entity(
    rng: &mut RngState,
    hyper: &Hyperparams,
    config: &ModelConfig,
) -> (CharacterLatents, Vec<u32>) {
    let upper = config.upper();
    let lambda = (hyper.mu_lambda + hyper.sigma_lambda * rng.standard_normal()).exp();
    let tau = truncnorm_unchecked(rng, hyper.mu_tau, hyper.sigma_tau, 0.0, upper);
    let beta = truncnorm_unchecked(rng, hyper.mu_beta, hyper.sigma_beta, 0.0, upper);
    let latents = CharacterLatents { lambda, tau, beta };
    let row = (1..=config.horizon)
        .map(|t| sample_predictive(rng, &latents, config, f64::from(t)))
        .collect();
    (latents, row)
}

#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    /// One column per period `1..=horizon`.
    pub matrix: PovMatrix,
    /// Latents of the rows kept in `matrix`, in the same order.
    pub latents: Vec<CharacterLatents>,
}

/// Simulate `n_entities` independent entities. With `drop_zero_rows` the rows
/// without any nonzero count are removed, so fewer rows may come back.
pub fn simulate_dataset(
    rng: &mut RngState,
    hyper: &Hyperparams,
    n_entities: usize,
    config: &ModelConfig,
    drop_zero_rows: bool,
) -> Result<SimulatedDataset> {
    if n_entities == 0 {
        return Err(Error::Config("n_entities must be at least 1".into()));
    }
    let mut names = Vec::with_capacity(n_entities);
    let mut rows = Vec::with_capacity(n_entities);
    let mut latents = Vec::with_capacity(n_entities);
    for i in 0..n_entities {
        let (l, row) = simulate_entity(rng, hyper, config);
        if drop_zero_rows && row.iter().all(|&c| c == 0) {
            continue;
        }
        names.push(format!("entity{:03}", i + 1));
        rows.push(row);
        latents.push(l);
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    let labels = (1..=config.horizon).map(|t| format!("P{t}")).collect();
    Ok(SimulatedDataset {
        matrix: PovMatrix::new(names, labels, rows)?,
        latents,
    })
}

/// A count for period `t`: `Poisson(lambda)` inside the window, else zero.
pub fn sample_predictive(
    rng: &mut RngState,
    latents: &CharacterLatents,
    config: &ModelConfig,
    t: f64,
) -> u32 {
    if config.in_window(t, latents) {
        poisson_unchecked(rng, latents.lambda).min(u64::from(u32::MAX)) as u32
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::table1;

    fn lat(lambda: f64, tau: f64, beta: f64) -> CharacterLatents {
        CharacterLatents::new(lambda, tau, beta)
    }

    #[test]
    fn window_boundaries() {
        assert!(in_window(3.0, &lat(1.0, 0.5, 3.0)));
        assert!(!in_window(3.0, &lat(1.0, 0.0, 3.0)));
        assert!(!in_window(6.0, &lat(1.0, 2.0, 4.0)));
        assert!(in_window(5.0, &lat(1.0, 2.0, 4.0)));
        let loose = ModelConfig {
            strict_window: false,
            ..Default::default()
        };
        assert!(loose.in_window(6.0, &lat(1.0, 2.0, 4.0)));
    }

    #[test]
    fn count_densities() {
        let l = lat(2.0, 1.0, 1.0);
        let v = count_log_density(2.0, &l, 1.0);
        assert!((v - (2.0f64 * (-2.0f64).exp()).ln()).abs() < 1e-12);
        assert!((v + 1.306_853).abs() < 1e-6);
        assert_eq!(count_log_density(0.0, &l, 5.0), 0.0);
        assert_eq!(count_log_density(1.0, &l, 5.0), f64::NEG_INFINITY);
    }

    #[test]
    fn integer_counts_match_textbook_pmf() {
        for x in 0..40u32 {
            for &lambda in &[0.1_f64, 1.0, 3.7, 15.0, 80.0] {
                let mut fact = 1.0f64;
                for k in 1..=x {
                    fact *= f64::from(k);
                }
                let pmf = (-lambda).exp() * lambda.powi(x as i32) / fact;
                let v = poisson_log_density(f64::from(x), lambda);
                assert!((v - pmf.ln()).abs() < 1e-12 * pmf.ln().abs().max(1.0), "x={x} l={lambda}");
            }
        }
    }

    #[test]
    fn row_likelihood_examples() {
        assert_eq!(row_log_likelihood(&[0.0; 5], &lat(3.0, 0.2, 6.5)), 0.0);
        let v = row_log_likelihood(&[15.0, 0.0, 0.0, 0.0, 0.0], &lat(15.0, 0.9, 1.0));
        assert!((v + 2.278_518).abs() < 1e-6, "{v}");
        let v = row_log_likelihood(&[15.0, 0.0, 0.0, 0.0, 1.0], &lat(15.0, 0.9, 1.0));
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn out_of_window_zeros_are_free() {
        // Window covers t = 2, 3 only.
        let l = lat(4.0, 1.0, 2.5);
        let base = row_log_likelihood(&[0.0, 2.0, 5.0], &l);
        assert_eq!(row_log_likelihood(&[0.0, 2.0, 5.0, 0.0, 0.0], &l), base);
        assert_eq!(
            row_log_likelihood(&[0.0, 2.0, 5.0, 0.0, 0.0, 0.0, 0.0], &l),
            base
        );
    }

    proptest::proptest! {
        #[test]
        fn likelihood_matches_direct_product(
            row_idx in 0usize..24,
            lambda in 0.05f64..30.0,
            tau in 0.0f64..7.0,
            beta in 0.0f64..7.0,
        ) {
            let m = table1().smooth_by_column_sums(3, 4).unwrap();
            let row = m.row(row_idx);
            let l = lat(lambda, tau, beta);
            let mut product = 1.0f64;
            for (j, &x) in row.iter().enumerate() {
                let t = (j + 1) as f64;
                product *= if (t - beta).abs() < tau {
                    (-lambda).exp() * lambda.powf(x) / libm::tgamma(x + 1.0)
                } else if x == 0.0 {
                    1.0
                } else {
                    0.0
                };
            }
            let via_log = row_log_likelihood(row, &l).exp();
            if product == 0.0 {
                proptest::prop_assert_eq!(via_log, 0.0);
            } else {
                proptest::prop_assert!((via_log - product).abs() <= 1e-10 * product);
            }
        }
    }

    #[test]
    fn simulation_full_window_moments() {
        let mut rng = RngState::new(11);
        let hyper = Hyperparams::new(5f64.ln(), 1e-9, 7.0, 1e-9, 3.5, 1e-9).unwrap();
        let cfg = ModelConfig::default();
        let mut total = 0.0;
        let mut cells = 0.0;
        for _ in 0..10_000 {
            let (l, row) = simulate_entity(&mut rng, &hyper, &cfg);
            assert!((l.tau - 7.0).abs() < 1e-6 && (l.beta - 3.5).abs() < 1e-6);
            total += row.iter().map(|&c| f64::from(c)).sum::<f64>();
            cells += row.len() as f64;
        }
        assert!((total / cells - 5.0).abs() < 0.1);
    }

    #[test]
    fn empty_window_gives_zero_rows() {
        let mut rng = RngState::new(12);
        let hyper = Hyperparams::new(2.0, 0.5, 0.0, 1e-9, 3.5, 1.0).unwrap();
        for _ in 0..1000 {
            let (_, row) = simulate_entity(&mut rng, &hyper, &ModelConfig::default());
            assert!(row.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn dataset_simulation() {
        let hyper = Hyperparams::new(1.3, 0.75, 2.0, 1.0, 4.0, 1.5).unwrap();
        let cfg = ModelConfig::default();
        let mut rng = RngState::new(13);
        assert!(simulate_dataset(&mut rng, &hyper, 0, &cfg, false).is_err());

        let a = simulate_dataset(&mut RngState::new(14), &hyper, 500, &cfg, false).unwrap();
        let b = simulate_dataset(&mut RngState::new(14), &hyper, 500, &cfg, false).unwrap();
        assert_eq!(a.matrix, b.matrix);
        let zero = a.matrix.zero_rows().len();
        assert!(zero > 0 && zero < 500, "zero rows: {zero}");

        let d = simulate_dataset(&mut RngState::new(14), &hyper, 500, &cfg, true).unwrap();
        assert!(d.matrix.zero_rows().is_empty());
        assert_eq!(d.matrix.n_entities(), 500 - zero);
        assert_eq!(d.latents.len(), d.matrix.n_entities());
    }

    #[test]
    fn predictive_draws() {
        let cfg = ModelConfig::default();
        let mut rng = RngState::new(15);
        for _ in 0..100 {
            assert_eq!(sample_predictive(&mut rng, &lat(9.0, 1.0, 2.0), &cfg, 6.0), 0);
        }
        let n = 100_000;
        let mean = (0..n)
            .map(|_| f64::from(sample_predictive(&mut rng, &lat(9.0, 2.0, 6.0), &cfg, 6.0)))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 9.0).abs() < 0.05, "{mean}");
        let mut r1 = RngState::new(16);
        let mut r2 = RngState::new(16);
        for _ in 0..100 {
            assert_eq!(
                sample_predictive(&mut r1, &lat(1.0, 1.0, 2.0), &cfg, 6.0),
                sample_predictive(&mut r2, &lat(100.0, 1.0, 2.0), &cfg, 6.0)
            );
        }
    }
}
