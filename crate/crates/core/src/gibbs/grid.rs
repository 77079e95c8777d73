//! Histogram-approximation draws for one latent coordinate.
//!
//! The support of the coordinate is cut into equal cells. Each cell gets a
//! weight from the conditional density, one cell is drawn, and the value is
//! placed uniformly inside it.
//!
//! `ln lambda` lives on `[ln lambda_min, ln lambda_max]` and its conditional is
//! smooth, so its cells are weighted by the density at the cell centre. For
//! `tau` and `beta` the likelihood is a step function (it only changes when a
//! period enters or leaves the window), so each cell's weight integrates the
//! steps that fall inside it and the in-cell draw respects them. A cell that
//! straddles the edge of the feasible region therefore never yields an
//! infeasible value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{window_test, CharacterLatents, Hyperparams, ModelConfig};
use crate::rng::{pick, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    Lambda,
    Tau,
    Beta,
}

/// Grid resolution and support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub points: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub model: ModelConfig,
}

impl GridConfig {
    pub fn new(points: usize, lambda_min: f64, lambda_max: f64, model: ModelConfig) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {points}")));
        }
        if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
            return Err(Error::Config(format!(
                "bad lambda grid range ({lambda_min}, {lambda_max}]"
            )));
        }
        Ok(Self {
            points,
            lambda_min,
            lambda_max,
            model,
        })
    }

    /// Cell width of `coordinate` (for lambda, in log space).
    pub fn cell_width(&self, coordinate: Coordinate) -> f64 {
        match coordinate {
            Coordinate::Lambda => (self.lambda_max.ln() - self.lambda_min.ln()) / self.points as f64,
            Coordinate::Tau | Coordinate::Beta => self.model.upper() / self.points as f64,
        }
    }
}

/// Cells this far (in log units) below the heaviest one get weight zero; all
/// of them together carry less than `1e-15` of the mass.
const NEGLIGIBLE_LOG_WEIGHT: f64 = 40.0;

/// Observed row with the per-cell constants the updates need.
#[derive(Debug, Clone)]
pub(crate) struct RowStats {
    values: Vec<f64>,
    log_factorial: Vec<f64>,
}

impl RowStats {
    pub(crate) fn new(row: &[f64]) -> Self {
        Self {
            values: row.to_vec(),
            log_factorial: row.iter().map(|&x| libm::lgamma(x + 1.0)).collect(),
        }
    }

    fn periods(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.log_factorial)
            .enumerate()
            .map(|(j, (&x, &lf))| ((j + 1) as f64, x, lf))
    }
}

/// Reusable grid geometry and scratch space.
#[derive(Debug, Clone)]
pub(crate) struct GridSampler {
    config: GridConfig,
    log_lambda_lo: f64,
    log_lambda_width: f64,
    log_lambda_centres: Vec<f64>,
    lambda_centres: Vec<f64>,
    linear_width: f64,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    pieces: Vec<Piece>,
    in_terms: Vec<f64>,
    out_terms: Vec<f64>,
}

/// `loglik` is constant on `(start, end)`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    end: f64,
    loglik: f64,
}

impl GridSampler {
    pub(crate) fn new(config: GridConfig) -> Self {
        let g = config.points;
        let lo = config.lambda_min.ln();
        let width = config.cell_width(Coordinate::Lambda);
        let log_lambda_centres: Vec<f64> = (0..g).map(|k| lo + (k as f64 + 0.5) * width).collect();
        let lambda_centres = log_lambda_centres.iter().map(|u| u.exp()).collect();
        Self {
            config,
            log_lambda_lo: lo,
            log_lambda_width: width,
            log_lambda_centres,
            lambda_centres,
            linear_width: config.cell_width(Coordinate::Tau),
            log_weights: vec![0.0; g],
            weights: vec![0.0; g],
            pieces: Vec::with_capacity(32),
            in_terms: Vec::new(),
            out_terms: Vec::new(),
        }
    }

    pub(crate) fn config(&self) -> &GridConfig {
        &self.config
    }

    /// Redraw `ln lambda`. Returns the new value and the chosen cell.
    pub(crate) fn draw_log_lambda(
        &mut self,
        rng: &mut RngState,
        row: &RowStats,
        tau: f64,
        beta: f64,
        mu: f64,
        sigma: f64,
    ) -> Result<(f64, usize)> {
        let strict = self.config.model.strict_window;
        let (mut n_in, mut s_in) = (0.0, 0.0);
        for (t, x, _) in row.periods() {
            if window_test(strict, t, beta, tau) {
                n_in += 1.0;
                s_in += x;
            } else if x > 0.0 {
                return Err(Error::Degenerate(
                    "lambda update from a state with a positive count off stage".into(),
                ));
            }
        }
        let inv2var = 0.5 / (sigma * sigma);
        for k in 0..self.config.points {
            let u = self.log_lambda_centres[k];
            let z = u - mu;
            self.log_weights[k] = s_in * u - n_in * self.lambda_centres[k] - z * z * inv2var;
        }
        let k = self.draw_cell(rng)?;
        let u = self.log_lambda_lo + (k as f64 + rng.uniform()) * self.log_lambda_width;
        Ok((u, k))
    }

    /// Redraw `tau` with `lambda` and `beta` held fixed.
    pub(crate) fn draw_tau(
        &mut self,
        rng: &mut RngState,
        row: &RowStats,
        lambda: f64,
        beta: f64,
        mu: f64,
        sigma: f64,
    ) -> Result<(f64, usize)> {
        self.period_terms(row, lambda);
        let upper = self.config.model.upper();
        let mut breaks: Vec<f64> = row.periods().map(|(t, _, _)| (t - beta).abs()).collect();
        breaks.sort_by(f64::total_cmp);
        let strict = self.config.model.strict_window;
        let (ins, outs) = (&self.in_terms, &self.out_terms);
        build_pieces(&mut self.pieces, &breaks, upper, |tau| {
            window_loglik(ins, outs, strict, beta, tau)
        });
        self.draw_piecewise(rng, mu, sigma)
    }

    /// Redraw `beta` with `lambda` and `tau` held fixed.
    pub(crate) fn draw_beta(
        &mut self,
        rng: &mut RngState,
        row: &RowStats,
        lambda: f64,
        tau: f64,
        mu: f64,
        sigma: f64,
    ) -> Result<(f64, usize)> {
        self.period_terms(row, lambda);
        let upper = self.config.model.upper();
        let mut breaks: Vec<f64> = row
            .periods()
            .flat_map(|(t, _, _)| [t - tau, t + tau])
            .collect();
        breaks.sort_by(f64::total_cmp);
        let strict = self.config.model.strict_window;
        let (ins, outs) = (&self.in_terms, &self.out_terms);
        build_pieces(&mut self.pieces, &breaks, upper, |beta| {
            window_loglik(ins, outs, strict, beta, tau)
        });
        self.draw_piecewise(rng, mu, sigma)
    }

    fn period_terms(&mut self, row: &RowStats, lambda: f64) {
        let log_lambda = lambda.ln();
        self.in_terms.clear();
        self.out_terms.clear();
        for (_, x, lf) in row.periods() {
            let log_term = if x == 0.0 { 0.0 } else { x * log_lambda };
            self.in_terms.push(log_term - lambda - lf);
            self.out_terms.push(if x > 0.0 { f64::NEG_INFINITY } else { 0.0 });
        }
    }

    /// Cell weights from the step-function likelihood in `self.pieces` and a
    /// normal prior evaluated at the cell centre; then an in-cell draw that
    /// picks a step proportionally to its mass.
    fn draw_piecewise(&mut self, rng: &mut RngState, mu: f64, sigma: f64) -> Result<(f64, usize)> {
        let h = self.linear_width;
        let inv2var = 0.5 / (sigma * sigma);
        let mut p = 0;
        for k in 0..self.config.points {
            let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
            while self.pieces[p].end <= lo && p + 1 < self.pieces.len() {
                p += 1;
            }
            let centre = lo + 0.5 * h;
            let z = centre - mu;
            let prior = -z * z * inv2var;
            let first = self.pieces[p];
            self.log_weights[k] = if first.end >= hi {
                first.loglik + prior
            } else {
                let ll = cell_mass(&self.pieces[p..], lo, hi, h);
                ll + prior
            };
        }
        let k = self.draw_cell(rng)?;
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        let start = self.pieces.partition_point(|pc| pc.end <= lo);
        let overlapping: Vec<(f64, f64, f64)> = self.pieces[start..]
            .iter()
            .take_while(|pc| pc.start < hi)
            .map(|pc| (pc.start.max(lo), pc.end.min(hi), pc.loglik))
            .filter(|(a, b, ll)| b > a && *ll > f64::NEG_INFINITY)
            .collect();
        let top = overlapping
            .iter()
            .map(|o| o.2)
            .fold(f64::NEG_INFINITY, f64::max);
        let masses: Vec<f64> = overlapping
            .iter()
            .map(|(a, b, ll)| (b - a) * (ll - top).exp())
            .collect();
        let total: f64 = masses.iter().sum();
        let j = pick(&masses, rng.uniform() * total);
        let (a, b, _) = overlapping[j];
        Ok((a + rng.uniform() * (b - a), k))
    }

    fn draw_cell(&mut self, rng: &mut RngState) -> Result<usize> {
        let top = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY || top.is_nan() {
            return Err(Error::Degenerate("every grid cell has zero density".into()));
        }
        let floor = top - NEGLIGIBLE_LOG_WEIGHT;
        let mut total = 0.0;
        for (w, &lw) in self.weights.iter_mut().zip(&self.log_weights) {
            *w = if lw > floor { (lw - top).exp() } else { 0.0 };
            total += *w;
        }
        Ok(pick(&self.weights, rng.uniform() * total))
    }
}

fn window_loglik(ins: &[f64], outs: &[f64], strict: bool, beta: f64, tau: f64) -> f64 {
    let mut ll = 0.0;
    for (j, (&a, &b)) in ins.iter().zip(outs).enumerate() {
        ll += if window_test(strict, (j + 1) as f64, beta, tau) {
            a
        } else {
            b
        };
    }
    ll
}

/// Split `[0, upper]` at the breakpoints and evaluate the step function at
/// each piece's midpoint.
fn build_pieces(out: &mut Vec<Piece>, breaks: &[f64], upper: f64, loglik: impl Fn(f64) -> f64) {
    out.clear();
    let mut start = 0.0;
    for &b in breaks.iter().filter(|&&b| b > 0.0 && b < upper) {
        if b > start {
            out.push(Piece {
                start,
                end: b,
                loglik: loglik(0.5 * (start + b)),
            });
            start = b;
        }
    }
    out.push(Piece {
        start,
        end: upper,
        loglik: loglik(0.5 * (start + upper)),
    });
}

/// `ln( sum over pieces of (overlap / h) * exp(loglik) )` for the cell `[lo, hi]`.
fn cell_mass(pieces: &[Piece], lo: f64, hi: f64, h: f64) -> f64 {
    let parts = pieces
        .iter()
        .take_while(|pc| pc.start < hi)
        .map(|pc| (pc.end.min(hi) - pc.start.max(lo), pc.loglik))
        .filter(|(len, ll)| *len > 0.0 && *ll > f64::NEG_INFINITY);
    let top = parts.clone().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    let sum: f64 = parts.map(|(len, ll)| len / h * (ll - top).exp()).sum();
    top + sum.ln()
}

/// Redraw one coordinate of `current` by the histogram approximation, holding
/// the other two fixed.
pub fn update_latent_grid(
    rng: &mut RngState,
    row: &[f64],
    current: CharacterLatents,
    hyper: &Hyperparams,
    which: Coordinate,
    grid: &GridConfig,
) -> Result<CharacterLatents> {
    if row.len() > grid.model.horizon as usize {
        return Err(Error::Config(format!(
            "row has {} periods but the horizon is {}",
            row.len(),
            grid.model.horizon
        )));
    }
    let stats = RowStats::new(row);
    let mut sampler = GridSampler::new(*grid);
    let mut next = current;
    match which {
        Coordinate::Lambda => {
            let (u, _) = sampler.draw_log_lambda(
                rng,
                &stats,
                current.tau,
                current.beta,
                hyper.mu_lambda,
                hyper.sigma_lambda,
            )?;
            next.lambda = u.exp();
        }
        Coordinate::Tau => {
            next.tau = sampler
                .draw_tau(rng, &stats, current.lambda, current.beta, hyper.mu_tau, hyper.sigma_tau)?
                .0;
        }
        Coordinate::Beta => {
            next.beta = sampler
                .draw_beta(rng, &stats, current.lambda, current.tau, hyper.mu_beta, hyper.sigma_beta)?
                .0;
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::row_log_likelihood;

    fn grid(points: usize) -> GridConfig {
        GridConfig::new(points, (-4.0f64).exp(), 6.0f64.exp(), ModelConfig::default()).unwrap()
    }

    #[test]
    fn beta_respects_support() {
        let mut rng = RngState::new(31);
        let row = [0.0, 0.0, 6.0, 0.0, 0.0];
        let hyper = Hyperparams::new(1.0, 1.0, 2.0, 1.0, 4.0, 1.5).unwrap();
        let mut cur = CharacterLatents::new(6.0, 1.0, 3.0);
        for _ in 0..5000 {
            cur = update_latent_grid(&mut rng, &row, cur, &hyper, Coordinate::Beta, &grid(512)).unwrap();
            assert!(cur.beta > 2.0 && cur.beta < 4.0, "{}", cur.beta);
        }
    }

    #[test]
    fn draws_keep_finite_likelihood() {
        let mut rng = RngState::new(32);
        let row = [3.0, 0.0, 2.0, 1.5, 0.0];
        let hyper = Hyperparams::new(1.0, 1.0, 2.0, 1.0, 4.0, 1.5).unwrap();
        let mut cur = CharacterLatents::new(2.0, 2.01, 2.5);
        for i in 0..6000 {
            let which = [Coordinate::Lambda, Coordinate::Tau, Coordinate::Beta][i % 3];
            cur = update_latent_grid(&mut rng, &row, cur, &hyper, which, &grid(64)).unwrap();
            assert!(row_log_likelihood(&row, &cur).is_finite(), "{cur:?}");
            assert!(cur.is_valid(7.0));
        }
    }

    #[test]
    fn narrow_feasible_region_is_handled() {
        // Positive counts at t = 1 and t = 5 with tau just above 2 leave a beta
        // interval far narrower than one cell.
        let mut rng = RngState::new(33);
        let row = [1.0, 0.0, 0.0, 0.0, 1.0];
        let hyper = Hyperparams::new(0.0, 1.0, 2.0, 1.0, 4.0, 1.5).unwrap();
        let cur = CharacterLatents::new(1.0, 2.0005, 3.0);
        for _ in 0..200 {
            let next = update_latent_grid(&mut rng, &row, cur, &hyper, Coordinate::Beta, &grid(512)).unwrap();
            assert!((next.beta - 3.0).abs() < 0.0005, "{}", next.beta);
        }
    }

    #[test]
    fn pieces_cover_support() {
        let mut pieces = Vec::new();
        build_pieces(&mut pieces, &[-1.0, 0.5, 0.5, 2.0, 9.0], 7.0, |x| x);
        let bounds: Vec<(f64, f64)> = pieces.iter().map(|p| (p.start, p.end)).collect();
        assert_eq!(bounds, vec![(0.0, 0.5), (0.5, 2.0), (2.0, 7.0)]);
        assert_eq!(pieces[1].loglik, 1.25);
    }

    #[test]
    fn grid_config_validation() {
        let m = ModelConfig::default();
        assert!(GridConfig::new(1, 0.1, 10.0, m).is_err());
        assert!(GridConfig::new(8, 10.0, 1.0, m).is_err());
        assert!(GridConfig::new(8, 0.0, 1.0, m).is_err());
        let g = GridConfig::new(700, 1.0, 7.0f64.exp(), m).unwrap();
        assert!((g.cell_width(Coordinate::Tau) - 0.01).abs() < 1e-15);
        assert!((g.cell_width(Coordinate::Lambda) - 0.01).abs() < 1e-15);
    }
}
