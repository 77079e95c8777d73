//! Reference computations for the integration and acceptance tests. Nothing
//! here calls the library's own special functions.

#![allow(dead_code)]

use povcast::gibbs::{initial_latents, Coordinate, GridConfig};
use povcast::model::{CharacterLatents, Hyperparams, ModelConfig};
use povcast::rng::{sample_invgamma, sample_truncnorm, RngState};
use povcast::data::table1;

/// Cumulative distribution tabulated from an unnormalised density by the
/// trapezoid rule on a uniform grid, then linearly interpolated.
pub struct TabulatedCdf {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new(lo: f64, hi: f64, points: usize, density: impl Fn(f64) -> f64) -> Self {
        let step = (hi - lo) / (points - 1) as f64;
        let f: Vec<f64> = (0..points).map(|k| density(lo + k as f64 * step)).collect();
        let mut cdf = Vec::with_capacity(points);
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 1..points {
            acc += 0.5 * step * (f[k - 1] + f[k]);
            cdf.push(acc);
        }
        let total = acc;
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Self { lo, step, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let k = pos.floor() as usize;
        if k + 1 >= self.cdf.len() {
            return 1.0;
        }
        let w = pos - k as f64;
        self.cdf[k] * (1.0 - w) + self.cdf[k + 1] * w
    }
}

/// `int_lo^hi f` by composite Simpson with `n` (even) intervals.
pub fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

/// Kolmogorov-Smirnov statistic of `draws` against `cdf`.
pub fn ks_statistic(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic KS critical value at level 0.001.
pub fn ks_critical(n: usize) -> f64 {
    1.9495 / (n as f64).sqrt()
}

pub fn normal_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp()
}

/// Reference CDF of `N(mean, sd^2)`.
pub fn normal_cdf_table(mean: f64, sd: f64) -> TabulatedCdf {
    TabulatedCdf::new(mean - 12.0 * sd, mean + 12.0 * sd, 400_001, |x| normal_density(x, mean, sd))
}

/// Reference CDF of `N(mean, sd^2)` restricted to `[lo, hi]`. The density is
/// evaluated relative to its value at the nearest endpoint so extreme means
/// do not underflow.
pub fn truncnorm_cdf_table(mean: f64, sd: f64, lo: f64, hi: f64) -> TabulatedCdf {
    let anchor = mean.clamp(lo, hi);
    let za = (anchor - mean) / sd;
    TabulatedCdf::new(lo, hi, 400_001, move |x| {
        let z = (x - mean) / sd;
        (-0.5 * (z * z - za * za)).exp()
    })
}

/// Reference CDF of the inverse gamma with `1/X ~ Gamma(shape, rate = scale)`.
pub fn invgamma_cdf_table(shape: f64, scale: f64, hi: f64) -> TabulatedCdf {
    TabulatedCdf::new(0.0, hi, 800_001, move |x| {
        if x <= 0.0 {
            0.0
        } else {
            (-(shape + 1.0) * x.ln() - scale / x).exp()
        }
    })
}

/// Mean of `N(mean, sd^2)` truncated to `[lo, hi]`, by quadrature.
pub fn truncnorm_mean(mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let za = (mean.clamp(lo, hi) - mean) / sd;
    let f = |x: f64| {
        let z = (x - mean) / sd;
        (-0.5 * (z * z - za * za)).exp()
    };
    simpson(lo, hi, 200_000, |x| x * f(x)) / simpson(lo, hi, 200_000, f)
}

pub fn truncnorm_draws(rng: &mut RngState, n: usize, mean: f64, sd: f64, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| sample_truncnorm(rng, mean, sd, lo, hi).unwrap())
        .collect()
}

pub fn invgamma_draws(rng: &mut RngState, n: usize, shape: f64, scale: f64) -> Vec<f64> {
    (0..n).map(|_| sample_invgamma(rng, shape, scale).unwrap()).collect()
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Posterior mean of `lambda` for the row `(15, 0, 0, 0, 0)` with only the
/// first period on stage, under a log-normal prior, by quadrature in
/// `u = ln lambda`.
pub fn lambda_conditional_mean(x: f64, mu: f64, sigma: f64) -> f64 {
    let log_density = |u: f64| x * u - u.exp() - 0.5 * ((u - mu) / sigma).powi(2);
    let (lo, hi) = (-5.0, 8.0);
    let peak = (0..=13_000)
        .map(|k| log_density(lo + k as f64 * 1e-3))
        .fold(f64::NEG_INFINITY, f64::max);
    let n = 100_000;
    let z = simpson(lo, hi, n, |u| (log_density(u) - peak).exp());
    simpson(lo, hi, n, |u| u.exp() * (log_density(u) - peak).exp()) / z
}

/// Result of the grid-refinement comparison for one (row, coordinate).
pub struct GridShift {
    pub entity: String,
    pub coordinate: Coordinate,
    pub shift: f64,
    pub coarse_width: f64,
}

/// Repeatedly redraw each coordinate of ten fixed rows from the same fixed
/// state at `coarse` and `2 * coarse` grid points with common random numbers,
/// and compare the means (of `ln lambda` for lambda).
pub fn grid_refinement_shifts(coarse: usize, draws: usize) -> Vec<GridShift> {
    let m = table1().smooth_by_column_sums(3, 4).unwrap();
    let hyper = Hyperparams::new(1.08, 0.91, 2.58, 0.86, 4.35, 1.59).unwrap();
    let model = ModelConfig::default();
    let (lmin, lmax) = ((1.08f64 - 8.0).exp(), (1.08f64 + 8.0).exp());
    let grids = [
        GridConfig::new(coarse, lmin, lmax, model).unwrap(),
        GridConfig::new(2 * coarse, lmin, lmax, model).unwrap(),
    ];
    let rows = [0usize, 1, 3, 5, 7, 8, 12, 15, 20, 23];
    let mut out = Vec::new();
    for (r, &i) in rows.iter().enumerate() {
        let row = m.row(i);
        let start = initial_latents(row, &model);
        for (c, which) in [Coordinate::Lambda, Coordinate::Tau, Coordinate::Beta].into_iter().enumerate() {
            let mut means = [0.0; 2];
            for (g, grid) in grids.iter().enumerate() {
                let mut rng = RngState::with_stream(2024, (10 * r + c) as u64);
                let mut sum = 0.0;
                for _ in 0..draws {
                    let next = povcast::gibbs::update_latent_grid(&mut rng, row, start, &hyper, which, grid).unwrap();
                    sum += coordinate_value(&next, which);
                }
                means[g] = sum / draws as f64;
            }
            out.push(GridShift {
                entity: m.entity_names()[i].clone(),
                coordinate: which,
                shift: (means[0] - means[1]).abs(),
                coarse_width: grids[0].cell_width(which),
            });
        }
    }
    out
}

fn coordinate_value(l: &CharacterLatents, which: Coordinate) -> f64 {
    match which {
        Coordinate::Lambda => l.lambda.ln(),
        Coordinate::Tau => l.tau,
        Coordinate::Beta => l.beta,
    }
}
