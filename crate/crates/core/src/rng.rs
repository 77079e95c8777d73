//! Seedable sampling primitives.
//!
//! Every sampler draws from an [`RngState`], a ChaCha8 stream keyed by
//! `(seed, stream)`. ChaCha is counter based, so chains seeded with the same
//! master seed and different stream ids never share output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{log_upper_tail, normal_cdf, normal_quantile, upper_tail_quantile_from_log};

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn check_sd(sd: f64) -> Result<()> {
    if sd > 0.0 && sd.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("standard deviation must be positive, got {sd}")))
    }
}

pub fn sample_normal(rng: &mut RngState, mean: f64, sd: f64) -> Result<f64> {
    check_sd(sd)?;
    Ok(mean + sd * rng.standard_normal())
}

/// Normal `(mean, sd^2)` conditioned on `[lo, hi]`, by inversion of the CDF
/// restricted to the window.
///
/// Windows that lie entirely in one tail are inverted through `ln Q`, so the
/// sampler stays exact (up to rounding) when the window excludes the mean by
/// any number of standard deviations.
pub fn sample_truncnorm(rng: &mut RngState, mean: f64, sd: f64, lo: f64, hi: f64) -> Result<f64> {
    check_sd(sd)?;
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty truncation window [{lo}, {hi}]")));
    }
    Ok(truncnorm_unchecked(rng, mean, sd, lo, hi))
}

pub(crate) fn truncnorm_unchecked(rng: &mut RngState, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let u = rng.uniform();
    let z = if a >= 0.0 {
        upper_window(a, b, u)
    } else if b <= 0.0 {
        -upper_window(-b, -a, u)
    } else {
        let (pa, pb) = (normal_cdf(a), normal_cdf(b));
        let p = pa + u * (pb - pa);
        if p <= 0.5 {
            normal_quantile(p)
        } else {
            // Invert from the upper side to keep precision near pb ~ 1.
            let (qa, qb) = (normal_cdf(-a), normal_cdf(-b));
            let q = qb + (1.0 - u) * (qa - qb);
            upper_tail_quantile_from_log(q.ln())
        }
    };
    (mean + sd * z).clamp(lo, hi)
}

/// Draw from the standard normal restricted to `[a, b]` with `0 <= a < b`.
fn upper_window(a: f64, b: f64, u: f64) -> f64 {
    let log_qa = log_upper_tail(a);
    let log_qb = log_upper_tail(b);
    // ln(Q(a) - u (Q(a) - Q(b)))
    let log_p = log_qa + (u * (log_qb - log_qa).exp_m1()).ln_1p();
    upper_tail_quantile_from_log(log_p).clamp(a, b)
}

/// Poisson draw; rate zero always yields zero.
pub fn sample_poisson(rng: &mut RngState, rate: f64) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("Poisson rate must be finite and >= 0, got {rate}")));
    }
    Ok(poisson_unchecked(rng, rate))
}

pub(crate) fn poisson_unchecked(rng: &mut RngState, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    if rate > 1e15 {
        // Beyond the range of the exact sampler the normal approximation is
        // indistinguishable.
        return (rate + rate.sqrt() * rng.standard_normal()).round().max(0.0) as u64;
    }
    let dist = Poisson::new(rate).expect("rate checked");
    dist.sample(&mut rng.inner) as u64
}

/// Inverse-gamma draw: `X` with `1 / X ~ Gamma(shape, rate = scale)`.
///
/// Shapes below one are drawn in log space so that the reciprocal of a gamma
/// variate that underflows does not become infinite; results are clamped to
/// the finite positive range of `f64`.
pub fn sample_invgamma(rng: &mut RngState, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
        return Err(Error::Domain(format!(
            "inverse gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    Ok(invgamma_unchecked(rng, shape, scale))
}

pub(crate) fn invgamma_unchecked(rng: &mut RngState, shape: f64, scale: f64) -> f64 {
    let log_gamma_unit = if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("shape checked").sample(&mut rng.inner);
        g.ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let g: f64 = Gamma::new(shape + 1.0, 1.0)
            .expect("shape checked")
            .sample(&mut rng.inner);
        g.ln() + rng.uniform_open().ln() / shape
    };
    // 1/X = G / scale  =>  ln X = ln scale - ln G
    (scale.ln() - log_gamma_unit)
        .exp()
        .clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Index `k` with probability `weights[k] / sum(weights)`.
pub fn sample_categorical(rng: &mut RngState, weights: &[f64]) -> Result<usize> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("all weights are zero".into()));
    }
    let target = rng.uniform() * total;
    Ok(pick(weights, target))
}

/// Walk the weights until the running sum passes `target`; never returns a
/// zero-weight index.
pub(crate) fn pick(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = k;
            if target < acc {
                return k;
            }
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_sd(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn same_seed_same_draws() {
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        for _ in 0..100 {
            assert_eq!(
                sample_truncnorm(&mut a, 1.0, 2.0, 0.0, 7.0).unwrap().to_bits(),
                sample_truncnorm(&mut b, 1.0, 2.0, 0.0, 7.0).unwrap().to_bits()
            );
        }
        let mut c = RngState::with_stream(7, 1);
        let mut d = RngState::new(7);
        assert_ne!(c.next_u64(), d.next_u64());
    }

    #[test]
    fn normal_degenerate_width_and_moments() {
        let mut rng = RngState::new(1);
        let x = sample_normal(&mut rng, 5.0, 1e-12).unwrap();
        assert!((x - 5.0).abs() < 1e-9);
        assert!(sample_normal(&mut rng, 0.0, 0.0).is_err());
        assert!(sample_normal(&mut rng, 0.0, -1.0).is_err());
        let xs: Vec<f64> = (0..100_000).map(|_| sample_normal(&mut rng, 0.0, 1.0).unwrap()).collect();
        let (m, s) = mean_sd(&xs);
        assert!(m.abs() < 0.02, "{m}");
        assert!((s - 1.0).abs() < 0.02, "{s}");
    }

    #[test]
    fn truncnorm_point_mass_and_pileup() {
        let mut rng = RngState::new(2);
        let x = sample_truncnorm(&mut rng, 3.5, 1e-12, 0.0, 7.0).unwrap();
        assert!((x - 3.5).abs() < 1e-9);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| sample_truncnorm(&mut rng, -100.0, 1.0, 0.0, 7.0).unwrap())
            .collect();
        assert!(xs.iter().all(|&x| (0.0..=7.0).contains(&x)));
        // Exponential with rate ~100 above the lower bound.
        let (m, _) = mean_sd(&xs);
        assert!(m < 0.02, "{m}");
        assert!(sample_truncnorm(&mut rng, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(sample_truncnorm(&mut rng, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn truncnorm_extreme_means_stay_inside() {
        let mut rng = RngState::new(3);
        for &mean in &[-1e6, -1e3, -40.0, 40.0, 1e3, 1e6] {
            for &sd in &[0.01, 1.0, 50.0] {
                for _ in 0..200 {
                    let x = sample_truncnorm(&mut rng, mean, sd, 0.0, 7.0).unwrap();
                    assert!((0.0..=7.0).contains(&x), "mean {mean} sd {sd} -> {x}");
                }
            }
        }
        // Far below the window the draw sits just above the lower bound.
        let x = sample_truncnorm(&mut rng, -1e6, 1.0, 0.0, 7.0).unwrap();
        assert!(x < 1e-4);
    }

    #[test]
    fn poisson_rate_zero_and_errors() {
        let mut rng = RngState::new(4);
        for _ in 0..100 {
            assert_eq!(sample_poisson(&mut rng, 0.0).unwrap(), 0);
        }
        assert!(sample_poisson(&mut rng, -1.0).is_err());
        assert!(sample_poisson(&mut rng, f64::NAN).is_err());
    }

    #[test]
    fn poisson_moments() {
        let mut rng = RngState::new(5);
        for &(rate, tol_m, tol_v) in &[(4.0, 0.03, 0.15), (3.67, 0.03, 0.15)] {
            let xs: Vec<f64> = (0..100_000)
                .map(|_| sample_poisson(&mut rng, rate).unwrap() as f64)
                .collect();
            let (m, s) = mean_sd(&xs);
            assert!((m - rate).abs() < tol_m, "rate {rate}: mean {m}");
            assert!((s * s - rate).abs() < tol_v, "rate {rate}: var {}", s * s);
        }
    }

    #[test]
    fn invgamma_reciprocal_mean_and_extremes() {
        let mut rng = RngState::new(6);
        let inv: Vec<f64> = (0..100_000)
            .map(|_| 1.0 / sample_invgamma(&mut rng, 3.0, 2.0).unwrap())
            .collect();
        let (m, _) = mean_sd(&inv);
        assert!((m - 1.5).abs() < 0.02, "{m}");
        for _ in 0..100 {
            let x = sample_invgamma(&mut rng, 1e6, 1e6).unwrap();
            assert!((x - 1.0).abs() < 0.01, "{x}");
            let y = sample_invgamma(&mut rng, 0.001, 0.001).unwrap();
            assert!(y.is_finite() && y > 0.0, "{y}");
        }
        assert!(sample_invgamma(&mut rng, 0.0, 1.0).is_err());
        assert!(sample_invgamma(&mut rng, 1.0, -1.0).is_err());
    }

    #[test]
    fn categorical() {
        let mut rng = RngState::new(8);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&mut rng, &[0.0, 5.0, 0.0]).unwrap(), 1);
        }
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sample_categorical(&mut rng, &[1.0, 1.0]).unwrap() == 0)
            .count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
        let ones = (0..n)
            .filter(|_| sample_categorical(&mut rng, &[1.0, 2.0, 1.0]).unwrap() == 1)
            .count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
        assert!(sample_categorical(&mut rng, &[0.0, 0.0]).is_err());
        assert!(sample_categorical(&mut rng, &[1.0, -1.0]).is_err());
        assert!(sample_categorical(&mut rng, &[]).is_err());
    }
}
