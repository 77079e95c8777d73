//! Normal location-scale conditional under a `N(0, loc_sd^2)` location prior
//! and an inverse-gamma `(shape, rate)` prior on the variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{invgamma_unchecked, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub loc_sd: f64,
    pub scale_shape: f64,
    pub scale_rate: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            loc_sd: 1000.0,
            scale_shape: 0.001,
            scale_rate: 0.001,
        }
    }
}

/// One Gibbs sweep for `(location, scale)` given normal observations.
///
/// The variance is drawn first from
/// `InvGamma(shape + n/2, rate + sum((v - current_location)^2) / 2)`, then the
/// location from its normal conditional given that variance. Returns the new
/// location and the new scale (a standard deviation).
pub fn update_location_scale(
    rng: &mut RngState,
    values: &[f64],
    current_location: f64,
    priors: &Priors,
) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "location-scale update needs at least 2 values, got {}",
            values.len()
        )));
    }
    Ok(sweep(rng, values, current_location, priors))
}

pub(crate) fn sweep(
    rng: &mut RngState,
    values: &[f64],
    current_location: f64,
    priors: &Priors,
) -> (f64, f64) {
    let n = values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - current_location).powi(2)).sum();
    let variance = invgamma_unchecked(rng, priors.scale_shape + 0.5 * n, priors.scale_rate + 0.5 * ss);

    let sum: f64 = values.iter().sum();
    let precision = n / variance + 1.0 / (priors.loc_sd * priors.loc_sd);
    let mean = (sum / variance) / precision;
    let location = mean + rng.standard_normal() / precision.sqrt();
    (location, variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_normal_sample() {
        let mut rng = RngState::new(21);
        let values: Vec<f64> = (0..10_000).map(|_| 2.0 + rng.standard_normal()).collect();
        let priors = Priors::default();
        let (mut loc, mut sum_loc, mut sum_scale) = (0.0, 0.0, 0.0);
        for _ in 0..100 {
            let (l, s) = update_location_scale(&mut rng, &values, loc, &priors).unwrap();
            loc = l;
            sum_loc += l;
            sum_scale += s;
        }
        assert!((sum_loc / 100.0 - 2.0).abs() < 0.05);
        assert!((sum_scale / 100.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn constant_values_concentrate() {
        let mut rng = RngState::new(22);
        let values = vec![3.25; 50];
        let mut loc = 0.0;
        let mut scale = 0.0;
        for _ in 0..50 {
            (loc, scale) = update_location_scale(&mut rng, &values, loc, &Priors::default()).unwrap();
        }
        assert!((loc - 3.25).abs() < 0.05, "{loc}");
        assert!(scale < 0.05, "{scale}");
    }

    #[test]
    fn two_values_centre_between_them() {
        let mut rng = RngState::new(23);
        let values = [0.0, 4.0];
        let mut loc = 2.0;
        let mut draws = Vec::new();
        for _ in 0..20_000 {
            loc = update_location_scale(&mut rng, &values, loc, &Priors::default()).unwrap().0;
            draws.push(loc);
        }
        draws.sort_by(f64::total_cmp);
        let median = draws[draws.len() / 2];
        assert!((median - 2.0).abs() < 0.25, "{median}");
    }

    #[test]
    fn too_few_values() {
        let mut rng = RngState::new(24);
        assert!(matches!(
            update_location_scale(&mut rng, &[1.0], 0.0, &Priors::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
