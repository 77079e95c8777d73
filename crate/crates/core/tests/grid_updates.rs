//! Grid updates against a quadrature oracle and against a finer grid.

mod common;

use common::*;
use povcast::gibbs::{update_latent_grid, Coordinate, GridConfig};
use povcast::model::{CharacterLatents, Hyperparams, ModelConfig};
use povcast::RngState;

#[test]
fn lambda_update_matches_quadrature() {
    // Only t = 1 is on stage: |2 - 1| = 1 is not below 0.9.
    let row = [15.0, 0.0, 0.0, 0.0, 0.0];
    let (mu, sigma) = (0.0, 1000.0);
    let hyper = Hyperparams::new(mu, sigma, 2.0, 1.0, 4.0, 1.5).unwrap();
    let centre = 15f64.ln();
    let grid = GridConfig::new(512, (centre - 8.0).exp(), (centre + 8.0).exp(), ModelConfig::default()).unwrap();
    let start = CharacterLatents::new(10.0, 0.9, 1.0);
    let mut rng = RngState::new(7);
    let n = 10_000;
    let mean = (0..n)
        .map(|_| {
            update_latent_grid(&mut rng, &row, start, &hyper, Coordinate::Lambda, &grid)
                .unwrap()
                .lambda
        })
        .sum::<f64>()
        / n as f64;
    let oracle = lambda_conditional_mean(15.0, mu, sigma);
    assert!((oracle - 15.0).abs() < 0.01, "{oracle}");
    assert!((mean - oracle).abs() < 0.5, "{mean} vs {oracle}");
}

#[test]
fn finer_grid_moves_means_less_than_a_cell() {
    for s in grid_refinement_shifts(512, 4_000) {
        assert!(
            s.shift < s.coarse_width,
            "{} {:?}: shift {} vs width {}",
            s.entity,
            s.coordinate,
            s.shift,
            s.coarse_width
        );
    }
}
