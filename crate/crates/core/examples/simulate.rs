//! Simulate a data set from known hyperparameters.

use povcast::model::{simulate_dataset, Hyperparams, ModelConfig};
use povcast::RngState;

fn main() -> povcast::Result<()> {
    let hyper = Hyperparams::new(1.3, 0.75, 2.0, 1.0, 4.0, 1.5)?;
    let mut rng = RngState::new(7);
    let sim = simulate_dataset(&mut rng, &hyper, 24, &ModelConfig::default(), false)?;
    print!("{}", sim.matrix.to_csv());
    let zero = sim.matrix.zero_rows().len();
    println!("{zero} of {} rows are all zero", sim.matrix.n_entities());

    let mut zeros = 0;
    let reps = 200;
    for _ in 0..reps {
        zeros += simulate_dataset(&mut rng, &hyper, 24, &ModelConfig::default(), false)?
            .matrix
            .zero_rows()
            .len();
    }
    println!("zero-row fraction over {reps} data sets: {:.3}", zeros as f64 / (24 * reps) as f64);
    Ok(())
}
