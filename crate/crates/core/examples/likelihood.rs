//! Evaluate the windowed Poisson likelihood for a few latent settings.

use povcast::data::table1;
use povcast::model::{in_window, row_log_likelihood, CharacterLatents};

fn main() -> povcast::Result<()> {
    let m = table1().smooth_by_column_sums(3, 4)?;
    let jon = m.entity_names().iter().position(|n| n == "Jon Snow").unwrap();
    let row = m.row(jon);
    println!("Jon Snow: {row:?}");
    for (lambda, tau, beta) in [(10.0, 3.0, 3.0), (10.0, 2.6, 3.5), (9.0, 4.0, 4.0), (9.0, 1.0, 2.0)] {
        let l = CharacterLatents::new(lambda, tau, beta);
        let on: Vec<u32> = (1..=7).filter(|&t| in_window(f64::from(t), &l)).collect();
        println!(
            "lambda={lambda:<4} tau={tau:<4} beta={beta:<4} on stage {on:?}: log L = {:.4}",
            row_log_likelihood(row, &l)
        );
    }
    Ok(())
}
