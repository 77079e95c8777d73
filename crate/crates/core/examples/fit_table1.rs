//! Fit the smoothed table and print posterior summaries of the
//! hyperparameters.
//!
//! The default schedule is shortened; pass `full` to use 101000/1000/100.

use povcast::analysis::credible_interval;
use povcast::data::table1;
use povcast::{run_chain, ChainConfig, Hyperparams};

fn main() -> povcast::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let config = if full {
        ChainConfig::default()
    } else {
        ChainConfig::default().with_schedule(11_000, 1_000, 10)
    };
    let data = table1().smooth_by_column_sums(3, 4)?;
    let start = std::time::Instant::now();
    let samples = run_chain(&data, &config)?;
    println!("{} draws in {:.1?}", samples.n(), start.elapsed());
    for (k, name) in Hyperparams::NAMES.iter().enumerate() {
        let draws = samples.hyper_column(k);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let (lo, hi) = credible_interval(&draws, 0.9)?;
        println!("{name:<13} mean {mean:7.3}  90% [{lo:7.3}, {hi:7.3}]");
    }
    for msg in samples.diagnostics() {
        println!("warning: {msg}");
    }
    Ok(())
}
