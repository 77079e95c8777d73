//! A small coverage study on simulated data. Use `--replicates N` to change
//! the number of fits (default 10) and `--drop-zero-rows` for the variant that
//! discards rows without observations.

use povcast::analysis::{calibration_study, CalibrationConfig};

fn main() -> povcast::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let replicates = args
        .iter()
        .position(|a| a == "--replicates")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse().ok())
        .unwrap_or(10);
    let config = CalibrationConfig {
        replicates,
        drop_zero_rows: args.iter().any(|a| a == "--drop-zero-rows"),
        ..CalibrationConfig::default()
    };
    let result = calibration_study(&config)?;
    println!("{} replicates, {} failed", replicates, result.failures());
    println!("alpha  hyper  predictive");
    for (k, a) in result.hyper.alphas.iter().enumerate() {
        println!(
            "{a:<6} {:.3}  {:.3}",
            result.hyper.coverage[k], result.predictive.coverage[k]
        );
    }
    Ok(())
}
