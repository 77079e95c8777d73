//! Fit the first two periods of the nine earliest entities and check the
//! third period against the predictive intervals.

use povcast::analysis::{backtest, BacktestConfig};
use povcast::data::table1;
use povcast::ChainConfig;

fn main() -> povcast::Result<()> {
    let config = BacktestConfig {
        train_rows: (0..9).collect(),
        train_cols: vec![0, 1],
        target_col: 2,
        chain: ChainConfig::default().with_schedule(11_000, 1_000, 10),
    };
    let report = backtest(&table1(), &config)?;
    println!("{:<12}{:>6}{:>10}{:>10}", "entity", "truth", "50%", "80%");
    for r in &report.rows {
        println!(
            "{:<12}{:>6}{:>10}{:>10}",
            r.entity,
            r.truth,
            format!("[{},{}]", r.interval50.0, r.interval50.1),
            format!("[{},{}]", r.interval80.0, r.interval80.1)
        );
    }
    println!(
        "covered: {}/{} at 50%, {}/{} at 80%",
        report.hits50,
        report.rows.len(),
        report.hits80,
        report.rows.len()
    );
    if report.heuristic_only {
        println!("target total is unlike the training totals; treat as a heuristic check");
    }
    Ok(())
}
