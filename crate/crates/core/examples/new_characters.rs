//! How many counts the next period leaves for entities not seen so far.

use povcast::analysis::{new_entity_estimate, TYPICAL_TOTAL};
use povcast::data::table1;
use povcast::{run_chain, ChainConfig, Horizon};

fn main() -> povcast::Result<()> {
    let m = table1();
    println!("counts from newly introduced entities, periods 2..: {:?}", m.new_entity_counts());
    let samples = run_chain(
        &m.smooth_by_column_sums(3, 4)?,
        &ChainConfig::default().with_schedule(11_000, 1_000, 10),
    )?;
    let totals = samples.prediction_totals(Horizon::Next);
    let (lo, hi) = povcast::analysis::credible_interval(&totals, 0.9)?;
    let est = new_entity_estimate(&samples, TYPICAL_TOTAL);
    println!(
        "existing entities: mean {:.1}, 90% [{lo}, {hi}]; {:.1} of {} left for new ones",
        est.existing_total_mean, est.estimate, est.typical_total
    );
    Ok(())
}
