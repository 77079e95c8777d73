//! Predictive distributions for the next two periods, zero probabilities and
//! the share left for new entities.

use povcast::analysis::{new_entity_estimate, predictive_summary, predictive_table, TYPICAL_TOTAL};
use povcast::data::table1;
use povcast::{run_chain, ChainConfig, Horizon};

fn main() -> povcast::Result<()> {
    let data = table1().smooth_by_column_sums(3, 4)?;
    let samples = run_chain(&data, &ChainConfig::default().with_schedule(11_000, 1_000, 10))?;

    let table = predictive_table(&samples, Horizon::Next);
    println!("next-period histogram, counts 0..=10:");
    for (name, h) in table.entity_names.iter().zip(&table.histograms) {
        let head: Vec<u32> = h.iter().take(11).copied().collect();
        println!("  {name:<16}{head:?}");
    }

    println!("\n{:<16}{:>8}{:>8}{:>10}{:>10}", "entity", "P(0)", "mean", "var", "80%");
    for s in predictive_summary(&samples, Horizon::Next) {
        println!(
            "{:<16}{:>8.3}{:>8.2}{:>10.2}   [{}, {}]",
            s.entity, s.zero_probability, s.mean, s.variance, s.interval80.0, s.interval80.1
        );
    }

    let est = new_entity_estimate(&samples, TYPICAL_TOTAL);
    println!(
        "\nexisting entities: {:.1} expected; about {:.1} left for new ones (history {:?})",
        est.existing_total_mean, est.estimate, est.history
    );
    Ok(())
}
