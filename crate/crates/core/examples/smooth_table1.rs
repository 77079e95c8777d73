//! Smooth the last two columns of the bundled table and show what changed.

use povcast::data::table1;

fn main() -> povcast::Result<()> {
    let m = table1();
    let (j1, j2) = (3, 4);
    println!(
        "column sums used as weights: {} and {}",
        m.column_sum(j1),
        m.column_sum(j2)
    );
    let s = m.smooth_by_column_sums(j1, j2)?;
    let (a, b) = (&m.period_labels()[j1], &m.period_labels()[j2]);
    println!("{:<16}{a:>8}{b:>8}  ->{a:>9}{b:>9}", "entity");
    for i in 0..m.n_entities() {
        let row = s.row(i);
        println!(
            "{:<16}{:>8}{:>8}  ->{:>9.4}{:>9.4}",
            m.entity_names()[i],
            m.get(i, j1),
            m.get(i, j2),
            row[j1],
            row[j2]
        );
    }
    println!("new entities per period from the second on: {:?}", m.new_entity_counts());
    Ok(())
}
