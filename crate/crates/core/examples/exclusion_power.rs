//! How often a random query can discard half of a random pivot pair, for
//! the hyperbolic and Hilbert rules and a single median-radius pivot.
//!
//! cargo run --release --example exclusion_power

use hilbex::analysis;
use hilbex::bench::{self, Table};
use hilbex::data::Space;

fn main() -> hilbex::Result<()> {
    let mut table = Table::new(&bench::POWER_HEADER);
    for name in ["euc_6", "euc_10", "jsd_10"] {
        let space: Space = name.parse()?;
        let data = space.generate(100_000, 3)?;
        let ts = bench::resolve_thresholds(&data, &space.metric, &[], &[10.0, 100.0], 3)?;
        let values: Vec<f64> = ts.iter().map(|x| x.1).collect();
        let results: Vec<_> = analysis::exclusion_power_multi(&data, &space.metric, &values, 500_000, 3)?
            .into_iter()
            .zip(&ts)
            .map(|(r, (label, _))| r.with_label(label.clone()))
            .collect();
        let idim = analysis::idim(&data, &space.metric, 100_000, 3)?;
        bench::push_power_rows(&mut table, &space.label(), idim, &results);
    }
    print!("{}", table.to_markdown());
    Ok(())
}
