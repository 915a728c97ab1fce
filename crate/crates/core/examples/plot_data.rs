//! Planar projection of 500 points against one pivot pair, with the flags
//! that say which rule would exclude each point as a query. Writes CSV.
//!
//! cargo run --release --example plot_data > plot.csv

use hilbex::bench;
use hilbex::data::Space;

fn main() -> hilbex::Result<()> {
    let space: Space = "euc_10".parse()?;
    let data = space.generate(100_000, 4)?;
    let t = hilbex::analysis::calibrate_threshold(&data, &space.metric, 10.0, 4)?;
    let rows = bench::plot_data(&data, &space.metric, t, 4)?;
    let hil = rows.iter().filter(|r| r.hilbert).count();
    let hyp = rows.iter().filter(|r| r.hyperbolic).count();
    eprintln!("t = {t:.4}: Hilbert excludes for {hil} points, hyperbolic for {hyp}");
    print!("{}", bench::plot_table(&rows).to_csv());
    Ok(())
}
