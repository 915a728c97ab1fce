//! Intrinsic dimensionality and calibrated thresholds for a few spaces.
//! t_k returns k results per million points on average.
//!
//! cargo run --release --example space_profile

use hilbex::analysis;
use hilbex::bench;
use hilbex::data::Space;

fn main() -> hilbex::Result<()> {
    let mut profiles = Vec::new();
    for name in ["euc_6", "euc_10", "tri_10"] {
        let space: Space = name.parse()?;
        let data = space.generate(200_000, 1)?;
        profiles.push(analysis::profile(&data, &space.metric, 200_000, 1)?);
    }
    print!("{}", bench::profile_table(&profiles).to_markdown());
    Ok(())
}
