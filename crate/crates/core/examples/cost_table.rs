//! Mean distance calls per query, as a percentage of the data, for GHT and
//! MHT under both exclusion rules, with every result set verified.
//!
//! cargo run --release --example cost_table

use hilbex::bench::{self, CostConfig};
use hilbex::data::Space;
use hilbex::index::{ExclusionStrategy, TreeKind};

fn main() -> hilbex::Result<()> {
    for name in ["euc_6", "euc_10", "euc_14"] {
        let space: Space = name.parse()?;
        let data = space.generate(200_000, 1)?;
        let thresholds = bench::resolve_thresholds(&data, &space.metric, &[], &[10.0], 1)?;
        let cfg = CostConfig {
            trees: vec![TreeKind::Ght, TreeKind::Mht],
            strategies: vec![ExclusionStrategy::hyperbolic(), ExclusionStrategy::hilbert()],
            thresholds,
            queries: 500,
            leaf_capacity: 2,
            seed: 1,
            verify: true,
        };
        let report = bench::query_cost(&data, &space.metric, &cfg)?;
        assert_eq!(report.mismatches(), 0);
        assert_eq!(report.dominance_violations(), 0);
        print!("{}", report.table().to_markdown());
    }
    Ok(())
}
