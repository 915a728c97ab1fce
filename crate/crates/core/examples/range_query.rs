//! Build both tree kinds and compare distance calls per query under each
//! exclusion strategy, checking every answer against a linear scan.
//!
//! cargo run --release --example range_query

use hilbex::data::Space;
use hilbex::index::{linear_scan, ExclusionStrategy, HyperplaneTree, TreeKind};

fn main() -> hilbex::Result<()> {
    let space: Space = "euc_10".parse()?;
    let data = space.generate(100_000, 7)?;
    let queries = space.generate(200, 8)?;
    let t = 0.3;

    for kind in [TreeKind::Ght, TreeKind::Mht] {
        let tree = HyperplaneTree::build(&data, space.metric.clone(), kind, 8, 1)?;
        println!("{kind}: {} nodes, depth {}", tree.node_count(), tree.depth());
        for strategy in ["hyperbolic", "hilbert", "cover"] {
            let strategy: ExclusionStrategy = strategy.parse()?;
            let (mut calls, mut found) = (0u64, 0usize);
            for q in queries.rows() {
                let r = tree.range_query(q, t, strategy)?;
                assert_eq!(r.results, linear_scan(&data, &space.metric, q, t)?.results);
                calls += r.distance_calls;
                found += r.results.len();
            }
            println!(
                "  {:<11} {:>8.1} distance calls per query, {found} results",
                strategy.name(),
                calls as f64 / queries.len() as f64
            );
        }
    }
    Ok(())
}
