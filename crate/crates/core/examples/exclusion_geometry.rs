//! The two hyperplane exclusion rules on a single query, and where the query
//! lands in the pivot plane.
//!
//! cargo run --example exclusion_geometry

use hilbex::geometry::{
    hilbert_exclusion, hyperbolic_exclusion, hyperplane_margin, planar_project, ExclusionDecision, PivotPair,
};
use hilbex::metrics::euclidean;

fn side(d: ExclusionDecision) -> &'static str {
    match (d.exclude_side_of_p1, d.exclude_side_of_p2) {
        (true, _) => "p1",
        (_, true) => "p2",
        _ => "-",
    }
}

fn main() -> hilbex::Result<()> {
    let p1 = [-5.0, 0.0];
    let p2 = [5.0, 0.0];
    for q in [[-1.1, 4.0], [-4.0, 0.5], [1.5, 6.0]] {
        let (d1, d2, d12) = (euclidean(&q, &p1)?, euclidean(&q, &p2)?, euclidean(&p1, &p2)?);
        let pair = PivotPair::new(d1, d2, d12)?;
        let (x, y) = planar_project(d1, d2, d12)?;
        println!("query {q:?}: projected to ({x:.3}, {y:.3}), margin {:.3}", hyperplane_margin(&pair)?);
        for t in [0.5, 1.0, 2.0] {
            let hyp = hyperbolic_exclusion(&pair, t)?;
            let hil = hilbert_exclusion(&pair, t)?;
            println!("  t={t}: hyperbolic excludes {:<3} Hilbert excludes {}", side(hyp), side(hil));
        }
    }
    Ok(())
}
