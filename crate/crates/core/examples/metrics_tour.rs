//! Every named metric on one pair of vectors, plus a power transform.
//!
//! cargo run --example metrics_tour

use hilbex::metrics::{normalize_to_simplex, power_transform, Metric};

fn main() -> hilbex::Result<()> {
    let v = [0.1, 0.4, 0.2, 0.3];
    let w = [0.3, 0.1, 0.5, 0.2];
    let (sv, sw) = (normalize_to_simplex(&v)?, normalize_to_simplex(&w)?);

    println!("{:<12} {:>10}  hilbert-safe", "metric", "distance");
    for m in Metric::NAMED.iter() {
        let d = if m.requires_simplex() {
            m.checked_distance(sv.as_slice(), sw.as_slice())?
        } else {
            m.checked_distance(&v, &w)?
        };
        println!("{:<12} {d:>10.6}  {}", m.name(), m.hilbert_safe());
    }

    // a power below one half keeps any metric inside the Hilbert-safe class
    for alpha in [0.3, 0.5, 0.8] {
        let m = power_transform(Metric::Manhattan, alpha)?;
        println!("{:<12} {:>10.6}  {}", m.name(), m.checked_distance(&v, &w)?, m.hilbert_safe());
    }
    Ok(())
}
