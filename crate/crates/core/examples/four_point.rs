//! Which spaces have the four-point property, tested on random quadruples
//! and on two small graphs that cannot be embedded.
//!
//! cargo run --release --example four_point

use hilbex::data::{seeded_rng, Space};
use hilbex::geometry::{four_point_check, DistanceMatrix4};
use rand::Rng;

fn main() -> hilbex::Result<()> {
    for name in ["euc_8", "jsd_8", "tri_8", "cos_sqrt_8", "sqrt_man_8", "man_8"] {
        let space: Space = name.parse()?;
        let data = space.generate(5000, 1)?;
        let mut rng = seeded_rng(2);
        let mut fails = 0;
        for _ in 0..20_000 {
            let pts = [0; 4].map(|_| data.row(rng.gen_range(0..data.len())));
            let m = DistanceMatrix4::from_points(pts, |a, b| space.metric.distance(a, b))?;
            fails += usize::from(!four_point_check(&m));
        }
        println!("{name:<11} {fails:>6} of 20000 quadruples fail");
    }

    // star K(1,3) and a path around a square of the Hamming cube
    let star = DistanceMatrix4::new(1.0, 1.0, 1.0, 2.0, 2.0, 2.0)?;
    let cube = DistanceMatrix4::new(1.0, 2.0, 1.0, 1.0, 2.0, 1.0)?;
    println!("star graph embeds: {}", four_point_check(&star));
    println!("cube square embeds: {}", four_point_check(&cube));
    Ok(())
}
