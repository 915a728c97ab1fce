//! Generate a seeded dataset, save it in both formats and load it back.
//!
//! cargo run --example dataset_io

use hilbex::data::{load_vectors, save_vectors, Format, Space};

fn main() -> hilbex::Result<()> {
    let dir = std::env::temp_dir().join("hilbex-dataset-io");
    std::fs::create_dir_all(&dir)?;
    let space: Space = "jsd_6".parse()?;
    let data = space.generate(10_000, 42)?;

    for file in ["jsd_6.bin", "jsd_6.txt"] {
        let path = dir.join(file);
        save_vectors(&data, &path, Format::from_path(&path))?;
        // f32 storage perturbs the simplex sums, so re-prepare for the metric
        let back = space.prepare(load_vectors(&path)?)?;
        let max_err = back
            .as_flat()
            .iter()
            .zip(data.as_flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let bytes = std::fs::metadata(&path)?.len();
        println!("{file}: {} x {}, {bytes} bytes, max error {max_err:.1e}", back.len(), back.dim());
    }
    Ok(())
}
