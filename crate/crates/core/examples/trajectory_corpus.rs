//! Generate the seven-reach synthetic corpus and write it as CSV.
//!
//!     cargo run --example trajectory_corpus -- [OUT_DIR]

use gpintent::scene::Scene;
use gpintent::trajgen::{gen_corpus, min_jerk, read_csv_file, record_file_name, write_csv_file, GenParams, CORPUS_PAIRS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("gpintent-corpus"));
    std::fs::create_dir_all(&out)?;
    let scene = Scene::default_cockpit();

    let (a, b) = (scene.position(3).unwrap(), scene.position(4).unwrap());
    let path = min_jerk(&a, &b, 1.5, 34.0)?;
    let peak = path.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    println!("3 -> 4: {} samples, {:.3} m, peak speed {peak:.3} m/s", path.len(), (b - a).norm());

    for rec in gen_corpus(&scene, &CORPUS_PAIRS, &GenParams::default())? {
        let path = out.join(record_file_name(&rec));
        write_csv_file(&path, &rec)?;
        let back = read_csv_file(&path)?;
        assert_eq!(back, rec);
        println!(
            "{:>6} {:>7} {:5.2} m {:4} samples -> {}",
            rec.id,
            rec.label.map(|l| l.to_string()).unwrap_or_default(),
            (scene.position(rec.end_id).unwrap() - scene.position(rec.start_id).unwrap()).norm(),
            rec.samples.len(),
            path.display()
        );
    }
    Ok(())
}
