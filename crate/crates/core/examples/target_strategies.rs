//! Run all six target-selection strategies over one reach and show when
//! each one changes its mind.
//!
//!     cargo run --release --example target_strategies

use gpintent::scene::Scene;
use gpintent::strategies::{StrategyKind, StrategyParams, StrategyState};
use gpintent::trajgen::{gen_corpus, GenParams, CORPUS_PAIRS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = Scene::default_cockpit();
    let rec = gen_corpus(&scene, &CORPUS_PAIRS[..1], &GenParams::default())?.remove(0);
    println!("trajectory {} (point {} to point {})", rec.id, rec.start_id, rec.end_id);
    for kind in StrategyKind::ALL {
        let mut st = StrategyState::new(kind, StrategyParams::default())?;
        let mut changes = Vec::new();
        let mut last = None;
        for s in &rec.samples {
            let d = st.step(s, &scene)?;
            if last != Some(d.target) {
                changes.push(format!("{:.2}s:{}({})", d.t, d.target, d.source));
                last = Some(d.target);
            }
        }
        println!("{kind}: {}", changes.join(" "));
    }
    Ok(())
}
