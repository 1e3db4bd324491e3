//! Stream one synthetic reach through the two-channel predictor and the
//! position-only baseline and compare their forecasts with what happened.
//!
//!     cargo run --release --example online_prediction

use gpintent::harness::Algo;
use gpintent::predictor::{Horizon, OnlinePredictor, SlidingWindow, DEFAULT_DT};
use gpintent::scene::Scene;
use gpintent::trajgen::{gen_corpus, GenParams, CORPUS_PAIRS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rec = gen_corpus(&Scene::default_cockpit(), &CORPUS_PAIRS[..1], &GenParams::default())?.remove(0);
    let window = SlidingWindow::from_seconds(2.0, DEFAULT_DT)?;
    let horizon = Horizon::new(15.0, window.capacity())?;
    println!("trajectory {}: window {} samples, horizon {} steps", rec.id, window.capacity(), horizon.steps);

    let mut egp = OnlinePredictor::new(Algo::Egp.kind(), window.clone(), horizon, Algo::Egp.config());
    let mut base = OnlinePredictor::new(Algo::Holrd.kind(), window, horizon, Algo::Holrd.config());
    let motion = rec.motion_range();
    println!("{:>6} {:>20} {:>10} {:>10}", "t", "actual (x, y, z)", "egp err", "base err");
    for (i, s) in rec.samples.iter().enumerate() {
        let (e, b) = (egp.push(*s)?, base.push(*s)?);
        let (Some(e), Some(b)) = (e, b) else { continue };
        let Some(actual) = rec.samples.get(i + horizon.steps) else { break };
        if motion.contains(&i) && i % 10 == 0 {
            let a = actual.position;
            println!(
                "{:6.2} ({:5.2},{:5.2},{:5.2}) {:10.4} {:10.4}",
                e.t_pred,
                a.x,
                a.y,
                a.z,
                (e.position - a).norm(),
                (b.position - a).norm()
            );
        }
    }
    Ok(())
}
