//! Simulate the robot following one strategy and print its moves and the
//! run metrics; optionally write the run log.
//!
//!     cargo run --release --example robot_simulation -- [STRATEGY] [RUN_LOG_CSV]

use gpintent::scene::Scene;
use gpintent::simulator::{arrivals, run, write_run_log, SimConfig, RUN_METRICS_HEADER};
use gpintent::strategies::StrategyKind;
use gpintent::trajgen::{gen_corpus, GenParams, CORPUS_PAIRS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: StrategyKind = args.next().as_deref().unwrap_or("STD").parse()?;
    let scene = Scene::default_cockpit();
    let rec = gen_corpus(&scene, &CORPUS_PAIRS[..1], &GenParams::default())?.remove(0);
    let out = run(&rec, kind, &scene, &SimConfig::default())?;

    let mut from = rec.start_id;
    for (t, to) in arrivals(&out.log) {
        println!("{:6.2}s  robot reached {to:2} (from {from})", t - out.log.t0);
        from = to;
    }
    println!("{RUN_METRICS_HEADER}\n{}", out.metrics.csv_row());
    if let Some(path) = args.next() {
        write_run_log(std::fs::File::create(&path)?, &out.log)?;
        println!("run log written to {path}");
    }
    Ok(())
}
