//! Build reduced versions of the window, horizon and strategy reports in
//! memory and print them as CSV.
//!
//!     cargo run --release --example experiment_reports

use gpintent::harness::{cmd_bench_horizon, cmd_bench_window, cmd_compare, Algo, HorizonBenchConfig, RunParams, WindowBenchConfig};
use gpintent::scene::Scene;
use gpintent::strategies::StrategyKind;
use gpintent::trajgen::{gen_corpus, GenParams, CORPUS_PAIRS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = Scene::default_cockpit();
    // The two short reaches keep this quick.
    let corpus = gen_corpus(&scene, &CORPUS_PAIRS[5..], &GenParams::default())?;

    let window = WindowBenchConfig { windows_s: vec![0.5, 1.0, 2.0], algos: vec![Algo::Holrd, Algo::Egp], ..Default::default() };
    print!("{}", cmd_bench_window(&corpus, &window)?.to_csv_string());

    let horizon = HorizonBenchConfig { horizons_pct: vec![5.0, 15.0], ..Default::default() };
    print!("\n{}", cmd_bench_horizon(&corpus, &horizon)?.to_csv_string());

    let cmp = cmd_compare(&corpus, &[StrategyKind::Sta, StrategyKind::Stc, StrategyKind::Ste], &scene, &RunParams::default(), 42)?;
    println!();
    for k in &cmp.strategies {
        let cell = |m| cmp.mean(*k, m).map_or("-".to_string(), |v| format!("{v:.2}"));
        println!("{k}: T_r {} s, SP_d {}, D_h {} m", cell("T_r_s"), cell("SP_d"), cell("D_h_m"));
    }
    Ok(())
}
