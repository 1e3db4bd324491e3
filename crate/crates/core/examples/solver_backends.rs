//! Dense Cholesky against the hierarchical (HODLR) factorization: same
//! posterior, different cost as the window grows.
//!
//!     cargo run --release --example solver_backends

use std::time::Instant;

use gpintent::gp::{fit, Backend, KernelParams, TrainingSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = KernelParams::new(0.5, 0.4, 0.003)?;
    println!("{:>6} {:>10} {:>10} {:>12} {:>12}", "m", "dense ms", "hodlr ms", "|dLL|", "|dmean|");
    for m in [68, 256, 1024, 2048] {
        let x: Vec<f64> = (0..m).map(|i| i as f64 / 34.0).collect();
        let y: Vec<f64> = x.iter().map(|t| (0.8 * t).sin() * 0.3).collect();
        let data = TrainingSet::new(x, y)?;
        let t = Instant::now();
        let d = fit(data.clone(), p, Backend::Dense)?;
        let td = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let h = fit(data, p, Backend::hodlr())?;
        let th = t.elapsed().as_secs_f64() * 1e3;
        let xs = m as f64 / 34.0 + 0.2;
        println!(
            "{m:6} {td:10.2} {th:10.2} {:12.2e} {:12.2e}",
            (d.log_marginal_likelihood() - h.log_marginal_likelihood()).abs(),
            (d.posterior_mean(xs)? - h.posterior_mean(xs)?).abs()
        );
    }
    Ok(())
}
