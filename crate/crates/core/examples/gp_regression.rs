//! Fit a Matérn-3/2 GP to a noisy sine, tune its hyperparameters and print
//! the posterior on a grid.
//!
//!     cargo run --example gp_regression

use gpintent::gp::{fit, optimize_hyperparams, Backend, Bounds, KernelParams, TrainingSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.05)?;
    let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
    let y: Vec<f64> = x.iter().map(|t| t.sin() + noise.sample(&mut rng)).collect();
    let data = TrainingSet::new(x, y)?;

    let init = KernelParams::new(1.0, 0.5, 0.05)?;
    let best = optimize_hyperparams(&data, init, Bounds::default(), Backend::Dense)?;
    println!(
        "sigma_f {:.3}  length_scale {:.3}  LL {:.2} -> {:.2} in {} iterations",
        best.params.sigma_f,
        best.params.length_scale,
        best.trace[0],
        best.log_likelihood,
        best.iterations
    );

    let gp = fit(data, best.params, Backend::Dense)?;
    println!("{:>6} {:>9} {:>9} {:>9}", "x", "mean", "sd", "sin(x)");
    for i in 0..=10 {
        let xs = i as f64 * 0.45;
        let (m, v) = gp.posterior(xs)?;
        println!("{xs:6.2} {m:9.4} {:9.4} {:9.4}", v.sqrt(), xs.sin());
    }
    Ok(())
}
