//! The box-constrained quasi-Newton minimizer on the Rosenbrock function,
//! once free and once with the optimum cut off by a bound.
//!
//!     cargo run --example bounded_minimizer

use gpintent::gp::lbfgsb::{minimize, LbfgsbSettings};

fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (a, b) = (x[0], x[1]);
    let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
    let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
    Some((f, g))
}

fn main() {
    let settings = LbfgsbSettings { max_iterations: 200, ..LbfgsbSettings::default() };
    for (name, upper) in [("free", [10.0, 10.0]), ("x0 <= 0.5", [0.5, 10.0])] {
        let m = minimize(rosenbrock, &[-1.2, 1.0], &[-10.0, -10.0], &upper, &settings).expect("finite start");
        println!(
            "{name:>10}: x = ({:.6}, {:.6})  f = {:.3e}  {} iterations, {} evaluations, {:?}",
            m.x[0], m.x[1], m.f, m.iterations, m.evaluations, m.termination
        );
    }
}
