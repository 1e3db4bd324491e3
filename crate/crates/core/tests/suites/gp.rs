use gpintent::gp::*;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::{rng, SEEDS};

pub const ALL: &[super::Property] = &[
    ("gp::kernel_symmetry", kernel_symmetry),
    ("gp::gram_psd", gram_psd),
    ("gp::noiseless_interpolation", noiseless_interpolation),
    ("gp::variance_bounds", variance_bounds),
    ("gp::backend_equivalence", backend_equivalence),
    ("gp::analytic_gradient_matches_differences", analytic_gradient_matches_differences),
];

fn random_params(r: &mut impl Rng, sigma_n: f64) -> KernelParams {
    KernelParams::new(r.random_range(0.05..3.0), r.random_range(0.05..2.0), sigma_n).unwrap()
}

fn sorted_inputs(r: &mut impl Rng, m: usize, min_gap: f64) -> Vec<f64> {
    let mut t = r.random_range(-1.0..1.0);
    (0..m)
        .map(|_| {
            t += min_gap + r.random_range(0.0..0.1);
            t
        })
        .collect()
}

pub fn kernel_symmetry() {
    for seed in SEEDS {
        let mut r = rng(seed);
        for _ in 0..50 {
            let p = random_params(&mut r, 0.0);
            let (a, b) = (r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
            assert_eq!(matern32(a, b, &p).unwrap(), matern32(b, a, &p).unwrap(), "seed {seed}");
        }
    }
}

pub fn gram_psd() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let m = r.random_range(2..=12);
        let x: Vec<f64> = (0..m).map(|_| r.random_range(0.0..2.0)).collect();
        let p = random_params(&mut r, 0.0);
        let k = gram(&x, &p) + DMatrix::identity(m, m) * JITTER_START;
        let min = SymmetricEigen::new(k).eigenvalues.min();
        assert!(min >= -1e-10, "seed {seed}: min eigenvalue {min}");
    }
}

pub fn noiseless_interpolation() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let m = r.random_range(2..=20);
        let p = random_params(&mut r, 0.0);
        let x = sorted_inputs(&mut r, m, 0.3 * p.length_scale);
        let y: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        let f = fit(TrainingSet::new(x.clone(), y.clone()).unwrap(), p, Backend::Dense).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let mu = f.posterior_mean(*xi).unwrap();
            assert!(
                (mu - yi).abs() <= 1e-8 * yi.abs().max(1.0),
                "seed {seed}: mean {mu} vs {yi}"
            );
        }
    }
}

pub fn variance_bounds() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let m = r.random_range(1..=40);
        let sigma_n = r.random_range(0.0..0.1);
        let p = random_params(&mut r, sigma_n);
        let x = sorted_inputs(&mut r, m, 0.01);
        let y: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        for backend in [Backend::Dense, Backend::hodlr()] {
            let f = fit(TrainingSet::new(x.clone(), y.clone()).unwrap(), p, backend).unwrap();
            for _ in 0..20 {
                let xs = r.random_range(x[0] - 1.0..x[m - 1] + 1.0);
                let v = f.posterior_var(xs).unwrap();
                assert!(
                    (0.0..=p.signal_variance() + 1e-12).contains(&v),
                    "seed {seed} {backend:?}: variance {v}"
                );
            }
        }
    }
}

pub fn backend_equivalence() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let m = if seed % 4 == 0 { r.random_range(256..=512) } else { r.random_range(8..=200) };
        let p = KernelParams::new(
            r.random_range(0.1..1.5),
            r.random_range(0.05..1.0),
            r.random_range(0.001..0.05),
        )
        .unwrap();
        let x: Vec<f64> = (0..m).map(|i| i as f64 / 34.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|t| (2.0 * t).sin() * 0.4 + r.random_range(-0.01..0.01))
            .collect();
        let ts = TrainingSet::new(x.clone(), y).unwrap();
        let d = fit(ts.clone(), p, Backend::Dense).unwrap();
        let h = fit(ts, p, Backend::hodlr()).unwrap();
        let ll = (d.log_marginal_likelihood() - h.log_marginal_likelihood()).abs();
        assert!(ll <= 1e-5, "seed {seed} m={m}: LL differs by {ll}");
        for _ in 0..10 {
            let xs = r.random_range(x[0]..x[m - 1] + 0.5);
            let (md, vd) = d.posterior(xs).unwrap();
            let (mh, vh) = h.posterior(xs).unwrap();
            assert!((md - mh).abs() <= 1e-6, "seed {seed} m={m}: mean {md} vs {mh}");
            assert!((vd - vh).abs() <= 1e-6, "seed {seed} m={m}: var {vd} vs {vh}");
        }
    }
}

pub fn analytic_gradient_matches_differences() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let m = r.random_range(5..=60);
        let x: Vec<f64> = (0..m).map(|i| i as f64 / 34.0).collect();
        let ys: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let (a, w) = (r.random_range(0.1..1.0), r.random_range(0.5..5.0));
                x.iter().map(|t| a * (w * t).sin() + r.random_range(-0.01..0.01)).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = ys.iter().map(|v| v.as_slice()).collect();
        let obj = JointObjective::new(&x, &refs, 0.003, Backend::Dense).unwrap();
        let p = KernelParams::new(r.random_range(0.1..2.0), r.random_range(0.05..1.0), 0.003).unwrap();
        let (_, ga) = obj.value_and_gradient(&p, GradientMode::Analytic).unwrap();
        let (_, gd) = obj.value_and_gradient(&p, GradientMode::CentralDifference).unwrap();
        for k in 0..2 {
            let rel = (ga[k] - gd[k]).abs() / ga[k].abs().max(1.0);
            assert!(rel <= 1e-4, "seed {seed}: d/dθ{k} analytic {} vs {}", ga[k], gd[k]);
        }
    }
}
