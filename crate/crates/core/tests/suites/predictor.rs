use gpintent::predictor::*;
use gpintent::scene::Vec3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{rng, SEEDS};

pub const ALL: &[super::Property] = &[
    ("predictor::one_cycle_per_full_push", one_cycle_per_full_push),
    ("predictor::stationary_hand_stays_put", stationary_hand_stays_put),
    ("predictor::variance_grows_with_horizon", variance_grows_with_horizon),
    ("predictor::identical_streams_identical_forecasts", identical_streams_identical_forecasts),
];

/// A smooth random reach: sinusoid per axis plus tracker noise.
fn stream(seed: u64, n: usize) -> Vec<TimedSample> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, DEFAULT_NOISE_STD).unwrap();
    let amp = Vec3::from_fn(|_, _| r.random_range(0.05..0.3));
    let freq = Vec3::from_fn(|_, _| r.random_range(0.3..1.5));
    (0..n)
        .map(|k| {
            let t = k as f64 * DEFAULT_DT;
            let pos = Vec3::from_fn(|i, _| amp[i] * (freq[i] * t).sin() + noise.sample(&mut r));
            let vel = Vec3::from_fn(|i, _| amp[i] * freq[i] * (freq[i] * t).cos() + noise.sample(&mut r));
            TimedSample::new(t, pos, vel)
        })
        .collect()
}

pub fn one_cycle_per_full_push() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let cap = r.random_range(10..=40);
        let kind = if seed % 2 == 0 { PredictorKind::Egp } else { PredictorKind::Baseline };
        let window = SlidingWindow::new(cap, DEFAULT_DT).unwrap();
        let horizon = Horizon::new(15.0, cap).unwrap();
        let mut p = OnlinePredictor::new(kind, window, horizon, PredictorConfig::default());
        for (k, s) in stream(seed, cap + 15).into_iter().enumerate() {
            let out = p.push(s).unwrap();
            assert!(p.window().len() <= cap, "seed {seed}: window overflow");
            assert_eq!(out.is_some(), k + 1 >= cap, "seed {seed} push {k}");
            if let Some(pred) = out {
                assert!((pred.t_pred - (s.t + horizon.steps as f64 * DEFAULT_DT)).abs() < 1e-9);
            }
        }
    }
}

pub fn stationary_hand_stays_put() {
    let sigma = DEFAULT_NOISE_STD;
    for seed in SEEDS {
        let mut r = rng(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        for _ in 0..5 {
            let at = Vec3::from_fn(|_, _| r.random_range(-0.6..0.6));
            let mut window = SlidingWindow::from_seconds(2.0, DEFAULT_DT).unwrap();
            let mut k = 0;
            while !window.is_full() {
                let pos = at + Vec3::from_fn(|_, _| noise.sample(&mut r));
                let vel = Vec3::from_fn(|_, _| noise.sample(&mut r));
                window.push(TimedSample::new(k as f64 * DEFAULT_DT, pos, vel)).unwrap();
                k += 1;
            }
            let h = Horizon::new(15.0, window.capacity()).unwrap();
            let model = egp_train(&window, &PredictorConfig::default(), None).unwrap();
            let pred = model.predict(&h).unwrap();
            for a in 0..3 {
                let e = (pred.position[a] - at[a]).abs();
                assert!(e <= 5.0 * sigma, "seed {seed} axis {a}: off by {e}");
            }
        }
    }
}

pub fn variance_grows_with_horizon() {
    for seed in SEEDS {
        let mut window = SlidingWindow::from_seconds(2.0, DEFAULT_DT).unwrap();
        for s in stream(seed, window.capacity()) {
            window.push(s).unwrap();
        }
        let cfg = PredictorConfig::default();
        let egp = egp_train(&window, &cfg, None).unwrap();
        let base = baseline_train(&window, &cfg, None).unwrap();
        let max_h = window.capacity() / 4;
        for (name, var) in [
            ("egp", Box::new(|h| egp.predict(&Horizon::from_steps(h)).unwrap().variance.sum()) as Box<dyn Fn(usize) -> f64>),
            ("baseline", Box::new(|h| base.predict(&Horizon::from_steps(h)).unwrap().variance.sum())),
        ] {
            let mut prev = var(1);
            for h in 2..=max_h {
                let v = var(h);
                assert!(v >= prev - 1e-12, "seed {seed} {name}: variance fell at h={h}: {prev} -> {v}");
                prev = v;
            }
        }
    }
}

pub fn identical_streams_identical_forecasts() {
    for seed in SEEDS {
        let run = || {
            let mut p = OnlinePredictor::egp_default();
            stream(seed, 74)
                .into_iter()
                .filter_map(|s| p.push(s).unwrap())
                .collect::<Vec<_>>()
        };
        let (a, b) = (run(), run());
        assert!(!a.is_empty());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.position.map(f64::to_bits), y.position.map(f64::to_bits), "seed {seed}");
            assert_eq!(x.variance.map(f64::to_bits), y.variance.map(f64::to_bits), "seed {seed}");
        }
    }
}
