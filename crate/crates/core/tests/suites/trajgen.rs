use gpintent::scene::*;
use gpintent::trajgen::*;
use rand::Rng;

use super::{rng, SEEDS};

pub const ALL: &[super::Property] = &[
    ("trajgen::min_jerk_rests_at_ends", min_jerk_rests_at_ends),
    ("trajgen::corpus_is_a_function_of_seed", corpus_is_a_function_of_seed),
    ("trajgen::csv_round_trip", csv_round_trip),
    ("trajgen::error_metrics_match_sums", error_metrics_match_sums),
];

pub fn min_jerk_rests_at_ends() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let a = Vec3::from_fn(|_, _| r.random_range(-1.0..1.0));
        let b = Vec3::from_fn(|_, _| r.random_range(-1.0..1.0));
        let dur = r.random_range(0.5..5.0);
        let (p0, v0) = min_jerk_at(&a, &b, dur, 0.0);
        let (p1, v1) = min_jerk_at(&a, &b, dur, dur);
        assert!((p0 - a).norm() <= 1e-12 && (p1 - b).norm() <= 1e-12, "seed {seed}");
        assert!(v0.norm() <= 1e-9 && v1.norm() <= 1e-9, "seed {seed}");
        // Acceleration from the velocity's slope right at the ends.
        let h = 1e-6 * dur;
        let acc0 = (min_jerk_at(&a, &b, dur, h).1 - v0) / h;
        let acc1 = (v1 - min_jerk_at(&a, &b, dur, dur - h).1) / h;
        let scale = (b - a).norm() / (dur * dur);
        assert!(acc0.norm() <= 1e-3 * scale.max(1.0) && acc1.norm() <= 1e-3 * scale.max(1.0), "seed {seed}");
        // Velocity matches the slope of position mid-move.
        let t = r.random_range(0.1..0.9) * dur;
        let fd = (min_jerk_at(&a, &b, dur, t + h).0 - min_jerk_at(&a, &b, dur, t - h).0) / (2.0 * h);
        assert!((fd - min_jerk_at(&a, &b, dur, t).1).norm() <= 1e-6 * (1.0 + fd.norm()), "seed {seed}");
    }
}

pub fn corpus_is_a_function_of_seed() {
    let scene = Scene::default_cockpit();
    for seed in SEEDS {
        let p = GenParams { seed, idle_before_s: 0.5, ..GenParams::default() };
        let a = gen_corpus(&scene, &CORPUS_PAIRS, &p).unwrap();
        let b = gen_corpus(&scene, &CORPUS_PAIRS, &p).unwrap();
        let bytes = |recs: &[TrajectoryRecord]| {
            recs.iter()
                .map(|r| {
                    let mut v = Vec::new();
                    write_csv(&mut v, r).unwrap();
                    v
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(bytes(&a), bytes(&b), "seed {seed}");
        let other = gen_corpus(&scene, &CORPUS_PAIRS, &GenParams { seed: seed + 100, ..p }).unwrap();
        assert_ne!(bytes(&a), bytes(&other), "seed {seed}");
    }
}

pub fn csv_round_trip() {
    let scene = Scene::default_cockpit();
    for seed in SEEDS {
        let p = GenParams { seed, idle_before_s: 0.5, ..GenParams::default() };
        for rec in gen_corpus(&scene, &CORPUS_PAIRS, &p).unwrap() {
            let mut v = Vec::new();
            write_csv(&mut v, &rec).unwrap();
            let back = parse_csv(std::str::from_utf8(&v).unwrap()).unwrap();
            assert_eq!(back, rec, "seed {seed} {}", rec.id);
        }
    }
}

pub fn error_metrics_match_sums() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let n = r.random_range(1..200);
        let pred: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let mut actual: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        actual[0] = 0.0;
        let floor = r.random_range(0.0..1.0);
        let kept: Vec<(f64, f64)> = pred.iter().zip(&actual).filter(|(_, a)| a.abs() > floor).map(|(p, a)| (*p, *a)).collect();
        let oracle = 100.0 * kept.iter().map(|(p, a)| ((p - a) / a).abs()).sum::<f64>() / kept.len() as f64;
        let m = mape_with_floor(&pred, &actual, floor).unwrap();
        assert_eq!(m.used, kept.len());
        if kept.is_empty() {
            assert!(m.value.is_nan());
        } else {
            assert!((m.value - oracle).abs() <= 1e-12 * oracle.max(1.0), "seed {seed}: {} vs {oracle}", m.value);
        }
        let oracle = (pred.iter().zip(&actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((rmse(&pred, &actual).unwrap() - oracle).abs() <= 1e-12 * oracle.max(1.0), "seed {seed}");
    }
}
