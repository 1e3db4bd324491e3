use gpintent::predictor::{TimedSample, DEFAULT_DT};
use gpintent::scene::*;
use gpintent::strategies::*;
use gpintent::trajgen::{gen_record, DistanceLabel, GenParams};
use rand::Rng;

use super::{rng, SEEDS};

pub const ALL: &[super::Property] = &[
    ("strategies::targets_stay_in_scene", targets_stay_in_scene),
    ("strategies::larger_threshold_keeps_interior_choice", larger_threshold_keeps_interior_choice),
    ("strategies::hand_on_point_selects_it", hand_on_point_selects_it),
    ("strategies::smaller_alpha_keeps_interior_choice", smaller_alpha_keeps_interior_choice),
    ("strategies::identical_streams_identical_decisions", identical_streams_identical_decisions),
];

fn cockpit_pos(r: &mut impl Rng) -> Vec3 {
    Vec3::new(r.random_range(-0.9..0.9), r.random_range(-0.1..1.2), r.random_range(-0.7..0.6))
}

fn random_params(r: &mut impl Rng) -> StrategyParams {
    StrategyParams {
        r: r.random_range(0.02..0.5),
        alpha: r.random_range(0.05..=1.0),
        ..StrategyParams::default()
    }
}

/// Every stateless decision rule on one random input.
fn decide_all(scene: &Scene, hand: &Vec3, pred: &Vec3, ray: &GazeRay, p: &StrategyParams) -> Vec<(StrategyKind, Decision)> {
    vec![
        (StrategyKind::Sta, sta_nn(0.0, hand, scene)),
        (StrategyKind::Stb, stb_gp_nn(0.0, hand, Some(pred), scene)),
        (StrategyKind::Stc, stc_safe_nn(0.0, hand, scene, p)),
        (StrategyKind::Std, std_safe_gp_nn(0.0, hand, Some(pred), scene, p)),
        (StrategyKind::Ste, ste_gaze_safe_nn(0.0, hand, ray, scene, p)),
        (StrategyKind::Stf, stf_gaze_safe_gp_nn(0.0, hand, Some(pred), ray, scene, p)),
    ]
}

pub fn targets_stay_in_scene() {
    let scene = Scene::default_cockpit();
    let interior: Vec<u32> = scene.points().iter().map(|p| p.id).collect();
    let safe: Vec<u32> = scene.safe_points().iter().map(|p| p.id).collect();
    for seed in SEEDS {
        let mut r = rng(seed);
        for _ in 0..200 {
            let (hand, pred) = (cockpit_pos(&mut r), cockpit_pos(&mut r));
            let ray = GazeRay::towards(scene.default_head(), cockpit_pos(&mut r)).unwrap();
            let p = random_params(&mut r);
            for (kind, d) in decide_all(&scene, &hand, &pred, &ray, &p) {
                let ok = interior.contains(&d.target) || (kind.uses_safe_points() && safe.contains(&d.target));
                assert!(ok, "seed {seed}: {kind} chose {}", d.target);
                assert_eq!(scene.is_safe_id(d.target), d.source == DecisionSource::SafePointFallback);
            }
        }
    }
}

pub fn larger_threshold_keeps_interior_choice() {
    let scene = Scene::default_cockpit();
    for seed in SEEDS {
        let mut r = rng(seed);
        for _ in 0..200 {
            let hand = cockpit_pos(&mut r);
            let p = random_params(&mut r);
            let d = stc_safe_nn(0.0, &hand, &scene, &p);
            if scene.is_safe_id(d.target) {
                continue;
            }
            for _ in 0..5 {
                let bigger = StrategyParams { r: p.r + r.random_range(1e-6..1.0), ..p };
                assert_eq!(stc_safe_nn(0.0, &hand, &scene, &bigger).target, d.target, "seed {seed}");
            }
        }
    }
}

pub fn hand_on_point_selects_it() {
    let scene = Scene::default_cockpit();
    let p = StrategyParams::default();
    for seed in SEEDS {
        let mut r = rng(seed);
        let pt = scene.points()[r.random_range(0..scene.points().len())];
        let pred = cockpit_pos(&mut r);
        assert_eq!(sta_nn(0.0, &pt.pos, &scene).target, pt.id);
        assert_eq!(stc_safe_nn(0.0, &pt.pos, &scene, &p).target, pt.id);
        assert_eq!(std_safe_gp_nn(0.0, &pt.pos, Some(&pred), &scene, &p).target, pt.id);
        // A hand resting on the point: the forecast stays there too.
        let mut st = StrategyState::new(StrategyKind::Stb, p).unwrap();
        let mut last = None;
        for k in 0..80 {
            last = Some(st.step(&TimedSample::new(k as f64 * DEFAULT_DT, pt.pos, Vec3::zeros()), &scene).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(last.source, DecisionSource::GpPrediction, "seed {seed}");
        assert_eq!(last.target, pt.id, "seed {seed}");
    }
}

/// Shrinking α scales both hand and forecast distances down, so it can turn
/// a safe-point decision into an interior one but never the reverse.
pub fn smaller_alpha_keeps_interior_choice() {
    let scene = Scene::default_cockpit();
    for seed in SEEDS {
        let mut r = rng(seed);
        for _ in 0..200 {
            let (hand, pred) = (cockpit_pos(&mut r), cockpit_pos(&mut r));
            let ray = GazeRay::towards(scene.default_head(), cockpit_pos(&mut r)).unwrap();
            let p = random_params(&mut r);
            let smaller = StrategyParams { alpha: p.alpha * r.random_range(0.01..1.0), ..p };
            let before = decide_all(&scene, &hand, &pred, &ray, &p);
            let after = decide_all(&scene, &hand, &pred, &ray, &smaller);
            for ((kind, a), (_, b)) in before.iter().zip(&after) {
                if !scene.is_safe_id(a.target) {
                    assert!(!scene.is_safe_id(b.target), "seed {seed}: {kind} moved to safe point {}", b.target);
                }
            }
        }
    }
}

pub fn identical_streams_identical_decisions() {
    let scene = Scene::default_cockpit();
    let gen = GenParams { idle_before_s: 0.5, idle_after_s: 0.2, ..GenParams::default() };
    for seed in SEEDS {
        let mut r = rng(seed);
        let ids: Vec<u32> = scene.points().iter().map(|p| p.id).collect();
        let a = ids[r.random_range(0..ids.len())];
        let b = loop {
            let b = ids[r.random_range(0..ids.len())];
            if b != a {
                break b;
            }
        };
        let rec = gen_record(&scene, a, b, DistanceLabel::Short, &GenParams { seed, ..gen }, &mut r).unwrap();
        let kind = StrategyKind::ALL[seed as usize % 6];
        let run = || {
            let mut st = StrategyState::new(kind, StrategyParams::default()).unwrap();
            rec.samples.iter().map(|s| st.step(s, &scene).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run(), "seed {seed} {kind}");
    }
}
