use std::sync::OnceLock;

use gpintent::scene::*;
use gpintent::simulator::*;
use gpintent::strategies::{DecisionSource, StrategyKind};
use gpintent::trajgen::{gen_record, DistanceLabel, GenParams, TrajectoryRecord};
use rand::Rng;

use super::{rng, SEEDS};

pub const ALL: &[super::Property] = &[
    ("simulator::speed_limits", speed_limits),
    ("simulator::distance_is_path_length", distance_is_path_length),
    ("simulator::no_preemption", no_preemption),
    ("simulator::metric_consistency", metric_consistency),
    ("simulator::metrics_by_hand", metrics_by_hand),
];

/// One seeded random run per seed, shared by the properties below.
fn runs() -> &'static [(TrajectoryRecord, RunOutput)] {
    static RUNS: OnceLock<Vec<(TrajectoryRecord, RunOutput)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let scene = Scene::default_cockpit();
        let ids: Vec<u32> = scene.points().iter().map(|p| p.id).collect();
        SEEDS
            .map(|seed| {
                let mut r = rng(seed);
                let a = ids[r.random_range(0..ids.len())];
                let b = loop {
                    let b = ids[r.random_range(0..ids.len())];
                    if b != a {
                        break b;
                    }
                };
                let label = [DistanceLabel::Long, DistanceLabel::Medium, DistanceLabel::Short][r.random_range(0..3)];
                let gen = GenParams { idle_before_s: 1.0, idle_after_s: 0.3, seed, ..GenParams::default() };
                let rec = gen_record(&scene, a, b, label, &gen, &mut r).unwrap();
                let kind = StrategyKind::ALL[r.random_range(0..6)];
                let cfg = SimConfig { params: gpintent::strategies::StrategyParams { window_s: 1.0, ..Default::default() }, ..SimConfig::default() };
                let out = run(&rec, kind, &scene, &cfg).unwrap();
                (rec, out)
            })
            .collect()
    })
}

pub fn speed_limits() {
    let scene = Scene::default_cockpit();
    let cfg = SimConfig::default();
    // One tick of travel at full speed.
    let band = cfg.v_free * cfg.dt;
    for (seed, (_, out)) in SEEDS.zip(runs()) {
        let mut prev = out.log.start_position;
        for row in &out.log.rows {
            let v = (row.robot - prev).norm() / cfg.dt;
            assert!(v <= cfg.v_free + 1e-9, "seed {seed}: {v} m/s at t={}", row.t);
            let deep = |p: &Vec3| scene.plane().signed_distance(p) < -band;
            if deep(&prev) && deep(&row.robot) {
                assert!(v <= cfg.v_interior + 1e-9, "seed {seed}: {v} m/s inside at t={}", row.t);
            }
            prev = row.robot;
        }
    }
}

pub fn distance_is_path_length() {
    let scene = Scene::default_cockpit();
    for (seed, (_, out)) in SEEDS.zip(runs()) {
        let log = &out.log;
        let pos = |id| scene.position(id).unwrap();
        let mut expected = 0.0;
        let mut at = log.start_id;
        for (_, to) in arrivals(log) {
            expected += (pos(to) - pos(at)).norm();
            at = to;
        }
        if let RobotStatus::Moving { from, .. } = log.rows.last().unwrap().robot_state {
            expected += (log.rows.last().unwrap().robot - pos(from)).norm();
        }
        assert!((out.metrics.d_r - expected).abs() <= 1e-9, "seed {seed}: {} vs {expected}", out.metrics.d_r);
    }
}

pub fn no_preemption() {
    for (seed, (_, out)) in SEEDS.zip(runs()) {
        let log = &out.log;
        // Reached points appear, in order, among the decisions.
        let targets: Vec<u32> = log.rows.iter().map(|r| r.decision_target).collect();
        let mut it = targets.iter();
        for (t, id) in arrivals(log) {
            assert!(it.any(|x| *x == id), "seed {seed}: arrival at {id} (t={t}) out of decision order");
        }
        // A started move only ever ends at its own endpoint.
        let mut prev = RobotStatus::Idle(log.start_id);
        for row in &log.rows {
            let ok = match (prev, row.robot_state) {
                (a, b) if a == b => true,
                (RobotStatus::Moving { to, .. }, RobotStatus::Idle(x)) => x == to,
                (RobotStatus::Moving { to, .. }, RobotStatus::Moving { from, to: next }) => {
                    from == to && next == row.decision_target
                }
                (RobotStatus::Idle(x), RobotStatus::Moving { from, to }) => from == x && to == row.decision_target,
                (RobotStatus::Idle(_), RobotStatus::Idle(_)) => false,
            };
            assert!(ok, "seed {seed}: {prev} -> {} at t={}", row.robot_state, row.t);
            prev = row.robot_state;
        }
    }
}

pub fn metric_consistency() {
    for (seed, (rec, out)) in SEEDS.zip(runs()) {
        let m = &out.metrics;
        assert!(m.sp_r <= m.sp_d, "seed {seed}: SP_r {} > SP_d {}", m.sp_r, m.sp_d);
        assert!(m.d_h >= 0.0 && m.d_r >= 0.0, "seed {seed}");
        if let (Some(td), Some(tr)) = (m.t_d, m.t_r) {
            assert!(tr >= 0.0 && td >= 0.0, "seed {seed}");
        }
        assert_eq!(out.log.stream_ticks, rec.samples.len());
        assert_eq!(out.decisions.len(), out.log.rows.len());
    }
}

pub fn metrics_by_hand() {
    let scene = Scene::default_cockpit();
    let p = |id| scene.position(id).unwrap();
    for seed in SEEDS {
        let mut r = rng(seed);
        let t0 = r.random_range(0.0..100.0);
        let mid = p(2) + (p(24) - p(2)) * 0.5;
        let q = p(24) + (p(11) - p(24)) * 0.3;
        let d: Vec<f64> = (0..5).map(|_| r.random_range(0.0..2.0)).collect();
        let row = |k: usize, target, source, robot, state| RunLogRow {
            t: t0 + 0.5 * k as f64,
            decision_target: target,
            decision_source: source,
            robot,
            robot_state: state,
            d_h: d[k],
        };
        use DecisionSource::*;
        let rows = vec![
            row(0, 2, RealHand, p(2), RobotStatus::Idle(2)),
            row(1, 24, SafePointFallback, mid, RobotStatus::Moving { from: 2, to: 24 }),
            row(2, 11, RealHand, p(24), RobotStatus::Moving { from: 24, to: 11 }),
            row(3, 20, SafePointFallback, q, RobotStatus::Moving { from: 24, to: 11 }),
            row(4, 11, RealHand, p(11), RobotStatus::Idle(11)),
        ];
        let log = RunLog {
            trajectory_id: "2-11".into(),
            strategy: StrategyKind::Stc,
            start_id: 2,
            start_position: p(2),
            t0,
            stream_ticks: 5,
            rows,
        };
        let stable = compute_metrics(&log, 11, &scene, DetectionRule::Stable).unwrap();
        let first = compute_metrics(&log, 11, &scene, DetectionRule::First).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        assert!(close(stable.t_d.unwrap(), 2.0), "seed {seed}");
        assert!(close(first.t_d.unwrap(), 1.0), "seed {seed}");
        assert!(close(stable.t_r.unwrap(), 2.0), "seed {seed}");
        assert_eq!((stable.sp_d, stable.sp_r), (2, 1));
        let d_r = (mid - p(2)).norm() + (p(24) - mid).norm() + (q - p(24)).norm() + (p(11) - q).norm();
        assert!(close(stable.d_r, d_r), "seed {seed}");
        assert!(close(stable.d_h, d.iter().sum::<f64>() / 5.0), "seed {seed}");
        assert_eq!(arrivals(&log).iter().map(|a| a.1).collect::<Vec<_>>(), vec![24, 11]);
        // Never reaching the end leaves both times empty.
        let mut short = log.clone();
        short.rows.truncate(3);
        let m = compute_metrics(&short, 11, &scene, DetectionRule::Stable).unwrap();
        assert!(m.t_d.is_some() && m.t_r.is_none());
        let m = compute_metrics(&short, 15, &scene, DetectionRule::Stable).unwrap();
        assert!(m.t_d.is_none() && m.t_r.is_none());
    }
}
