use gpintent::scene::*;
use rand::Rng;

use super::{rng, SEEDS};

pub const ALL: &[super::Property] = &[
    ("scene::nearest_matches_scan", nearest_matches_scan),
    ("scene::gaze_ignores_direction_scale", gaze_ignores_direction_scale),
    ("scene::regions_partition_space", regions_partition_space),
    ("scene::safe_points_on_plane", safe_points_on_plane),
];

fn rand_vec(r: &mut impl Rng, lo: f64, hi: f64) -> Vec3 {
    Vec3::from_fn(|_, _| r.random_range(lo..hi))
}

/// Brute force: smallest distance, then smallest id.
fn scan(q: &Vec3, items: &[(u32, Vec3)]) -> u32 {
    let mut best = items[0];
    for &(id, p) in &items[1..] {
        let (d, bd) = ((p - q).norm(), (best.1 - q).norm());
        if d < bd || (d == bd && id < best.0) {
            best = (id, p);
        }
    }
    best.0
}

pub fn nearest_matches_scan() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let n = r.random_range(1..=30);
        let mut items: Vec<(u32, Vec3)> = Vec::new();
        for i in 0..n {
            // Reuse an earlier position now and then to force exact ties.
            let pos = if i > 0 && r.random_bool(0.2) {
                items[r.random_range(0..items.len())].1
            } else {
                rand_vec(&mut r, -1.0, 1.0)
            };
            items.push((r.random_range(1..1000) * 100 + i as u32, pos));
        }
        let points: Vec<InteractionPoint> = items.iter().map(|&(id, pos)| InteractionPoint { id, pos }).collect();
        let safe: Vec<SafePoint> = items.iter().map(|&(id, pos)| SafePoint { id, pos }).collect();
        for _ in 0..200 {
            let q = if r.random_bool(0.1) { items[r.random_range(0..n)].1 } else { rand_vec(&mut r, -1.5, 1.5) };
            let want = scan(&q, &items);
            assert_eq!(nearest_point(&q, &points).unwrap().id, want, "seed {seed}");
            assert_eq!(nearest_safe_point(&q, &safe).unwrap().id, want, "seed {seed}");
        }
    }
    let scene = Scene::default_cockpit();
    let all: Vec<(u32, Vec3)> = scene.points().iter().map(|p| (p.id, p.pos)).collect();
    let sps: Vec<(u32, Vec3)> = scene.safe_points().iter().map(|p| (p.id, p.pos)).collect();
    for seed in SEEDS {
        let mut r = rng(seed);
        for _ in 0..200 {
            let q = rand_vec(&mut r, -1.0, 1.2);
            assert_eq!(nearest_point(&q, scene.points()).unwrap().id, scan(&q, &all));
            assert_eq!(nearest_safe_point(&q, scene.safe_points()).unwrap().id, scan(&q, &sps));
        }
    }
}

pub fn gaze_ignores_direction_scale() {
    let scene = Scene::default_cockpit();
    for seed in SEEDS {
        let mut r = rng(seed);
        for _ in 0..50 {
            let origin = scene.default_head() + rand_vec(&mut r, -0.05, 0.05);
            let dir = rand_vec(&mut r, -1.0, 1.0);
            if dir.norm() < 1e-3 {
                continue;
            }
            let k = 10f64.powf(r.random_range(-3.0..3.0));
            let a = GazeRay::new(origin, dir).unwrap();
            let b = GazeRay::new(origin, dir * k).unwrap();
            for p in scene.points() {
                match (gaze_score(&a, &p.pos), gaze_score(&b, &p.pos)) {
                    (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-9 * x.max(1.0), "seed {seed}: {x} vs {y}"),
                    (Err(_), Err(_)) => {}
                    (x, y) => {
                        // Only a point essentially perpendicular to the ray may flip.
                        let along = (p.pos - origin).dot(a.direction());
                        assert!(along.abs() < 1e-12, "seed {seed}: {x:?} vs {y:?}");
                    }
                }
            }
            let ga = gaze_select(&a, scene.points()).map(|p| p.id).ok();
            let gb = gaze_select(&b, scene.points()).map(|p| p.id).ok();
            assert_eq!(ga, gb, "seed {seed}");
            // Brute-force argmin of the score.
            let best = scene
                .points()
                .iter()
                .filter_map(|p| gaze_score(&a, &p.pos).ok().map(|s| (s, p.id)))
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .map(|x| x.1);
            assert_eq!(ga, best, "seed {seed}");
        }
    }
}

pub fn regions_partition_space() {
    for seed in SEEDS {
        let mut r = rng(seed);
        let plane = PartitionPlane::new(rand_vec(&mut r, -1.0, 1.0), rand_vec(&mut r, -1.0, 1.0)).unwrap();
        for _ in 0..200 {
            let p = rand_vec(&mut r, -3.0, 3.0);
            let region = region_of(&p, &plane);
            let d = plane.signed_distance(&p);
            assert_eq!(region == Region::FreeSpace, d > 0.0, "seed {seed}");
            assert_eq!(region == Region::Interior, d <= 0.0, "seed {seed}");
            let mirrored = p - plane.normal() * (2.0 * d);
            if d.abs() > 1e-9 {
                assert_ne!(region_of(&mirrored, &plane), region, "seed {seed}: reflection kept {region}");
            }
        }
    }
}

pub fn safe_points_on_plane() {
    let scene = Scene::default_cockpit();
    for sp in scene.safe_points() {
        assert!(scene.plane().signed_distance(&sp.pos).abs() <= ON_PLANE_TOL, "safe point {}", sp.id);
    }
    for p in scene.points() {
        assert_eq!(region_of(&p.pos, scene.plane()), Region::Interior, "point {}", p.id);
    }
}
