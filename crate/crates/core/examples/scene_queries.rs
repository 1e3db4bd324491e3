//! Nearest-point, gaze and region queries against the built-in cockpit.
//!
//!     cargo run --example scene_queries

use gpintent::scene::{gaze_score, gaze_select, nearest_point, nearest_safe_point, region_of, GazeRay, Scene, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = Scene::default_cockpit();
    println!("{} interaction points, {} safe points", scene.points().len(), scene.safe_points().len());

    let hand = Vec3::new(0.1, 0.6, 0.0);
    let p = nearest_point(&hand, scene.points())?;
    let sp = nearest_safe_point(&hand, scene.safe_points())?;
    println!("hand {hand:?}: nearest point {} at {:.3} m, nearest safe point {}", p.id, (p.pos - hand).norm(), sp.id);
    println!(
        "hand is in {}; safe point {} lies {:.3} m from the partition plane",
        region_of(&hand, scene.plane()),
        sp.id,
        scene.plane().signed_distance(&sp.pos)
    );

    let head = scene.default_head();
    let target = scene.position(16).unwrap();
    let ray = GazeRay::towards(head, target + Vec3::new(0.03, -0.02, 0.0))?;
    let chosen = gaze_select(&ray, scene.points())?;
    println!("looking near point 16 selects point {}", chosen.id);
    let mut scores: Vec<(f64, u32)> = scene
        .points()
        .iter()
        .filter_map(|p| gaze_score(&ray, &p.pos).ok().map(|s| (s, p.id)))
        .collect();
    scores.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (s, id) in scores.iter().take(3) {
        println!("  point {id:2}: visual angle {:.1} deg", s.atan().to_degrees());
    }
    println!("\nscene as JSON:\n{}", scene.to_json());
    Ok(())
}
