//! Workspace geometry: interaction points, safe points on the partition
//! plane, the human sphere, and gaze-ray scoring.

use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

pub const INTERACTION_IDS: std::ops::RangeInclusive<u32> = 1..=18;
pub const SAFE_IDS: std::ops::RangeInclusive<u32> = 20..=24;

/// Safe points must lie on the partition plane within this distance (m).
pub const ON_PLANE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point lies behind the gaze origin (along-ray distance {0})")]
    BehindUser(f64),
    #[error("no interaction point in front of the user")]
    NoGazeCandidate,
    #[error("scene config: {0}")]
    Config(String),
    #[error("scene file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionPoint {
    pub id: u32,
    pub pos: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafePoint {
    pub id: u32,
    pub pos: Vec3,
}

/// Plane splitting the car interior (negative side) from the free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionPlane {
    pub point: Vec3,
    normal: Vec3,
}

impl PartitionPlane {
    /// Normalizes `normal`; rejects zero or non-finite vectors.
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self, SceneError> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0) || point.iter().any(|v| !v.is_finite()) {
            return Err(SceneError::InvalidArgument(format!(
                "bad partition plane point={point:?} normal={normal:?}"
            )));
        }
        Ok(Self {
            point,
            normal: normal / n,
        })
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    /// Signed distance, positive on the free-space side.
    pub fn signed_distance(&self, pos: &Vec3) -> f64 {
        (pos - self.point).dot(&self.normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanSphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Head-anchored gaze ray with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeRay {
    pub origin: Vec3,
    direction: Vec3,
}

impl GazeRay {
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, SceneError> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) || origin.iter().any(|v| !v.is_finite()) {
            return Err(SceneError::InvalidArgument(format!(
                "bad gaze ray origin={origin:?} direction={direction:?}"
            )));
        }
        // Leave already-unit directions untouched so they survive a text round trip.
        let direction = if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            direction
        } else {
            direction / n
        };
        Ok(Self { origin, direction })
    }

    /// Ray from `origin` through `target`.
    pub fn towards(origin: Vec3, target: Vec3) -> Result<Self, SceneError> {
        Self::new(origin, target - origin)
    }

    pub fn direction(&self) -> &Vec3 {
        &self.direction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Interior,
    FreeSpace,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Interior => "interior",
            Region::FreeSpace => "free_space",
        })
    }
}

/// Points on the plane count as interior.
pub fn region_of(pos: &Vec3, plane: &PartitionPlane) -> Region {
    if plane.signed_distance(pos) > 0.0 {
        Region::FreeSpace
    } else {
        Region::Interior
    }
}

pub fn distance_to_sphere(pos: &Vec3, s: &HumanSphere) -> f64 {
    ((pos - s.center).norm() - s.radius).max(0.0)
}

fn nearest_by<'a, T>(
    pos: &Vec3,
    items: &'a [T],
    key: impl Fn(&T) -> (u32, Vec3),
) -> Option<&'a T> {
    items
        .iter()
        .map(|it| {
            let (id, p) = key(it);
            ((p - pos).norm_squared(), id, it)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, it)| it)
}

/// Euclidean nearest interaction point; ties go to the lowest id.
pub fn nearest_point<'a>(
    pos: &Vec3,
    points: &'a [InteractionPoint],
) -> Result<&'a InteractionPoint, SceneError> {
    nearest_by(pos, points, |p| (p.id, p.pos))
        .ok_or_else(|| SceneError::InvalidArgument("empty interaction point set".into()))
}

/// Euclidean nearest safe point; ties go to the lowest id.
pub fn nearest_safe_point<'a>(pos: &Vec3, sps: &'a [SafePoint]) -> Result<&'a SafePoint, SceneError> {
    nearest_by(pos, sps, |p| (p.id, p.pos))
        .ok_or_else(|| SceneError::InvalidArgument("empty safe point set".into()))
}

/// Ratio of the perpendicular distance from `p` to the ray over the along-ray
/// distance of its projection: the tangent of the visual angle.
pub fn gaze_score(ray: &GazeRay, p: &Vec3) -> Result<f64, SceneError> {
    let rel = p - ray.origin;
    let along = rel.dot(&ray.direction);
    if !(along > 0.0) {
        return Err(SceneError::BehindUser(along));
    }
    let perp = (rel - ray.direction * along).norm();
    Ok(perp / along)
}

/// Interaction point with the smallest gaze score; ties go to the lowest id.
pub fn gaze_select<'a>(
    ray: &GazeRay,
    points: &'a [InteractionPoint],
) -> Result<&'a InteractionPoint, SceneError> {
    points
        .iter()
        .filter_map(|p| gaze_score(ray, &p.pos).ok().map(|s| (s, p.id, p)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, p)| p)
        .ok_or(SceneError::NoGazeCandidate)
}

/// Validated, immutable world model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    points: Vec<InteractionPoint>,
    safe_points: Vec<SafePoint>,
    plane: PartitionPlane,
    human: HumanSphere,
}

impl Scene {
    pub fn new(
        mut points: Vec<InteractionPoint>,
        mut safe_points: Vec<SafePoint>,
        plane: PartitionPlane,
        human: HumanSphere,
    ) -> Result<Self, SceneError> {
        if points.is_empty() {
            return Err(SceneError::Config("scene needs at least one interaction point".into()));
        }
        if safe_points.is_empty() {
            return Err(SceneError::Config("scene needs at least one safe point".into()));
        }
        points.sort_by_key(|p| p.id);
        safe_points.sort_by_key(|p| p.id);
        for w in points.windows(2) {
            if w[0].id == w[1].id {
                return Err(SceneError::Config(format!("duplicate interaction point id {}", w[0].id)));
            }
        }
        for w in safe_points.windows(2) {
            if w[0].id == w[1].id {
                return Err(SceneError::Config(format!("duplicate safe point id {}", w[0].id)));
            }
        }
        if let Some(p) = points.iter().find(|p| !INTERACTION_IDS.contains(&p.id)) {
            return Err(SceneError::Config(format!("interaction point id {} outside 1..=18", p.id)));
        }
        if let Some(p) = safe_points.iter().find(|p| !SAFE_IDS.contains(&p.id)) {
            return Err(SceneError::Config(format!("safe point id {} outside 20..=24", p.id)));
        }
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !points.iter().all(|p| finite(&p.pos)) || !safe_points.iter().all(|p| finite(&p.pos)) {
            return Err(SceneError::Config("non-finite coordinates".into()));
        }
        for sp in &safe_points {
            let d = plane.signed_distance(&sp.pos);
            if d.abs() > ON_PLANE_TOL {
                return Err(SceneError::Config(format!(
                    "safe point {} is {d:e} m off the partition plane",
                    sp.id
                )));
            }
        }
        if !(human.radius > 0.0 && human.radius.is_finite()) || !finite(&human.center) {
            return Err(SceneError::Config(format!("bad human sphere {human:?}")));
        }
        Ok(Self {
            points,
            safe_points,
            plane,
            human,
        })
    }

    pub fn points(&self) -> &[InteractionPoint] {
        &self.points
    }

    pub fn safe_points(&self) -> &[SafePoint] {
        &self.safe_points
    }

    pub fn plane(&self) -> &PartitionPlane {
        &self.plane
    }

    pub fn human(&self) -> &HumanSphere {
        &self.human
    }

    pub fn is_safe_id(&self, id: u32) -> bool {
        self.safe_points.iter().any(|p| p.id == id)
    }

    /// Position of an interaction or safe point.
    pub fn position(&self, id: u32) -> Option<Vec3> {
        self.points
            .iter()
            .find(|p| p.id == id)
            .map(|p| p.pos)
            .or_else(|| self.safe_points.iter().find(|p| p.id == id).map(|p| p.pos))
    }

    pub fn from_json_str(s: &str) -> Result<Self, SceneError> {
        let cfg: SceneConfig =
            serde_json::from_str(s).map_err(|e| SceneError::Config(e.to_string()))?;
        cfg.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SceneConfig::from(self)).expect("scene serializes")
    }

    /// Synthetic cockpit: 18 interaction points in a 1.2 m × 0.8 m × 0.6 m
    /// interior box in front of a seated user, five safe points along the
    /// top edge of the dashboard plane.
    ///
    /// Frame: x to the user's right, y forward, z up, origin at seat height
    /// below the user's head. The plane `y = 0.95` separates the interior
    /// from the robot's free space.
    pub fn default_cockpit() -> Self {
        let pts: [(u32, [f64; 3]); 18] = [
            (1, [-0.60, 0.79, 0.23]),
            (2, [-0.43, 0.87, 0.08]),
            (3, [-0.10, 0.86, 0.27]),
            (4, [0.36, 0.84, 0.17]),
            (5, [0.53, 0.82, -0.06]),
            (6, [-0.32, 0.63, -0.08]),
            (7, [0.00, 0.66, 0.06]),
            (8, [-0.21, 0.53, -0.27]),
            (9, [0.01, 0.69, -0.29]),
            (10, [0.44, 0.57, -0.44]),
            (11, [0.24, 0.25, -0.25]),
            (12, [-0.36, 0.39, -0.13]),
            (13, [-0.60, 0.46, 0.10]),
            (14, [-0.58, 0.24, -0.05]),
            (15, [0.27, 0.21, 0.01]),
            (16, [0.58, 0.21, -0.15]),
            (17, [0.60, 0.55, 0.17]),
            (18, [-0.22, 0.26, -0.29]),
        ];
        let points = pts
            .iter()
            .map(|(id, p)| InteractionPoint {
                id: *id,
                pos: Vec3::new(p[0], p[1], p[2]),
            })
            .collect();
        let safe_points = (0..5)
            .map(|i| SafePoint {
                id: 20 + i,
                pos: Vec3::new(-0.6 + 0.3 * i as f64, 0.95, 0.35),
            })
            .collect();
        let plane = PartitionPlane::new(Vec3::new(0.0, 0.95, 0.0), Vec3::y()).unwrap();
        let human = HumanSphere {
            center: Vec3::new(0.0, -0.05, 0.15),
            radius: 0.3,
        };
        Self::new(points, safe_points, plane, human).expect("default cockpit is valid")
    }

    /// Default head position for gaze rays: above the human sphere centre.
    pub fn default_head(&self) -> Vec3 {
        self.human.center + Vec3::new(0.0, 0.0, self.human.radius + 0.25)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PointConfig {
    id: u32,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlaneConfig {
    px: f64,
    py: f64,
    pz: f64,
    nx: f64,
    ny: f64,
    nz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HumanConfig {
    cx: f64,
    cy: f64,
    cz: f64,
    radius: f64,
}

/// On-disk scene layout (JSON, meters).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneConfig {
    points: Vec<PointConfig>,
    safe_points: Vec<PointConfig>,
    plane: PlaneConfig,
    human: HumanConfig,
}

impl TryFrom<SceneConfig> for Scene {
    type Error = SceneError;

    fn try_from(c: SceneConfig) -> Result<Self, SceneError> {
        let v = |p: &PointConfig| Vec3::new(p.x, p.y, p.z);
        let plane = PartitionPlane::new(
            Vec3::new(c.plane.px, c.plane.py, c.plane.pz),
            Vec3::new(c.plane.nx, c.plane.ny, c.plane.nz),
        )
        .map_err(|e| SceneError::Config(e.to_string()))?;
        Scene::new(
            c.points.iter().map(|p| InteractionPoint { id: p.id, pos: v(p) }).collect(),
            c.safe_points.iter().map(|p| SafePoint { id: p.id, pos: v(p) }).collect(),
            plane,
            HumanSphere {
                center: Vec3::new(c.human.cx, c.human.cy, c.human.cz),
                radius: c.human.radius,
            },
        )
    }
}

impl From<&Scene> for SceneConfig {
    fn from(s: &Scene) -> Self {
        let pc = |id: u32, p: &Vec3| PointConfig {
            id,
            x: p.x,
            y: p.y,
            z: p.z,
        };
        Self {
            points: s.points.iter().map(|p| pc(p.id, &p.pos)).collect(),
            safe_points: s.safe_points.iter().map(|p| pc(p.id, &p.pos)).collect(),
            plane: PlaneConfig {
                px: s.plane.point.x,
                py: s.plane.point.y,
                pz: s.plane.point.z,
                nx: s.plane.normal.x,
                ny: s.plane.normal.y,
                nz: s.plane.normal.z,
            },
            human: HumanConfig {
                cx: s.human.center.x,
                cy: s.human.center.y,
                cz: s.human.center.z,
                radius: s.human.radius,
            },
        }
    }
}
