//! Discrete-time replay of a hand stream against a strategy, with a
//! non-preemptive point-to-point robot.
//!
//! The robot runs straight paths split at the partition plane: fast in free
//! space, slow inside the car. While a path executes, every new decision
//! overwrites a single pending target, which starts as soon as the robot
//! arrives.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{PredictorConfig, TimedSample, DEFAULT_DT};
use crate::scene::{distance_to_sphere, Scene, Vec3, ON_PLANE_TOL};
use crate::strategies::{
    Decision, DecisionSource, StrategyError, StrategyKind, StrategyParams, StrategyState,
};
use crate::trajgen::TrajectoryRecord;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("run log: {0}")]
    Log(String),
}

/// When the endpoint counts as detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionRule {
    /// First tick from which every later decision names the endpoint.
    Stable,
    /// First tick naming the endpoint.
    First,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Speed in free space (m/s).
    pub v_free: f64,
    /// Speed inside the car (m/s).
    pub v_interior: f64,
    pub params: StrategyParams,
    pub detection: DetectionRule,
    /// How long to keep ticking with a frozen hand after the stream ends (s).
    pub timeout_s: f64,
    pub predictor: PredictorConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            v_free: 0.4,
            v_interior: 0.25,
            params: StrategyParams::default(),
            detection: DetectionRule::Stable,
            timeout_s: 60.0,
            predictor: PredictorConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.v_free.is_finite()
            && self.v_free > self.v_interior
            && self.v_interior > 0.0
            && self.timeout_s >= 0.0;
        if !ok {
            return Err(SimError::InvalidArgument(format!(
                "need dt > 0, v_free > v_interior > 0, timeout >= 0: {self:?}"
            )));
        }
        self.params.validate()?;
        Ok(())
    }
}

/// Straight path between two scene points, split where it crosses the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotTrajectory {
    pub from: u32,
    pub to: u32,
    pub polyline: Vec<Vec3>,
    /// Speed of each segment (m/s).
    pub speeds: Vec<f64>,
    pub duration: f64,
}

impl RobotTrajectory {
    pub fn length(&self) -> f64 {
        self.polyline.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Position and arc length covered after `elapsed` seconds.
    pub fn at(&self, elapsed: f64) -> (Vec3, f64) {
        let mut left = elapsed.max(0.0);
        let mut covered = 0.0;
        for (w, v) in self.polyline.windows(2).zip(&self.speeds) {
            let len = (w[1] - w[0]).norm();
            let t = len / v;
            if left < t {
                let d = left * v;
                return (w[0] + (w[1] - w[0]) * (d / len), covered + d);
            }
            left -= t;
            covered += len;
        }
        (*self.polyline.last().expect("non-empty polyline"), covered)
    }

    /// Speed in effect at `elapsed`.
    pub fn speed_at(&self, elapsed: f64) -> f64 {
        let mut left = elapsed.max(0.0);
        for (w, v) in self.polyline.windows(2).zip(&self.speeds) {
            let t = (w[1] - w[0]).norm() / v;
            if left < t {
                return *v;
            }
            left -= t;
        }
        0.0
    }
}

pub fn build_trajectory(
    a: u32,
    b: u32,
    scene: &Scene,
    cfg: &SimConfig,
) -> Result<RobotTrajectory, SimError> {
    if a == b {
        return Err(SimError::InvalidArgument(format!("trajectory from {a} to itself")));
    }
    let missing = |id| SimError::InvalidArgument(format!("point {id} not in scene"));
    let pa = scene.position(a).ok_or_else(|| missing(a))?;
    let pb = scene.position(b).ok_or_else(|| missing(b))?;
    let plane = scene.plane();
    let (sa, sb) = (plane.signed_distance(&pa), plane.signed_distance(&pb));
    let mut polyline = vec![pa];
    if (sa < -ON_PLANE_TOL && sb > ON_PLANE_TOL) || (sa > ON_PLANE_TOL && sb < -ON_PLANE_TOL) {
        polyline.push(pa + (pb - pa) * (sa / (sa - sb)));
    }
    polyline.push(pb);
    // A segment is fast only if neither end is strictly inside the car; the
    // crossing point itself sits on the plane.
    let inside = |p: &Vec3| plane.signed_distance(p) < -ON_PLANE_TOL;
    let speeds: Vec<f64> = polyline
        .windows(2)
        .map(|w| {
            if inside(&w[0]) || inside(&w[1]) {
                cfg.v_interior
            } else {
                cfg.v_free
            }
        })
        .collect();
    let duration = polyline
        .windows(2)
        .zip(&speeds)
        .map(|(w, v)| (w[1] - w[0]).norm() / v)
        .sum();
    Ok(RobotTrajectory {
        from: a,
        to: b,
        polyline,
        speeds,
        duration,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobotStatus {
    Idle(u32),
    Moving { from: u32, to: u32 },
}

impl fmt::Display for RobotStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobotStatus::Idle(at) => write!(f, "idle:{at}"),
            RobotStatus::Moving { from, to } => write!(f, "moving:{from}>{to}"),
        }
    }
}

impl FromStr for RobotStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad robot state {s:?}");
        if let Some(at) = s.strip_prefix("idle:") {
            return at.parse().map(RobotStatus::Idle).map_err(|_| bad());
        }
        let (from, to) = s
            .strip_prefix("moving:")
            .and_then(|m| m.split_once('>'))
            .ok_or_else(bad)?;
        Ok(RobotStatus::Moving {
            from: from.parse().map_err(|_| bad())?,
            to: to.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Motion {
    Idle(u32),
    Moving {
        traj: RobotTrajectory,
        elapsed: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub position: Vec3,
    motion: Motion,
    pub pending: Option<u32>,
    /// Path length driven so far (m).
    pub traveled: f64,
}

impl RobotState {
    pub fn idle_at(id: u32, scene: &Scene) -> Result<Self, SimError> {
        let position = scene
            .position(id)
            .ok_or_else(|| SimError::InvalidArgument(format!("point {id} not in scene")))?;
        Ok(Self {
            position,
            motion: Motion::Idle(id),
            pending: None,
            traveled: 0.0,
        })
    }

    pub fn status(&self) -> RobotStatus {
        match &self.motion {
            Motion::Idle(at) => RobotStatus::Idle(*at),
            Motion::Moving { traj, .. } => RobotStatus::Moving {
                from: traj.from,
                to: traj.to,
            },
        }
    }

    pub fn trajectory(&self) -> Option<&RobotTrajectory> {
        match &self.motion {
            Motion::Moving { traj, .. } => Some(traj),
            Motion::Idle(_) => None,
        }
    }

    /// Applies one tick's decision and advances by `cfg.dt`. Returns the point
    /// reached on this tick, if any.
    pub fn step(
        &mut self,
        target: u32,
        scene: &Scene,
        cfg: &SimConfig,
    ) -> Result<Option<u32>, SimError> {
        match &self.motion {
            Motion::Idle(at) if *at == target => return Ok(None),
            Motion::Idle(at) => {
                self.motion = Motion::Moving {
                    traj: build_trajectory(*at, target, scene, cfg)?,
                    elapsed: 0.0,
                };
            }
            Motion::Moving { .. } => self.pending = Some(target),
        }
        let Motion::Moving { traj, elapsed } = &mut self.motion else {
            unreachable!()
        };
        let (_, before) = traj.at(*elapsed);
        *elapsed += cfg.dt;
        if *elapsed < traj.duration {
            let (pos, after) = traj.at(*elapsed);
            self.traveled += after - before;
            self.position = pos;
            return Ok(None);
        }
        let end = traj.to;
        self.traveled += traj.length() - before;
        self.position = *traj.polyline.last().expect("non-empty polyline");
        self.motion = Motion::Idle(end);
        if let Some(next) = self.pending.take() {
            if next != end {
                self.motion = Motion::Moving {
                    traj: build_trajectory(end, next, scene, cfg)?,
                    elapsed: 0.0,
                };
            }
        }
        Ok(Some(end))
    }
}

/// Functional form of [`RobotState::step`].
pub fn robot_step(
    robot: &RobotState,
    decision: &Decision,
    scene: &Scene,
    cfg: &SimConfig,
) -> Result<RobotState, SimError> {
    let mut next = robot.clone();
    next.step(decision.target, scene, cfg)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLogRow {
    pub t: f64,
    pub decision_target: u32,
    pub decision_source: DecisionSource,
    /// Robot position after this tick.
    pub robot: Vec3,
    pub robot_state: RobotStatus,
    pub d_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub trajectory_id: String,
    pub strategy: StrategyKind,
    pub start_id: u32,
    pub start_position: Vec3,
    /// Time of the first sample; metric times are relative to it.
    pub t0: f64,
    /// Ticks that belong to the recorded stream (the rest freeze the hand).
    pub stream_ticks: usize,
    pub rows: Vec<RunLogRow>,
}

/// The six evaluation metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub trajectory_id: String,
    pub strategy: StrategyKind,
    /// Detection time (s); `None` if the endpoint was never detected.
    pub t_d: Option<f64>,
    /// Arrival time at the endpoint (s); `None` on timeout.
    pub t_r: Option<f64>,
    /// Robot path length (m).
    pub d_r: f64,
    /// Distinct safe points named by decisions.
    pub sp_d: usize,
    /// Distinct safe points the robot arrived at.
    pub sp_r: usize,
    /// Mean robot distance to the human sphere (m).
    pub d_h: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub log: RunLog,
    pub decisions: Vec<Decision>,
}

/// Replays `rec` against `kind`. After the stream ends the hand stays at its
/// last sample until the robot rests at the endpoint or the timeout passes.
pub fn run(
    rec: &TrajectoryRecord,
    kind: StrategyKind,
    scene: &Scene,
    cfg: &SimConfig,
) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let (Some(first), Some(last)) = (rec.samples.first(), rec.samples.last()) else {
        return Err(SimError::InvalidArgument("empty trajectory".into()));
    };
    if scene.position(rec.end_id).is_none() {
        return Err(SimError::InvalidArgument(format!(
            "end point {} not in scene",
            rec.end_id
        )));
    }
    let mut state = StrategyState::with_predictor_config(kind, cfg.params, cfg.predictor, cfg.dt)?;
    let mut robot = RobotState::idle_at(rec.start_id, scene)?;
    let mut log = RunLog {
        trajectory_id: rec.id.clone(),
        strategy: kind,
        start_id: rec.start_id,
        start_position: robot.position,
        t0: first.t,
        stream_ticks: rec.samples.len(),
        rows: Vec::new(),
    };
    let mut decisions = Vec::new();
    let mut tick = |s: &TimedSample, robot: &mut RobotState| -> Result<(), SimError> {
        let d = state.step(s, scene)?;
        robot.step(d.target, scene, cfg)?;
        log.rows.push(RunLogRow {
            t: s.t,
            decision_target: d.target,
            decision_source: d.source,
            robot: robot.position,
            robot_state: robot.status(),
            d_h: distance_to_sphere(&robot.position, scene.human()),
        });
        decisions.push(d);
        Ok(())
    };
    for s in &rec.samples {
        tick(s, &mut robot)?;
    }
    let max_extra = (cfg.timeout_s / cfg.dt).round() as usize;
    for k in 1..=max_extra {
        if robot.status() == RobotStatus::Idle(rec.end_id) {
            break;
        }
        let frozen = TimedSample {
            t: last.t + k as f64 * cfg.dt,
            position: last.position,
            velocity: Vec3::zeros(),
            gaze: last.gaze,
        };
        tick(&frozen, &mut robot)?;
    }
    let metrics = compute_metrics(&log, rec.end_id, scene, cfg.detection)?;
    Ok(RunOutput {
        metrics,
        log,
        decisions,
    })
}

/// Points the robot arrived at, with arrival times, read off the state column.
pub fn arrivals(log: &RunLog) -> Vec<(f64, u32)> {
    let mut out = Vec::new();
    let mut prev = RobotStatus::Idle(log.start_id);
    for row in &log.rows {
        if let RobotStatus::Moving { from, to } = prev {
            let same = matches!(row.robot_state, RobotStatus::Moving { from: f, to: t } if f == from && t == to);
            if !same {
                out.push((row.t, to));
            }
        }
        prev = row.robot_state;
    }
    out
}

pub fn compute_metrics(
    log: &RunLog,
    true_end: u32,
    scene: &Scene,
    rule: DetectionRule,
) -> Result<RunMetrics, SimError> {
    if log.rows.is_empty() {
        return Err(SimError::InvalidArgument("empty run log".into()));
    }
    let rows = &log.rows;
    let detected_at = match rule {
        DetectionRule::First => rows.iter().position(|r| r.decision_target == true_end),
        DetectionRule::Stable => {
            let tail = rows
                .iter()
                .rev()
                .take_while(|r| r.decision_target == true_end)
                .count();
            (tail > 0).then(|| rows.len() - tail)
        }
    };
    let t_d = detected_at.map(|k| rows[k].t - log.t0);
    let reached = arrivals(log);
    let t_r = if log.start_id == true_end {
        Some(0.0)
    } else {
        reached
            .iter()
            .find(|(_, id)| *id == true_end)
            .map(|(t, _)| t - log.t0)
    };
    let mut d_r = 0.0;
    let mut prev = log.start_position;
    for r in rows {
        d_r += (r.robot - prev).norm();
        prev = r.robot;
    }
    let sp_d = rows
        .iter()
        .map(|r| r.decision_target)
        .filter(|id| scene.is_safe_id(*id))
        .collect::<BTreeSet<_>>()
        .len();
    let sp_r = reached
        .iter()
        .map(|(_, id)| *id)
        .filter(|id| scene.is_safe_id(*id))
        .collect::<BTreeSet<_>>()
        .len();
    let d_h = rows.iter().map(|r| r.d_h).sum::<f64>() / rows.len() as f64;
    Ok(RunMetrics {
        trajectory_id: log.trajectory_id.clone(),
        strategy: log.strategy,
        t_d,
        t_r,
        d_r,
        sp_d,
        sp_r,
        d_h,
    })
}

pub const RUN_LOG_HEADER: &str =
    "t_s,decision_target,decision_source,robot_x,robot_y,robot_z,robot_state,d_h_m";

pub fn write_run_log<W: Write>(mut w: W, log: &RunLog) -> std::io::Result<()> {
    writeln!(w, "{RUN_LOG_HEADER}")?;
    for r in &log.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.decision_target,
            r.decision_source,
            r.robot.x,
            r.robot.y,
            r.robot.z,
            r.robot_state,
            r.d_h
        )?;
    }
    Ok(())
}

pub const RUN_METRICS_HEADER: &str =
    "trajectory_id,strategy,T_d_s,T_r_s,D_r_m,SP_d,SP_r,D_h_m,detected_flag,reached_flag";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trajectory_id,
            self.strategy,
            opt(self.t_d),
            opt(self.t_r),
            self.d_r,
            self.sp_d,
            self.sp_r,
            self.d_h,
            self.t_d.is_some() as u8,
            self.t_r.is_some() as u8
        )
    }
}

pub fn write_run_metrics<W: Write>(mut w: W, rows: &[RunMetrics]) -> std::io::Result<()> {
    writeln!(w, "{RUN_METRICS_HEADER}")?;
    for m in rows {
        writeln!(w, "{}", m.csv_row())?;
    }
    Ok(())
}
