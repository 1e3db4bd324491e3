//! Target-selection strategies STA–STF.
//!
//! Each tick maps the hand state (and, for the gaze variants, the gaze ray) to
//! the point the robot should bring the prop to. GP variants forecast the hand
//! with the two-channel predictor and fall back to their non-GP counterpart
//! until the window has filled.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{
    Horizon, OnlinePredictor, PredictorConfig, PredictorError, PredictorKind, SlidingWindow,
    TimedSample, DEFAULT_DT,
};
use crate::scene::{
    gaze_select, nearest_point, nearest_safe_point, GazeRay, Scene, SceneError, Vec3,
};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("invalid strategy parameters: {0}")]
    InvalidParams(String),
    #[error("unknown strategy {0:?} (expected STA..STF)")]
    UnknownStrategy(String),
    #[error("sample at t={got} does not follow t={prev}")]
    OutOfOrder { prev: f64, got: f64 },
    #[error("{0} needs a gaze ray on every sample")]
    MissingGaze(StrategyKind),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Nearest point to the hand.
    Sta,
    /// Nearest point to the forecast hand.
    Stb,
    /// Nearest point within `r`, otherwise a safe point.
    Stc,
    /// STC with a forecast second chance.
    Std,
    /// Gaze preselection with a safe-point fallback.
    Ste,
    /// STE with a forecast second chance.
    Stf,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Sta,
        StrategyKind::Stb,
        StrategyKind::Stc,
        StrategyKind::Std,
        StrategyKind::Ste,
        StrategyKind::Stf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Sta => "STA",
            StrategyKind::Stb => "STB",
            StrategyKind::Stc => "STC",
            StrategyKind::Std => "STD",
            StrategyKind::Ste => "STE",
            StrategyKind::Stf => "STF",
        }
    }

    pub fn uses_prediction(self) -> bool {
        matches!(self, StrategyKind::Stb | StrategyKind::Std | StrategyKind::Stf)
    }

    pub fn uses_gaze(self) -> bool {
        matches!(self, StrategyKind::Ste | StrategyKind::Stf)
    }

    /// Whether decisions may name safe points.
    pub fn uses_safe_points(self) -> bool {
        !matches!(self, StrategyKind::Sta | StrategyKind::Stb)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| StrategyError::UnknownStrategy(s.to_string()))
    }
}

/// Which position STC's safe-point fallback is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafePointReference {
    /// Safe point nearest the hand.
    Hand,
    /// Safe point nearest the hand's nearest interaction point.
    NearestPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    /// Hand distance threshold (m).
    pub r: f64,
    /// Scaling applied to distances before comparing with `r`.
    pub alpha: f64,
    /// Predictor window (s).
    pub window_s: f64,
    /// Forecast horizon as a percentage of the window.
    pub horizon_pct: f64,
    pub stc_reference: SafePointReference,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            r: 0.2,
            alpha: 0.8,
            window_s: 2.0,
            horizon_pct: 15.0,
            stc_reference: SafePointReference::Hand,
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<(), StrategyError> {
        let ok = self.r > 0.0
            && self.r.is_finite()
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.window_s > 0.0
            && self.window_s.is_finite()
            && self.horizon_pct > 0.0
            && self.horizon_pct <= 50.0;
        if ok {
            Ok(())
        } else {
            Err(StrategyError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, StrategyError> {
        let p: Self =
            serde_json::from_str(s).map_err(|e| StrategyError::InvalidParams(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionSource {
    RealHand,
    GpPrediction,
    Gaze,
    SafePointFallback,
}

impl DecisionSource {
    pub fn name(self) -> &'static str {
        match self {
            DecisionSource::RealHand => "RealHand",
            DecisionSource::GpPrediction => "GpPrediction",
            DecisionSource::Gaze => "Gaze",
            DecisionSource::SafePointFallback => "SafePointFallback",
        }
    }
}

impl fmt::Display for DecisionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecisionSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            DecisionSource::RealHand,
            DecisionSource::GpPrediction,
            DecisionSource::Gaze,
            DecisionSource::SafePointFallback,
        ]
        .into_iter()
        .find(|d| d.name() == s)
        .ok_or_else(|| format!("unknown decision source {s:?}"))
    }
}

/// Desired point for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub t: f64,
    pub target: u32,
    pub source: DecisionSource,
    pub hand: Vec3,
    /// Forecast hand position, once the predictor is ready.
    pub predicted: Option<Vec3>,
}

impl Decision {
    fn new(t: f64, target: u32, source: DecisionSource, hand: Vec3) -> Self {
        Self {
            t,
            target,
            source,
            hand,
            predicted: None,
        }
    }

    fn with_prediction(mut self, p: Option<&Vec3>) -> Self {
        self.predicted = p.copied();
        self
    }
}

fn nn(pos: &Vec3, scene: &Scene) -> (u32, Vec3) {
    let p = nearest_point(pos, scene.points()).expect("scene has interaction points");
    (p.id, p.pos)
}

fn nearest_sp(pos: &Vec3, scene: &Scene) -> u32 {
    nearest_safe_point(pos, scene.safe_points())
        .expect("scene has safe points")
        .id
}

pub fn sta_nn(t: f64, hand: &Vec3, scene: &Scene) -> Decision {
    Decision::new(t, nn(hand, scene).0, DecisionSource::RealHand, *hand)
}

/// Nearest point to the forecast; STA while no forecast exists.
pub fn stb_gp_nn(t: f64, hand: &Vec3, predicted: Option<&Vec3>, scene: &Scene) -> Decision {
    match predicted {
        Some(p) => Decision::new(t, nn(p, scene).0, DecisionSource::GpPrediction, *hand)
            .with_prediction(predicted),
        None => sta_nn(t, hand, scene),
    }
}

pub fn stc_safe_nn(t: f64, hand: &Vec3, scene: &Scene, params: &StrategyParams) -> Decision {
    let (id, pos) = nn(hand, scene);
    if (pos - hand).norm() < params.r {
        return Decision::new(t, id, DecisionSource::RealHand, *hand);
    }
    let from = match params.stc_reference {
        SafePointReference::Hand => *hand,
        SafePointReference::NearestPoint => pos,
    };
    Decision::new(t, nearest_sp(&from, scene), DecisionSource::SafePointFallback, *hand)
}

pub fn std_safe_gp_nn(
    t: f64,
    hand: &Vec3,
    predicted: Option<&Vec3>,
    scene: &Scene,
    params: &StrategyParams,
) -> Decision {
    let Some(pred) = predicted else {
        return stc_safe_nn(t, hand, scene, params);
    };
    let (id, pos) = nn(hand, scene);
    let out = if params.alpha * (pos - hand).norm() < params.r {
        Decision::new(t, id, DecisionSource::RealHand, *hand)
    } else {
        let (id_hat, pos_hat) = nn(pred, scene);
        if params.alpha * (pos - pred).norm() < params.r {
            Decision::new(t, id_hat, DecisionSource::GpPrediction, *hand)
        } else {
            Decision::new(
                t,
                nearest_sp(&pos_hat, scene),
                DecisionSource::SafePointFallback,
                *hand,
            )
        }
    };
    out.with_prediction(predicted)
}

pub fn ste_gaze_safe_nn(
    t: f64,
    hand: &Vec3,
    ray: &GazeRay,
    scene: &Scene,
    params: &StrategyParams,
) -> Decision {
    let Ok(gz) = gaze_select(ray, scene.points()) else {
        return stc_safe_nn(t, hand, scene, params);
    };
    if params.alpha * (gz.pos - hand).norm() < params.r {
        Decision::new(t, gz.id, DecisionSource::Gaze, *hand)
    } else {
        Decision::new(
            t,
            nearest_sp(&gz.pos, scene),
            DecisionSource::SafePointFallback,
            *hand,
        )
    }
}

/// Gaze check first, then the forecast; STE while no forecast exists. With no
/// point in front of the user only the forecast branch remains.
pub fn stf_gaze_safe_gp_nn(
    t: f64,
    hand: &Vec3,
    predicted: Option<&Vec3>,
    ray: &GazeRay,
    scene: &Scene,
    params: &StrategyParams,
) -> Decision {
    let Some(pred) = predicted else {
        return ste_gaze_safe_nn(t, hand, ray, scene, params);
    };
    if let Ok(gz) = gaze_select(ray, scene.points()) {
        if params.alpha * (gz.pos - hand).norm() < params.r {
            return Decision::new(t, gz.id, DecisionSource::Gaze, *hand).with_prediction(predicted);
        }
    }
    let (id, pos) = nn(pred, scene);
    let out = if params.alpha * (pos - pred).norm() < params.r {
        Decision::new(t, id, DecisionSource::GpPrediction, *hand)
    } else {
        Decision::new(t, nearest_sp(&pos, scene), DecisionSource::SafePointFallback, *hand)
    };
    out.with_prediction(predicted)
}

/// Per-stream strategy state: the predictor for GP variants and the last
/// accepted timestamp.
#[derive(Debug, Clone)]
pub struct StrategyState {
    kind: StrategyKind,
    params: StrategyParams,
    predictor: Option<OnlinePredictor>,
    last_t: Option<f64>,
}

impl StrategyState {
    pub fn new(kind: StrategyKind, params: StrategyParams) -> Result<Self, StrategyError> {
        Self::with_predictor_config(kind, params, PredictorConfig::default(), DEFAULT_DT)
    }

    pub fn with_predictor_config(
        kind: StrategyKind,
        params: StrategyParams,
        cfg: PredictorConfig,
        dt: f64,
    ) -> Result<Self, StrategyError> {
        params.validate()?;
        let predictor = if kind.uses_prediction() {
            let window = SlidingWindow::from_seconds(params.window_s, dt)?;
            let horizon = Horizon::new(params.horizon_pct, window.capacity())?;
            Some(OnlinePredictor::new(PredictorKind::Egp, window, horizon, cfg))
        } else {
            None
        };
        Ok(Self {
            kind,
            params,
            predictor,
            last_t: None,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn predictor(&self) -> Option<&OnlinePredictor> {
        self.predictor.as_ref()
    }

    /// Feeds one sample and returns this tick's decision.
    pub fn step(&mut self, s: &TimedSample, scene: &Scene) -> Result<Decision, StrategyError> {
        if let Some(prev) = self.last_t {
            if !(s.t > prev) {
                return Err(StrategyError::OutOfOrder { prev, got: s.t });
            }
        }
        let ray = if self.kind.uses_gaze() {
            Some(s.gaze.ok_or(StrategyError::MissingGaze(self.kind))?)
        } else {
            None
        };
        let predicted = match self.predictor.as_mut() {
            Some(p) => match p.push(*s) {
                Ok(pred) => pred.map(|p| p.position),
                // First training failed outright: keep falling back.
                Err(PredictorError::Gp(e)) => {
                    log::warn!("predictor unavailable at t={}: {e}", s.t);
                    None
                }
                Err(e) => return Err(e.into()),
            },
            None => None,
        };
        self.last_t = Some(s.t);
        let (t, hand, p) = (s.t, &s.position, &self.params);
        let pred = predicted.as_ref();
        Ok(match self.kind {
            StrategyKind::Sta => sta_nn(t, hand, scene),
            StrategyKind::Stb => stb_gp_nn(t, hand, pred, scene),
            StrategyKind::Stc => stc_safe_nn(t, hand, scene, p),
            StrategyKind::Std => std_safe_gp_nn(t, hand, pred, scene, p),
            StrategyKind::Ste => ste_gaze_safe_nn(t, hand, ray.as_ref().unwrap(), scene, p),
            StrategyKind::Stf => stf_gaze_safe_gp_nn(t, hand, pred, ray.as_ref().unwrap(), scene, p),
        })
    }
}

pub const DECISION_LOG_HEADER: &str =
    "t_s,strategy,target_id,source,hand_x,hand_y,hand_z,pred_x,pred_y,pred_z";

/// Writes decisions as CSV; forecast columns stay empty before the predictor
/// is ready.
pub fn write_decision_log<W: Write>(
    mut w: W,
    kind: StrategyKind,
    decisions: &[Decision],
) -> std::io::Result<()> {
    writeln!(w, "{DECISION_LOG_HEADER}")?;
    for d in decisions {
        write!(
            w,
            "{},{},{},{},{},{},{}",
            d.t, kind, d.target, d.source, d.hand.x, d.hand.y, d.hand.z
        )?;
        match d.predicted {
            Some(p) => writeln!(w, ",{},{},{}", p.x, p.y, p.z)?,
            None => writeln!(w, ",,,")?,
        }
    }
    Ok(())
}
