//! Online sliding-window hand-motion prediction.
//!
//! Each axis gets a two-channel GP over the window timestamps: one channel
//! regresses position, the other velocity, both sharing the axis'
//! hyperparameters. The forecast at horizon `h` is the latent position at
//! the newest sample plus the velocity predicted at the horizon timestamp
//! times `h·δt`. A position-only GP evaluated directly at the horizon is the
//! baseline.

use std::collections::VecDeque;
use std::iter::Sum;
use std::ops::Div;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{
    fit, fit_shared, optimize_joint, Backend, Bounds, FittedChannel, GpError, KernelParams,
    OptimizerSettings, TrainingSet,
};
use crate::scene::{GazeRay, Vec3};

pub const SAMPLE_RATE_HZ: f64 = 34.0;
pub const DEFAULT_DT: f64 = 1.0 / SAMPLE_RATE_HZ;
/// Consecutive samples may deviate from δt by this fraction.
pub const SPACING_TOL: f64 = 0.1;
/// Position and velocity noise standard deviation (m, m/s).
pub const DEFAULT_NOISE_STD: f64 = 0.003;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("sample at t={got} does not follow t={prev}")]
    OutOfOrder { prev: f64, got: f64 },
    #[error("sample spacing {gap} s deviates from δt={dt} s by more than 10%")]
    IrregularSpacing { gap: f64, dt: f64 },
    #[error("predictor not ready: window not yet full")]
    NotReady,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// One tracker tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub gaze: Option<GazeRay>,
}

impl TimedSample {
    pub fn new(t: f64, position: Vec3, velocity: Vec3) -> Self {
        Self {
            t,
            position,
            velocity,
            gaze: None,
        }
    }
}

/// Replaces velocities with central differences of position (one-sided at
/// the ends). Used for streams that carry positions only.
pub fn estimate_velocities(samples: &mut [TimedSample]) {
    let n = samples.len();
    if n < 2 {
        if let Some(s) = samples.first_mut() {
            s.velocity = Vec3::zeros();
        }
        return;
    }
    let pos: Vec<(f64, Vec3)> = samples.iter().map(|s| (s.t, s.position)).collect();
    for (i, s) in samples.iter_mut().enumerate() {
        let (a, b) = match i {
            0 => (0, 1),
            i if i == n - 1 => (n - 2, n - 1),
            i => (i - 1, i + 1),
        };
        s.velocity = (pos[b].1 - pos[a].1) / (pos[b].0 - pos[a].0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowStatus {
    Filling,
    Full,
}

/// FIFO of the most recent `capacity` samples.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    dt: f64,
    buf: VecDeque<TimedSample>,
}

impl SlidingWindow {
    pub fn new(capacity: usize, dt: f64) -> Result<Self, PredictorError> {
        if capacity < 2 || !(dt > 0.0 && dt.is_finite()) {
            return Err(PredictorError::InvalidArgument(format!(
                "window needs capacity >= 2 and dt > 0 (got {capacity}, {dt})"
            )));
        }
        Ok(Self {
            capacity,
            dt,
            buf: VecDeque::with_capacity(capacity + 1),
        })
    }

    /// Window covering `seconds` at sampling period `dt`.
    pub fn from_seconds(seconds: f64, dt: f64) -> Result<Self, PredictorError> {
        Self::new((seconds / dt).round() as usize, dt)
    }

    pub fn push(&mut self, s: TimedSample) -> Result<WindowStatus, PredictorError> {
        if !s.t.is_finite() {
            return Err(PredictorError::InvalidArgument(format!("non-finite timestamp {}", s.t)));
        }
        if let Some(last) = self.buf.back() {
            let gap = s.t - last.t;
            if gap <= 0.0 {
                return Err(PredictorError::OutOfOrder {
                    prev: last.t,
                    got: s.t,
                });
            }
            if (gap - self.dt).abs() > SPACING_TOL * self.dt {
                return Err(PredictorError::IrregularSpacing { gap, dt: self.dt });
            }
        }
        self.buf.push_back(s);
        if self.buf.len() > self.capacity {
            self.buf.pop_front();
        }
        Ok(self.status())
    }

    pub fn status(&self) -> WindowStatus {
        if self.buf.len() == self.capacity {
            WindowStatus::Full
        } else {
            WindowStatus::Filling
        }
    }

    pub fn is_full(&self) -> bool {
        self.status() == WindowStatus::Full
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &TimedSample> {
        self.buf.iter()
    }

    pub fn first(&self) -> Option<&TimedSample> {
        self.buf.front()
    }

    pub fn last(&self) -> Option<&TimedSample> {
        self.buf.back()
    }

    /// Time between the oldest and newest buffered sample.
    pub fn span(&self) -> f64 {
        match (self.buf.front(), self.buf.back()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// GP inputs (seconds since the oldest sample) and per-axis positions
    /// and velocities.
    fn training_data(&self) -> (Vec<f64>, [Vec<f64>; 3], [Vec<f64>; 3]) {
        let t0 = self.buf.front().map_or(0.0, |s| s.t);
        let x = self.buf.iter().map(|s| s.t - t0).collect();
        let pos = std::array::from_fn(|a| self.buf.iter().map(|s| s.position[a]).collect());
        let vel = std::array::from_fn(|a| self.buf.iter().map(|s| s.velocity[a]).collect());
        (x, pos, vel)
    }
}

/// Lookahead expressed as a percentage of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub fraction_pct: f64,
    pub steps: usize,
}

impl Horizon {
    /// `steps = round(fraction · w)`, at least one.
    pub fn new(fraction_pct: f64, window_capacity: usize) -> Result<Self, PredictorError> {
        if !(fraction_pct > 0.0 && fraction_pct.is_finite()) {
            return Err(PredictorError::InvalidArgument(format!(
                "horizon fraction must be positive, got {fraction_pct}"
            )));
        }
        let steps = ((fraction_pct / 100.0) * window_capacity as f64).round().max(1.0) as usize;
        Ok(Self {
            fraction_pct,
            steps,
        })
    }

    pub fn from_steps(steps: usize) -> Self {
        Self {
            fraction_pct: f64::NAN,
            steps: steps.max(1),
        }
    }
}

/// How the two channels of an axis get their hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelCoupling {
    /// One parameter set maximizing the summed likelihood of both channels.
    Joint,
    /// Each channel optimized on its own.
    PerChannel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorConfig {
    /// Starting point for the first full window.
    pub init: KernelParams,
    pub bounds: Bounds,
    pub backend: Backend,
    pub coupling: ChannelCoupling,
    /// Start each tick's search from the previous optimum.
    pub warm_start: bool,
    pub optimizer: OptimizerSettings,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            init: KernelParams {
                sigma_f: 1.0,
                length_scale: 0.5,
                sigma_n: DEFAULT_NOISE_STD,
            },
            bounds: Bounds::default(),
            backend: Backend::hodlr(),
            coupling: ChannelCoupling::Joint,
            warm_start: true,
            optimizer: OptimizerSettings::default(),
        }
    }
}

/// Forecast hand state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub t_pred: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Per-axis predictive variance of `position` (latent, m²).
    pub variance: Vec3,
}

#[derive(Debug, Clone)]
pub struct AxisModel {
    pub position: FittedChannel,
    pub velocity: FittedChannel,
}

impl AxisModel {
    pub fn log_likelihood(&self) -> f64 {
        self.position.log_marginal_likelihood() + self.velocity.log_marginal_likelihood()
    }
}

/// Two-channel (position, velocity) model for each of x, y, z.
#[derive(Debug, Clone)]
pub struct EgpModel {
    axes: [AxisModel; 3],
    t0: f64,
    t_last: f64,
    dt: f64,
    warnings: usize,
}

impl EgpModel {
    pub fn axes(&self) -> &[AxisModel; 3] {
        &self.axes
    }

    /// Position-channel hyperparameters per axis (equal to the velocity
    /// channel's under joint coupling).
    pub fn params(&self) -> [KernelParams; 3] {
        std::array::from_fn(|a| *self.axes[a].position.params())
    }

    /// Summed log marginal likelihood of all six channels.
    pub fn log_likelihood(&self) -> f64 {
        self.axes.iter().map(AxisModel::log_likelihood).sum()
    }

    /// Number of axes whose hyperparameter search stopped without converging.
    pub fn warnings(&self) -> usize {
        self.warnings
    }

    pub fn t_last(&self) -> f64 {
        self.t_last
    }

    pub fn predict(&self, h: &Horizon) -> Result<Prediction, PredictorError> {
        let lead = h.steps as f64 * self.dt;
        let now = self.t_last - self.t0;
        let mut position = Vec3::zeros();
        let mut velocity = Vec3::zeros();
        let mut variance = Vec3::zeros();
        for (a, axis) in self.axes.iter().enumerate() {
            let (x_now, var_pos) = axis.position.posterior(now)?;
            let (v_h, var_vel) = axis.velocity.posterior(now + lead)?;
            position[a] = x_now + v_h * lead;
            velocity[a] = v_h;
            variance[a] = var_pos + lead * lead * var_vel;
        }
        Ok(Prediction {
            t_pred: self.t_last + lead,
            position,
            velocity,
            variance,
        })
    }
}

fn optimize_axis(
    x: &[f64],
    outputs: &[&[f64]],
    init: KernelParams,
    cfg: &PredictorConfig,
) -> Result<(KernelParams, bool), GpError> {
    let out = optimize_joint(x, outputs, init, cfg.bounds, cfg.backend, &cfg.optimizer)?;
    Ok((out.params, out.warning.is_some()))
}

fn start_params(cfg: &PredictorConfig, warm: Option<&KernelParams>) -> KernelParams {
    match warm {
        Some(p) if cfg.warm_start && cfg.bounds.contains(p) => KernelParams {
            sigma_n: cfg.init.sigma_n,
            ..*p
        },
        _ => cfg.init,
    }
}

/// Fits the two-channel model on a full window. `warm` holds the previous
/// optimum per axis.
pub fn egp_train(
    win: &SlidingWindow,
    cfg: &PredictorConfig,
    warm: Option<&[KernelParams; 3]>,
) -> Result<EgpModel, PredictorError> {
    if !win.is_full() {
        return Err(PredictorError::NotReady);
    }
    let (x, pos, vel) = win.training_data();
    let mut warnings = 0;
    let mut axes = Vec::with_capacity(3);
    for a in 0..3 {
        let init = start_params(cfg, warm.map(|w| &w[a]));
        let axis = match cfg.coupling {
            ChannelCoupling::Joint => {
                let (p, warned) = optimize_axis(&x, &[&pos[a], &vel[a]], init, cfg)?;
                warnings += warned as usize;
                let mut ch = fit_shared(&x, &[&pos[a], &vel[a]], p, cfg.backend)?;
                let velocity = ch.pop().expect("two channels");
                let position = ch.pop().expect("two channels");
                AxisModel { position, velocity }
            }
            ChannelCoupling::PerChannel => {
                let (pp, w1) = optimize_axis(&x, &[&pos[a]], init, cfg)?;
                let (pv, w2) = optimize_axis(&x, &[&vel[a]], init, cfg)?;
                warnings += w1 as usize + w2 as usize;
                AxisModel {
                    position: fit(TrainingSet::new(x.clone(), pos[a].clone())?, pp, cfg.backend)?,
                    velocity: fit(TrainingSet::new(x.clone(), vel[a].clone())?, pv, cfg.backend)?,
                }
            }
        };
        axes.push(axis);
    }
    let axes: [AxisModel; 3] = axes.try_into().map_err(|_| unreachable!()).unwrap();
    Ok(EgpModel {
        axes,
        t0: win.first().expect("full window").t,
        t_last: win.last().expect("full window").t,
        dt: win.dt(),
        warnings,
    })
}

/// `egp_train` followed by a forecast at `h`.
pub fn egp_predict(model: &EgpModel, h: &Horizon) -> Result<Prediction, PredictorError> {
    model.predict(h)
}

/// Position-only GP per axis, evaluated directly at the horizon timestamp.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    axes: [FittedChannel; 3],
    t0: f64,
    t_last: f64,
    dt: f64,
    warnings: usize,
}

impl BaselineModel {
    pub fn axes(&self) -> &[FittedChannel; 3] {
        &self.axes
    }

    pub fn params(&self) -> [KernelParams; 3] {
        std::array::from_fn(|a| *self.axes[a].params())
    }

    pub fn log_likelihood(&self) -> f64 {
        self.axes.iter().map(FittedChannel::log_marginal_likelihood).sum()
    }

    pub fn warnings(&self) -> usize {
        self.warnings
    }

    pub fn predict(&self, h: &Horizon) -> Result<Prediction, PredictorError> {
        let lead = h.steps as f64 * self.dt;
        let at = self.t_last - self.t0 + lead;
        let mut position = Vec3::zeros();
        let mut velocity = Vec3::zeros();
        let mut variance = Vec3::zeros();
        for (a, ch) in self.axes.iter().enumerate() {
            let (m, v) = ch.posterior(at)?;
            position[a] = m;
            variance[a] = v;
            velocity[a] = (m - ch.posterior_mean(at - self.dt)?) / self.dt;
        }
        Ok(Prediction {
            t_pred: self.t_last + lead,
            position,
            velocity,
            variance,
        })
    }
}

pub fn baseline_train(
    win: &SlidingWindow,
    cfg: &PredictorConfig,
    warm: Option<&[KernelParams; 3]>,
) -> Result<BaselineModel, PredictorError> {
    if !win.is_full() {
        return Err(PredictorError::NotReady);
    }
    let (x, pos, _) = win.training_data();
    let mut warnings = 0;
    let mut axes = Vec::with_capacity(3);
    for a in 0..3 {
        let init = start_params(cfg, warm.map(|w| &w[a]));
        let (p, warned) = optimize_axis(&x, &[&pos[a]], init, cfg)?;
        warnings += warned as usize;
        axes.push(fit(TrainingSet::new(x.clone(), pos[a].clone())?, p, cfg.backend)?);
    }
    let axes: [FittedChannel; 3] = axes.try_into().map_err(|_| unreachable!()).unwrap();
    Ok(BaselineModel {
        axes,
        t0: win.first().expect("full window").t,
        t_last: win.last().expect("full window").t,
        dt: win.dt(),
        warnings,
    })
}

/// Trains a single-channel baseline with the given backend and forecasts at `h`.
pub fn baseline_predict(
    win: &SlidingWindow,
    h: &Horizon,
    backend: Backend,
) -> Result<Prediction, PredictorError> {
    let cfg = PredictorConfig {
        backend,
        ..PredictorConfig::default()
    };
    baseline_train(win, &cfg, None)?.predict(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictorKind {
    /// Two-channel position + velocity model.
    Egp,
    /// Position-only model.
    Baseline,
}

#[derive(Debug, Clone)]
enum Trained {
    Egp(EgpModel),
    Baseline(BaselineModel),
}

impl Trained {
    fn params(&self) -> [KernelParams; 3] {
        match self {
            Trained::Egp(m) => m.params(),
            Trained::Baseline(m) => m.params(),
        }
    }

    fn predict(&self, h: &Horizon) -> Result<Prediction, PredictorError> {
        match self {
            Trained::Egp(m) => m.predict(h),
            Trained::Baseline(m) => m.predict(h),
        }
    }

    fn log_likelihood(&self) -> f64 {
        match self {
            Trained::Egp(m) => m.log_likelihood(),
            Trained::Baseline(m) => m.log_likelihood(),
        }
    }
}

/// Stateful predictor for one sample stream: every push onto a full window
/// runs exactly one train + predict cycle.
#[derive(Debug, Clone)]
pub struct OnlinePredictor {
    kind: PredictorKind,
    window: SlidingWindow,
    horizon: Horizon,
    cfg: PredictorConfig,
    model: Option<Trained>,
    last_prediction: Option<Prediction>,
    failures: usize,
}

impl OnlinePredictor {
    pub fn new(
        kind: PredictorKind,
        window: SlidingWindow,
        horizon: Horizon,
        cfg: PredictorConfig,
    ) -> Self {
        Self {
            kind,
            window,
            horizon,
            cfg,
            model: None,
            last_prediction: None,
            failures: 0,
        }
    }

    /// Two-second window, 15% horizon, two-channel model.
    pub fn egp_default() -> Self {
        let window = SlidingWindow::from_seconds(2.0, DEFAULT_DT).expect("valid window");
        let horizon = Horizon::new(15.0, window.capacity()).expect("valid horizon");
        Self::new(PredictorKind::Egp, window, horizon, PredictorConfig::default())
    }

    pub fn kind(&self) -> PredictorKind {
        self.kind
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn is_ready(&self) -> bool {
        self.last_prediction.is_some()
    }

    pub fn last_prediction(&self) -> Option<&Prediction> {
        self.last_prediction.as_ref()
    }

    /// Log marginal likelihood of the most recent model.
    pub fn log_likelihood(&self) -> Option<f64> {
        self.model.as_ref().map(Trained::log_likelihood)
    }

    /// Current hyperparameters per axis.
    pub fn params(&self) -> Option<[KernelParams; 3]> {
        self.model.as_ref().map(Trained::params)
    }

    /// Ticks on which training failed and the previous model was kept.
    pub fn failures(&self) -> usize {
        self.failures
    }

    /// Forecast with the current model at a different horizon.
    pub fn predict_at(&self, h: &Horizon) -> Result<Prediction, PredictorError> {
        self.model.as_ref().ok_or(PredictorError::NotReady)?.predict(h)
    }

    /// Pushes a sample; returns the new forecast once the window is full.
    pub fn push(&mut self, s: TimedSample) -> Result<Option<Prediction>, PredictorError> {
        if self.window.push(s)? == WindowStatus::Filling {
            return Ok(None);
        }
        let warm = self.model.as_ref().map(Trained::params);
        let trained = match self.kind {
            PredictorKind::Egp => egp_train(&self.window, &self.cfg, warm.as_ref()).map(Trained::Egp),
            PredictorKind::Baseline => {
                baseline_train(&self.window, &self.cfg, warm.as_ref()).map(Trained::Baseline)
            }
        };
        match trained.and_then(|m| m.predict(&self.horizon).map(|p| (m, p))) {
            Ok((model, prediction)) => {
                self.model = Some(model);
                self.last_prediction = Some(prediction);
                Ok(Some(prediction))
            }
            Err(PredictorError::Gp(e)) if self.last_prediction.is_some() => {
                self.failures += 1;
                log::warn!("training failed at t={}, keeping previous model: {e}", s.t);
                Ok(self.last_prediction)
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothingMode {
    /// Symmetric window shrinking at the boundaries.
    Centered,
    /// Trailing window over the last `k` values.
    Causal,
}

/// Moving average of odd length `k`; output has the input's length.
pub fn smooth<T>(series: &[T], k: usize, mode: SmoothingMode) -> Result<Vec<T>, PredictorError>
where
    T: Copy + Sum<T> + Div<f64, Output = T>,
{
    if k == 0 || k % 2 == 0 {
        return Err(PredictorError::InvalidArgument(format!(
            "moving-average length must be odd, got {k}"
        )));
    }
    let n = series.len();
    let half = k / 2;
    Ok((0..n)
        .map(|i| {
            let (lo, hi) = match mode {
                SmoothingMode::Centered => {
                    let r = half.min(i).min(n - 1 - i);
                    (i - r, i + r)
                }
                SmoothingMode::Causal => (i.saturating_sub(k - 1), i),
            };
            series[lo..=hi].iter().copied().sum::<T>() / (hi - lo + 1) as f64
        })
        .collect())
}

/// Convenience for smoothing a sequence of predicted positions.
pub fn smooth_positions(
    series: &[Vector3<f64>],
    k: usize,
    mode: SmoothingMode,
) -> Result<Vec<Vector3<f64>>, PredictorError> {
    smooth(series, k, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn stream(n: usize, f: impl Fn(f64) -> (Vec3, Vec3)) -> Vec<TimedSample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * DEFAULT_DT;
                let (p, v) = f(t);
                TimedSample::new(t, p, v)
            })
            .collect()
    }

    fn full_window(samples: &[TimedSample]) -> SlidingWindow {
        let mut w = SlidingWindow::new(samples.len(), DEFAULT_DT).unwrap();
        for s in samples {
            w.push(*s).unwrap();
        }
        w
    }

    #[test]
    fn window_fifo() {
        let mut w = SlidingWindow::new(68, DEFAULT_DT).unwrap();
        let s = stream(69, |t| (Vec3::new(t, 0.0, 0.0), Vec3::x()));
        assert_eq!(w.push(s[0]).unwrap(), WindowStatus::Filling);
        assert_eq!(w.len(), 1);
        for x in &s[1..68] {
            w.push(*x).unwrap();
        }
        assert!(w.is_full());
        assert!((w.span() - 67.0 * DEFAULT_DT).abs() < 1e-9);
        assert_eq!(w.push(s[68]).unwrap(), WindowStatus::Full);
        assert_eq!(w.len(), 68);
        assert_eq!(w.first().unwrap().t, s[1].t);
    }

    #[test]
    fn window_rejects_bad_timestamps() {
        let mut w = SlidingWindow::new(4, DEFAULT_DT).unwrap();
        w.push(TimedSample::new(1.0, Vec3::zeros(), Vec3::zeros())).unwrap();
        assert!(matches!(
            w.push(TimedSample::new(1.0, Vec3::zeros(), Vec3::zeros())),
            Err(PredictorError::OutOfOrder { .. })
        ));
        assert!(matches!(
            w.push(TimedSample::new(1.5, Vec3::zeros(), Vec3::zeros())),
            Err(PredictorError::IrregularSpacing { .. })
        ));
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn horizon_rounding() {
        assert_eq!(Horizon::new(15.0, 68).unwrap().steps, 10);
        assert_eq!(Horizon::new(0.1, 68).unwrap().steps, 1);
        assert_eq!(Horizon::new(20.0, 68).unwrap().steps, 14);
        assert!(Horizon::new(0.0, 68).is_err());
    }

    #[test]
    fn stationary_hand_stays_put() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, DEFAULT_NOISE_STD).unwrap();
        let home = Vec3::new(0.2, 0.5, -0.1);
        let s: Vec<TimedSample> = (0..68)
            .map(|i| {
                let mut n = || noise.sample(&mut rng);
                TimedSample::new(
                    i as f64 * DEFAULT_DT,
                    home + Vec3::new(n(), n(), n()),
                    Vec3::new(n(), n(), n()),
                )
            })
            .collect();
        let w = full_window(&s);
        let h = Horizon::new(15.0, 68).unwrap();
        let m = egp_train(&w, &PredictorConfig::default(), None).unwrap();
        let p = m.predict(&h).unwrap();
        for a in 0..3 {
            assert!((p.position[a] - home[a]).abs() < 3.0 * DEFAULT_NOISE_STD, "{p:?}");
        }
        let b = baseline_predict(&w, &h, Backend::Dense).unwrap();
        for a in 0..3 {
            assert!((b.position[a] - home[a]).abs() < 3.0 * DEFAULT_NOISE_STD, "{b:?}");
        }
    }

    #[test]
    fn constant_velocity_displacement() {
        let s = stream(68, |t| (Vec3::new(0.3 + 0.1 * t, 0.5, 0.0), Vec3::new(0.1, 0.0, 0.0)));
        let w = full_window(&s);
        let h = Horizon::from_steps(10);
        let m = egp_train(&w, &PredictorConfig::default(), None).unwrap();
        let p = m.predict(&h).unwrap();
        let disp = p.position.x - s.last().unwrap().position.x;
        let expected = 0.1 * 10.0 / 34.0;
        assert!((disp - expected).abs() <= 0.2 * expected, "{disp} vs {expected}");
        assert_relative_eq!(p.t_pred, s.last().unwrap().t + 10.0 * DEFAULT_DT);
    }

    #[test]
    fn variance_grows_with_horizon() {
        let s = stream(68, |t| {
            (Vec3::new((2.0 * t).sin() * 0.2, 0.4 * t, 0.1), Vec3::new(0.4 * (2.0 * t).cos(), 0.4, 0.0))
        });
        let w = full_window(&s);
        let m = egp_train(&w, &PredictorConfig::default(), None).unwrap();
        let var = |k| {
            let p = m.predict(&Horizon::from_steps(k)).unwrap();
            p.variance.sum()
        };
        assert!(var(14) >= var(7));
        let mut prev = var(1);
        for k in 2..=17 {
            let v = var(k);
            assert!(v + 1e-12 >= prev, "variance dropped at h={k}");
            prev = v;
        }
    }

    #[test]
    fn joint_coupling_shares_params_and_training_is_deterministic() {
        let s = stream(68, |t| (Vec3::new(t * t * 0.1, 0.2, 0.3), Vec3::new(0.2 * t, 0.0, 0.0)));
        let w = full_window(&s);
        let cfg = PredictorConfig::default();
        let a = egp_train(&w, &cfg, None).unwrap();
        let b = egp_train(&w, &cfg, None).unwrap();
        assert_eq!(a.params(), b.params());
        for axis in a.axes() {
            assert_eq!(axis.position.params(), axis.velocity.params());
        }
        let pa = a.predict(&Horizon::from_steps(10)).unwrap();
        let pb = b.predict(&Horizon::from_steps(10)).unwrap();
        assert_eq!(pa, pb);

        let per = PredictorConfig {
            coupling: ChannelCoupling::PerChannel,
            ..cfg
        };
        assert!(egp_train(&w, &per, None).is_ok());
    }

    #[test]
    fn baseline_far_horizon_reverts_to_zero() {
        let s = stream(68, |_| (Vec3::new(0.5, 0.5, 0.5), Vec3::zeros()));
        let w = full_window(&s);
        let cfg = PredictorConfig {
            bounds: Bounds {
                sigma_f: (1e-3, 1e3),
                length_scale: (1e-3, 1.0),
            },
            ..PredictorConfig::default()
        };
        let m = baseline_train(&w, &cfg, None).unwrap();
        let p = m.predict(&Horizon::from_steps(34 * 60)).unwrap();
        assert!(p.position.norm() < 1e-6, "{p:?}");
    }

    #[test]
    fn online_predictor_waits_for_full_window() {
        let mut op = OnlinePredictor::egp_default();
        let s = stream(70, |t| (Vec3::new(0.1 * t, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0)));
        for x in &s[..67] {
            assert!(op.push(*x).unwrap().is_none());
            assert!(matches!(op.predict_at(op.horizon()), Err(PredictorError::NotReady)));
        }
        for x in &s[67..] {
            assert!(op.push(*x).unwrap().is_some());
            assert_eq!(op.window().len(), 68);
        }
    }

    #[test]
    fn finite_difference_velocities() {
        let mut s = stream(10, |t| (Vec3::new(2.0 * t, -t, 0.5), Vec3::zeros()));
        estimate_velocities(&mut s);
        for x in &s {
            assert_relative_eq!(x.velocity, Vec3::new(2.0, -1.0, 0.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn smoothing() {
        let ramp: Vec<f64> = (0..=20).map(f64::from).collect();
        assert_eq!(smooth(&ramp, 1, SmoothingMode::Centered).unwrap(), ramp);
        let out = smooth(&ramp, 11, SmoothingMode::Centered).unwrap();
        for (a, b) in out.iter().zip(&ramp) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let flat = vec![Vec3::new(1.0, 2.0, 3.0); 15];
        assert_eq!(smooth_positions(&flat, 11, SmoothingMode::Centered).unwrap(), flat);
        let causal = smooth(&ramp, 3, SmoothingMode::Causal).unwrap();
        assert_eq!(causal[0], 0.0);
        assert_eq!(causal[1], 0.5);
        assert_eq!(causal[5], 4.0);
        assert!(smooth(&ramp, 4, SmoothingMode::Centered).is_err());
        assert!(smooth(&ramp, 0, SmoothingMode::Centered).is_err());
    }
}
