//! Synthetic hand trajectories, trajectory files and prediction-error metrics.
//!
//! Hand motion between two cockpit points follows a minimum-jerk profile,
//! padded with idle time before and after, with Gaussian tracker noise. Gaze
//! jumps from the start point to the target a little before the hand moves.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{estimate_velocities, TimedSample, DEFAULT_NOISE_STD, SAMPLE_RATE_HZ};
use crate::scene::{GazeRay, Scene, Vec3};

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: u64, msg: impl Into<String>) -> TrajError {
    TrajError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceLabel {
    Long,
    Medium,
    Short,
}

impl DistanceLabel {
    pub fn name(self) -> &'static str {
        match self {
            DistanceLabel::Long => "long",
            DistanceLabel::Medium => "medium",
            DistanceLabel::Short => "short",
        }
    }
}

impl fmt::Display for DistanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long" => Ok(DistanceLabel::Long),
            "medium" => Ok(DistanceLabel::Medium),
            "short" => Ok(DistanceLabel::Short),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

/// The seven start/end pairs of the evaluation corpus.
pub const CORPUS_PAIRS: [(u32, u32, DistanceLabel); 7] = [
    (2, 11, DistanceLabel::Long),
    (5, 18, DistanceLabel::Long),
    (5, 11, DistanceLabel::Medium),
    (5, 15, DistanceLabel::Medium),
    (12, 15, DistanceLabel::Medium),
    (3, 4, DistanceLabel::Short),
    (17, 16, DistanceLabel::Short),
];

/// One recorded or generated hand stream between two scene points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub id: String,
    pub start_id: u32,
    pub end_id: u32,
    pub label: Option<DistanceLabel>,
    pub seed: Option<u64>,
    /// When the hand starts and stops moving, if known.
    pub motion: Option<(f64, f64)>,
    pub samples: Vec<TimedSample>,
}

impl TrajectoryRecord {
    pub fn has_gaze(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.gaze.is_some())
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Index range of samples inside the motion phase (whole record if unknown).
    pub fn motion_range(&self) -> std::ops::Range<usize> {
        match self.motion {
            Some((t0, t1)) => {
                let a = self.samples.partition_point(|s| s.t < t0 - 1e-9);
                let b = self.samples.partition_point(|s| s.t <= t1 + 1e-9);
                a..b
            }
            None => 0..self.samples.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub long_s: f64,
    pub medium_s: f64,
    pub short_s: f64,
    /// Position (m) and velocity (m/s) noise standard deviation.
    pub noise_std: f64,
    /// How long gaze moves to the target before the hand does (s).
    pub gaze_lead_s: f64,
    pub idle_before_s: f64,
    pub idle_after_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            long_s: 3.5,
            medium_s: 2.5,
            short_s: 1.5,
            noise_std: DEFAULT_NOISE_STD,
            gaze_lead_s: 0.5,
            idle_before_s: 5.0,
            idle_after_s: 0.5,
            rate_hz: SAMPLE_RATE_HZ,
            seed: 42,
        }
    }
}

impl GenParams {
    pub fn duration(&self, label: DistanceLabel) -> f64 {
        match label {
            DistanceLabel::Long => self.long_s,
            DistanceLabel::Medium => self.medium_s,
            DistanceLabel::Short => self.short_s,
        }
    }

    pub fn validate(&self) -> Result<(), TrajError> {
        let durations = [self.long_s, self.medium_s, self.short_s];
        let ok = durations.iter().all(|d| *d > 0.0 && d.is_finite())
            && self.noise_std >= 0.0
            && self.noise_std.is_finite()
            && self.gaze_lead_s >= 0.0
            && self.idle_before_s >= 0.0
            && self.idle_after_s >= 0.0
            && self.rate_hz > 0.0
            && self.rate_hz.is_finite();
        if ok {
            Ok(())
        } else {
            Err(TrajError::InvalidArgument(format!("{self:?}")))
        }
    }
}

/// Minimum-jerk position and velocity at time `t` of a `duration`-second move
/// from `a` to `b`; clamped outside `[0, duration]`.
pub fn min_jerk_at(a: &Vec3, b: &Vec3, duration: f64, t: f64) -> (Vec3, Vec3) {
    let tau = (t / duration).clamp(0.0, 1.0);
    let (t2, t3) = (tau * tau, tau * tau * tau);
    let s = t3 * (10.0 - 15.0 * tau + 6.0 * t2);
    let ds = 30.0 * t2 * (1.0 - tau) * (1.0 - tau) / duration;
    let d = b - a;
    if tau >= 1.0 {
        return (*b, Vec3::zeros());
    }
    (a + d * s, d * ds)
}

/// Minimum-jerk move sampled at `rate` Hz from `t = 0` through `t = duration`.
pub fn min_jerk(a: &Vec3, b: &Vec3, duration: f64, rate: f64) -> Result<Vec<(Vec3, Vec3)>, TrajError> {
    if !(duration > 0.0 && duration.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return Err(TrajError::InvalidArgument(format!(
            "need duration > 0 and rate > 0 (got {duration}, {rate})"
        )));
    }
    let n = (duration * rate + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| min_jerk_at(a, b, duration, k as f64 / rate))
        .collect())
}

/// Gaze from `head` at the first sample's position until `lead` seconds
/// before `motion_start`, at `target` from then on.
pub fn synth_gaze(
    samples: &mut [TimedSample],
    head: &Vec3,
    target: &Vec3,
    motion_start: f64,
    lead: f64,
) -> Result<(), TrajError> {
    if !(lead >= 0.0) {
        return Err(TrajError::InvalidArgument(format!("negative gaze lead {lead}")));
    }
    let Some(start) = samples.first().map(|s| s.position) else {
        return Ok(());
    };
    let bad = |e| TrajError::InvalidArgument(format!("gaze target: {e}"));
    let to_start = GazeRay::towards(*head, start).map_err(bad)?;
    let to_target = GazeRay::towards(*head, *target).map_err(bad)?;
    let switch = motion_start - lead;
    for s in samples.iter_mut() {
        s.gaze = Some(if s.t >= switch - 1e-9 { to_target } else { to_start });
    }
    Ok(())
}

/// One idle–move–idle record between two scene points.
pub fn gen_record(
    scene: &Scene,
    start_id: u32,
    end_id: u32,
    label: DistanceLabel,
    params: &GenParams,
    rng: &mut ChaCha8Rng,
) -> Result<TrajectoryRecord, TrajError> {
    params.validate()?;
    let missing = |id| TrajError::InvalidArgument(format!("point {id} not in scene"));
    let a = scene.position(start_id).ok_or_else(|| missing(start_id))?;
    let b = scene.position(end_id).ok_or_else(|| missing(end_id))?;
    let duration = params.duration(label);
    let dt = 1.0 / params.rate_hz;
    let t0 = params.idle_before_s;
    let t1 = t0 + duration;
    let n = ((t1 + params.idle_after_s) * params.rate_hz + 1e-9).floor() as usize + 1;
    let noise = Normal::new(0.0, params.noise_std)
        .map_err(|e| TrajError::InvalidArgument(e.to_string()))?;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let (mut pos, mut vel) = min_jerk_at(&a, &b, duration, t - t0);
        if params.noise_std > 0.0 && k > 0 && k + 1 < n {
            pos += Vec3::from_fn(|_, _| noise.sample(rng));
            vel += Vec3::from_fn(|_, _| noise.sample(rng));
        }
        samples.push(TimedSample::new(t, pos, vel));
    }
    synth_gaze(&mut samples, &scene.default_head(), &b, t0, params.gaze_lead_s)?;
    Ok(TrajectoryRecord {
        id: format!("{start_id}-{end_id}"),
        start_id,
        end_id,
        label: Some(label),
        seed: Some(params.seed),
        motion: Some((t0, t1)),
        samples,
    })
}

/// Generates one record per pair; record `i` draws from stream `i` of the
/// seeded generator, so records are independent of each other's length.
pub fn gen_corpus(
    scene: &Scene,
    pairs: &[(u32, u32, DistanceLabel)],
    params: &GenParams,
) -> Result<Vec<TrajectoryRecord>, TrajError> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b, label))| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            gen_record(scene, a, b, label, params, &mut rng)
        })
        .collect()
}

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t_s",
    "hand_x_m",
    "hand_y_m",
    "hand_z_m",
    "hand_vx_mps",
    "hand_vy_mps",
    "hand_vz_mps",
    "gaze_ox_m",
    "gaze_oy_m",
    "gaze_oz_m",
    "gaze_dx",
    "gaze_dy",
    "gaze_dz",
];

/// File name used for a record inside a corpus directory.
pub fn record_file_name(rec: &TrajectoryRecord) -> String {
    format!("traj_{}_{}.csv", rec.start_id, rec.end_id)
}

pub fn write_csv<W: Write>(w: W, rec: &TrajectoryRecord) -> Result<(), TrajError> {
    let mut w = io::BufWriter::new(w);
    writeln!(w, "# trajectory_id={}", rec.id)?;
    writeln!(w, "# start_id={}", rec.start_id)?;
    writeln!(w, "# end_id={}", rec.end_id)?;
    match rec.seed {
        Some(s) => writeln!(w, "# seed={s}")?,
        None => writeln!(w, "# seed=")?,
    }
    if let Some(l) = rec.label {
        writeln!(w, "# label={l}")?;
    }
    if let Some((a, b)) = rec.motion {
        writeln!(w, "# motion_start_s={a}")?;
        writeln!(w, "# motion_end_s={b}")?;
    }
    let mut out = csv::WriterBuilder::new().from_writer(w);
    out.write_record(TRAJECTORY_HEADER).map_err(csv_io)?;
    for s in &rec.samples {
        let mut row: Vec<String> = [s.t]
            .iter()
            .chain(s.position.iter())
            .chain(s.velocity.iter())
            .map(|v| v.to_string())
            .collect();
        match s.gaze {
            Some(g) => row.extend(
                g.origin
                    .iter()
                    .chain(g.direction().iter())
                    .map(|v| v.to_string()),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        out.write_record(&row).map_err(csv_io)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> TrajError {
    TrajError::Io(io::Error::other(e))
}

pub fn write_csv_file(path: impl AsRef<Path>, rec: &TrajectoryRecord) -> Result<(), TrajError> {
    write_csv(fs::File::create(path)?, rec)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<TrajectoryRecord, TrajError> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut rec = parse_csv(&text)?;
    if rec.id.is_empty() {
        rec.id = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(rec)
}

/// Parses a trajectory file. Velocity columns may be absent or empty (they
/// are then estimated from positions); gaze columns may be absent or empty.
pub fn parse_csv(text: &str) -> Result<TrajectoryRecord, TrajError> {
    let mut meta = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some(body) = line.strip_prefix('#') else {
            continue;
        };
        if let Some((k, v)) = body.trim().split_once('=') {
            meta.insert(k.trim().to_string(), (i as u64 + 1, v.trim().to_string()));
        }
    }
    let need_id = |key: &str| -> Result<u32, TrajError> {
        let (line, v) = meta
            .get(key)
            .ok_or_else(|| parse_err(1, format!("missing '# {key}=' header")))?;
        v.parse()
            .map_err(|_| parse_err(*line, format!("bad {key} {v:?}")))
    };
    let start_id = need_id("start_id")?;
    let end_id = need_id("end_id")?;
    let opt_f64 = |key: &str| -> Result<Option<f64>, TrajError> {
        match meta.get(key) {
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| parse_err(*line, format!("bad {key} {v:?}"))),
            None => Ok(None),
        }
    };
    let seed = match meta.get("seed") {
        Some((_, v)) if v.is_empty() => None,
        Some((line, v)) => Some(
            v.parse()
                .map_err(|_| parse_err(*line, format!("bad seed {v:?}")))?,
        ),
        None => None,
    };
    let label = match meta.get("label") {
        Some((line, v)) => Some(v.parse().map_err(|e: String| parse_err(*line, e))?),
        None => None,
    };
    let motion = match (opt_f64("motion_start_s")?, opt_f64("motion_end_s")?) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let header_line = header.position().map_or(1, |p| p.line());
    let cols = header.len();
    if ![4, 7, 13].contains(&cols)
        || header.iter().zip(TRAJECTORY_HEADER).any(|(a, b)| a.trim() != b)
    {
        return Err(parse_err(
            header_line,
            format!("header must be a prefix of {}", TRAJECTORY_HEADER.join(",")),
        ));
    }

    let mut samples: Vec<TimedSample> = Vec::new();
    let mut need_velocity = cols < 7;
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != cols {
            return Err(parse_err(
                line,
                format!("expected {cols} fields, found {}", row.len()),
            ));
        }
        let mut vals = [None; 13];
        for (j, field) in row.iter().enumerate() {
            let f = field.trim();
            if !f.is_empty() {
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_err(line, format!("column {}: bad number {f:?}", TRAJECTORY_HEADER[j])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("column {}: non-finite", TRAJECTORY_HEADER[j])));
                }
                vals[j] = Some(v);
            }
        }
        let req = |j: usize| vals[j].ok_or_else(|| parse_err(line, format!("missing {}", TRAJECTORY_HEADER[j])));
        let t = req(0)?;
        let position = Vec3::new(req(1)?, req(2)?, req(3)?);
        if let Some(prev) = samples.last() {
            if !(t > prev.t) {
                return Err(parse_err(line, format!("timestamp {t} does not follow {}", prev.t)));
            }
        }
        let velocity = match (vals[4], vals[5], vals[6]) {
            (Some(x), Some(y), Some(z)) => Vec3::new(x, y, z),
            (None, None, None) => {
                need_velocity = true;
                Vec3::zeros()
            }
            _ => return Err(parse_err(line, "partial velocity")),
        };
        let gaze = if vals[7..13].iter().all(Option::is_some) {
            let g: Vec<f64> = vals[7..13].iter().map(|v| v.unwrap()).collect();
            Some(
                GazeRay::new(Vec3::new(g[0], g[1], g[2]), Vec3::new(g[3], g[4], g[5]))
                    .map_err(|e| parse_err(line, e.to_string()))?,
            )
        } else if vals[7..13].iter().all(Option::is_none) {
            None
        } else {
            return Err(parse_err(line, "partial gaze ray"));
        };
        samples.push(TimedSample {
            t,
            position,
            velocity,
            gaze,
        });
    }
    if samples.is_empty() {
        return Err(parse_err(header_line, "no samples"));
    }
    if need_velocity {
        estimate_velocities(&mut samples);
    }
    Ok(TrajectoryRecord {
        id: meta.get("trajectory_id").map(|(_, v)| v.clone()).unwrap_or_default(),
        start_id,
        end_id,
        label,
        seed,
        motion,
        samples,
    })
}

/// Result of a MAPE computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    /// Percentage over the retained elements (NaN if none retained).
    pub value: f64,
    pub used: usize,
    /// Elements skipped because `|actual|` was below the floor.
    pub excluded: usize,
}

/// Mean absolute percentage error, skipping elements whose actual value is
/// exactly zero.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<Mape, TrajError> {
    mape_with_floor(pred, actual, 0.0)
}

/// MAPE over elements with `|actual| > floor`.
pub fn mape_with_floor(pred: &[f64], actual: &[f64], floor: f64) -> Result<Mape, TrajError> {
    if pred.len() != actual.len() {
        return Err(TrajError::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            actual.len()
        )));
    }
    let (mut sum, mut used) = (0.0, 0);
    for (p, a) in pred.iter().zip(actual) {
        if a.abs() > floor {
            sum += ((p - a) / a).abs();
            used += 1;
        }
    }
    let value = if used > 0 {
        100.0 * sum / used as f64
    } else {
        f64::NAN
    };
    Ok(Mape {
        value,
        used,
        excluded: pred.len() - used,
    })
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64, TrajError> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(TrajError::InvalidArgument(format!(
            "need equal non-empty lengths (got {} and {})",
            pred.len(),
            actual.len()
        )));
    }
    let ss: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}
