//! Experiment drivers behind the command-line tool: corpus generation,
//! window and horizon benchmarks, single runs and strategy comparisons.
//!
//! Every report starts with `# key=value` lines carrying the crate version,
//! the seed and a hash of the configuration that produced it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gp::Backend;
use crate::predictor::{
    Horizon, OnlinePredictor, PredictorConfig, PredictorError, PredictorKind, SlidingWindow,
    DEFAULT_DT,
};
use crate::scene::{Scene, SceneError, Vec3};
use crate::simulator::{self, DetectionRule, RunMetrics, SimConfig, SimError};
use crate::strategies::{StrategyError, StrategyKind, StrategyParams};
use crate::trajgen::{
    self, mape_with_floor, record_file_name, rmse, DistanceLabel, GenParams, TrajError,
    TrajectoryRecord, CORPUS_PAIRS,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GPINTENT_THREADS";
/// Displacements smaller than this (m) are left out of MAPE.
pub const MAPE_FLOOR_M: f64 = 0.01;
/// Timed cycles discarded at the start of every benchmark pass.
pub const WARMUP_CYCLES: usize = 2;
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl HarnessError {
    /// Process exit code: 2 usage, 3 I/O, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Numerical(_) => 4,
        }
    }
}

impl From<io::Error> for HarnessError {
    fn from(e: io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<TrajError> for HarnessError {
    fn from(e: TrajError) -> Self {
        match e {
            TrajError::InvalidArgument(m) => HarnessError::Usage(m),
            e => HarnessError::Io(e.to_string()),
        }
    }
}

impl From<PredictorError> for HarnessError {
    fn from(e: PredictorError) -> Self {
        match e {
            PredictorError::Gp(e) => HarnessError::Numerical(e.to_string()),
            e => HarnessError::Usage(e.to_string()),
        }
    }
}

impl From<StrategyError> for HarnessError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Predictor(e) => e.into(),
            e => HarnessError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Strategy(e) => e.into(),
            e => HarnessError::Usage(e.to_string()),
        }
    }
}

/// Scene from a JSON file, or the built-in cockpit when `path` is `None`.
pub fn load_scene(path: Option<&Path>) -> Result<Scene, HarnessError> {
    match path {
        None => Ok(Scene::default_cockpit()),
        Some(p) => Scene::load(p).map_err(|e| match e {
            SceneError::Io(e) => HarnessError::Usage(format!("scene {}: {e}", p.display())),
            e => HarnessError::Usage(format!("scene {}: {e}", p.display())),
        }),
    }
}

/// Thread pool sized by `GPINTENT_THREADS` (all cores when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| HarnessError::Usage(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| HarnessError::Io(e.to_string()))
}

/// First 16 hex digits of the SHA-256 of a configuration description.
pub fn config_hash(description: &str) -> String {
    let digest = Sha256::digest(description.as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// `# key=value` preamble shared by all reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportHeader {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// Extra entries in insertion order.
    pub extra: Vec<(String, String)>,
}

impl ReportHeader {
    pub fn new(command: &str, seed: u64, description: &str) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            config_hash: config_hash(description),
            extra: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# command={}", self.command)?;
        writeln!(w, "# version={}", self.version)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# config_hash={}", self.config_hash)?;
        for (k, v) in &self.extra {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }

    fn parse(lines: &[(usize, &str)]) -> Result<Self, String> {
        let mut map: Vec<(String, String)> = Vec::new();
        for (n, l) in lines {
            let body = l.trim_start_matches('#').trim();
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| format!("line {n}: expected '# key=value'"))?;
            map.push((k.to_string(), v.to_string()));
        }
        let mut take = |key: &str| -> Result<String, String> {
            let i = map
                .iter()
                .position(|(k, _)| k == key)
                .ok_or_else(|| format!("missing '# {key}=' header"))?;
            Ok(map.remove(i).1)
        };
        let command = take("command")?;
        let version = take("version")?;
        let seed = take("seed")?
            .parse()
            .map_err(|_| "bad seed header".to_string())?;
        let config_hash = take("config_hash")?;
        Ok(Self {
            command,
            version,
            seed,
            config_hash,
            extra: map,
        })
    }
}

/// Predictor variants compared by the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    /// Position-only GP, dense Cholesky, cold start every cycle.
    Basic,
    /// Position-only GP, hierarchical solver, warm start.
    Holrd,
    /// Two-channel position + velocity GP, hierarchical solver, warm start.
    Egp,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Basic => "basic",
            Algo::Holrd => "holrd",
            Algo::Egp => "egp",
        }
    }

    pub fn kind(self) -> PredictorKind {
        match self {
            Algo::Egp => PredictorKind::Egp,
            _ => PredictorKind::Baseline,
        }
    }

    pub fn config(self) -> PredictorConfig {
        match self {
            Algo::Basic => PredictorConfig {
                backend: Backend::Dense,
                warm_start: false,
                ..PredictorConfig::default()
            },
            Algo::Holrd | Algo::Egp => PredictorConfig::default(),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(Algo::Basic),
            "holrd" | "hodlr" => Ok(Algo::Holrd),
            "egp" => Ok(Algo::Egp),
            other => Err(HarnessError::Usage(format!(
                "unknown algorithm {other:?} (expected basic, holrd, egp)"
            ))),
        }
    }
}

/// Parses a comma-separated list with `parse` on each element.
pub fn parse_list<T, E: fmt::Display>(
    s: &str,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<Vec<T>, HarnessError> {
    let items: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| parse(x).map_err(|e| HarnessError::Usage(format!("{x:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(HarnessError::Usage(format!("empty list {s:?}")));
    }
    Ok(items)
}

// ---------------------------------------------------------------------------
// Corpus files

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub trajectory_id: String,
    pub file: String,
    pub start_id: u32,
    pub end_id: u32,
    pub label: Option<DistanceLabel>,
    pub duration_s: f64,
}

/// Generates the seven-trajectory corpus into `out_dir` and returns the
/// manifest entries.
pub fn cmd_gen(
    scene: &Scene,
    params: &GenParams,
    out_dir: &Path,
) -> Result<Vec<ManifestEntry>, HarnessError> {
    let recs = trajgen::gen_corpus(scene, &CORPUS_PAIRS, params)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut entries = Vec::new();
    for rec in &recs {
        let file = record_file_name(rec);
        let path = out_dir.join(&file);
        trajgen::write_csv_file(&path, rec)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        entries.push(ManifestEntry {
            trajectory_id: rec.id.clone(),
            file,
            start_id: rec.start_id,
            end_id: rec.end_id,
            label: rec.label,
            duration_s: rec.motion.map_or(rec.duration(), |(a, b)| b - a),
        });
    }
    let mut buf = Vec::new();
    ReportHeader::new("gen", params.seed, &format!("{params:?}|{}", scene.to_json())).write(&mut buf)?;
    writeln!(buf, "trajectory_id,file,start_id,end_id,label,duration_s")?;
    for e in &entries {
        writeln!(
            buf,
            "{},{},{},{},{},{}",
            e.trajectory_id,
            e.file,
            e.start_id,
            e.end_id,
            e.label.map(|l| l.to_string()).unwrap_or_default(),
            e.duration_s
        )?;
    }
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, buf).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(entries)
}

/// Reads the corpus listed in `dir/manifest.csv`, or every `traj_*.csv` in
/// name order when there is no manifest.
pub fn load_corpus(dir: &Path) -> Result<Vec<TrajectoryRecord>, HarnessError> {
    let manifest = dir.join(MANIFEST_FILE);
    let files: Vec<PathBuf> = if manifest.exists() {
        let text = fs::read_to_string(&manifest)?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        lines.next();
        lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .nth(1)
                    .map(|f| dir.join(f))
                    .ok_or_else(|| HarnessError::Io(format!("malformed manifest line {l:?}")))
            })
            .collect::<Result<_, _>>()?
    } else {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("traj_") && n.ends_with(".csv"))
            })
            .collect();
        v.sort();
        v
    };
    if files.is_empty() {
        return Err(HarnessError::Io(format!("no trajectories in {}", dir.display())));
    }
    files
        .iter()
        .map(|p| {
            trajgen::read_csv_file(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Benchmarks

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Window,
    Horizon,
}

impl BenchKind {
    fn name(self) -> &'static str {
        match self {
            BenchKind::Window => "window_s",
            BenchKind::Horizon => "horizon_pct",
        }
    }
}

/// One (window or horizon) × algorithm cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub key: f64,
    pub algo: Algo,
    /// Mean train + predict time (ms).
    pub time_ms: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub mape: Option<f64>,
    pub rmse: Option<f64>,
    /// Number of cycles (timing/LL) or forecasts (errors) behind the cell.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub header: ReportHeader,
    pub kind: BenchKind,
    pub reps: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, key: f64, algo: Algo) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.key == key && r.algo == algo)
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        self.header.write(&mut w)?;
        writeln!(w, "# reps={}", self.reps)?;
        writeln!(w, "{},algo,time_ms,log_likelihood,mape,rmse,n", self.kind.name())?;
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.key,
                r.algo,
                o(r.time_ms),
                o(r.log_likelihood),
                o(r.mape),
                o(r.rmse),
                r.n
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let bad = |n: usize, m: String| HarnessError::Io(format!("report line {n}: {m}"));
        let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
        let (comments, body): (Vec<_>, Vec<_>) = lines.into_iter().partition(|(_, l)| l.starts_with('#'));
        let mut header = ReportHeader::parse(&comments).map_err(|m| bad(1, m))?;
        let reps_at = header
            .extra
            .iter()
            .position(|(k, _)| k == "reps")
            .ok_or_else(|| bad(1, "missing reps".into()))?;
        let reps = header.extra.remove(reps_at).1.parse().map_err(|_| bad(1, "bad reps".into()))?;
        let mut body = body.into_iter().filter(|(_, l)| !l.trim().is_empty());
        let (n0, cols) = body.next().ok_or_else(|| bad(1, "missing column header".into()))?;
        let kind = match cols.split(',').next() {
            Some("window_s") => BenchKind::Window,
            Some("horizon_pct") => BenchKind::Horizon,
            _ => return Err(bad(n0, format!("unexpected columns {cols:?}"))),
        };
        let mut rows = Vec::new();
        for (n, l) in body {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(bad(n, format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<Option<f64>, HarnessError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad(n, format!("bad number {s:?}")))
                }
            };
            rows.push(BenchRow {
                key: num(f[0])?.ok_or_else(|| bad(n, "missing key".into()))?,
                algo: f[1].parse().map_err(|e: HarnessError| bad(n, e.to_string()))?,
                time_ms: num(f[2])?,
                log_likelihood: num(f[3])?,
                mape: num(f[4])?,
                rmse: num(f[5])?,
                n: f[6].parse().map_err(|_| bad(n, format!("bad count {:?}", f[6])))?,
            });
        }
        Ok(Self {
            header,
            kind,
            reps,
            rows,
        })
    }
}

/// First sample index to feed so that the window is exactly full when the
/// motion phase starts.
fn feed_start(rec: &TrajectoryRecord, capacity: usize) -> usize {
    rec.motion_range().start.saturating_sub(capacity - 1)
}

/// Time and log-likelihood of every cycle whose newest sample lies in the
/// motion phase.
fn window_pass(
    rec: &TrajectoryRecord,
    algo: Algo,
    window_s: f64,
    horizon_pct: f64,
) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let window = SlidingWindow::from_seconds(window_s, DEFAULT_DT)?;
    let cap = window.capacity();
    let horizon = Horizon::new(horizon_pct, cap)?;
    let mut p = OnlinePredictor::new(algo.kind(), window, horizon, algo.config());
    let motion = rec.motion_range();
    let (mut times, mut lls) = (Vec::new(), Vec::new());
    for (i, s) in rec.samples.iter().enumerate().skip(feed_start(rec, cap)) {
        if i >= motion.end {
            break;
        }
        let t = Instant::now();
        let out = p.push(*s)?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        if out.is_some() && i >= motion.start {
            times.push(ms);
            lls.push(p.log_likelihood().expect("trained model"));
        }
    }
    Ok((times, lls))
}

#[derive(Debug, Clone)]
pub struct WindowBenchConfig {
    pub algos: Vec<Algo>,
    pub windows_s: Vec<f64>,
    pub reps: usize,
    pub horizon_pct: f64,
    pub seed: u64,
}

impl Default for WindowBenchConfig {
    fn default() -> Self {
        Self {
            algos: vec![Algo::Basic, Algo::Holrd, Algo::Egp],
            windows_s: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            reps: 1,
            horizon_pct: 15.0,
            seed: 42,
        }
    }
}

/// Mean cycle time and mean log-likelihood per (window, algorithm) over the
/// motion phase of every record, repeated `reps` times.
pub fn cmd_bench_window(
    corpus: &[TrajectoryRecord],
    cfg: &WindowBenchConfig,
) -> Result<BenchReport, HarnessError> {
    if cfg.reps == 0 {
        return Err(HarnessError::Usage("--reps must be at least 1".into()));
    }
    if let Some(w) = cfg.windows_s.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(HarnessError::Usage(format!("bad window {w}")));
    }
    let cells: Vec<(f64, Algo)> = cfg
        .windows_s
        .iter()
        .flat_map(|w| cfg.algos.iter().map(move |a| (*w, *a)))
        .collect();
    let pool = thread_pool()?;
    let rows: Vec<BenchRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(w, algo)| {
                let (mut times, mut lls) = (Vec::new(), Vec::new());
                for rep in 0..cfg.reps {
                    for rec in corpus {
                        let (t, l) = window_pass(rec, algo, w, cfg.horizon_pct)?;
                        times.extend(t.into_iter().skip(WARMUP_CYCLES));
                        if rep == 0 {
                            lls.extend(l);
                        }
                    }
                }
                Ok(BenchRow {
                    key: w,
                    algo,
                    time_ms: mean(&times),
                    log_likelihood: mean(&lls),
                    mape: None,
                    rmse: None,
                    n: lls.len(),
                })
            })
            .collect::<Result<_, HarnessError>>()
    })?;
    let desc = format!("bench-window|{:?}|{:?}", cfg, cfg.algos.iter().map(|a| a.config()).collect::<Vec<_>>());
    Ok(BenchReport {
        header: ReportHeader::new("bench-window", cfg.seed, &desc),
        kind: BenchKind::Window,
        reps: cfg.reps,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct HorizonBenchConfig {
    pub algos: Vec<Algo>,
    pub horizons_pct: Vec<f64>,
    pub window_s: f64,
    pub seed: u64,
}

impl Default for HorizonBenchConfig {
    fn default() -> Self {
        Self {
            algos: vec![Algo::Holrd, Algo::Egp],
            horizons_pct: vec![5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0],
            window_s: 2.0,
            seed: 42,
        }
    }
}

/// Forecast errors per (horizon, algorithm). Each motion-phase cycle trains
/// once and forecasts at every horizon; the forecast is scored against the
/// recorded sample that many steps later. MAPE is taken per axis on the
/// displacement from the oldest window sample, skipping displacements under
/// [`MAPE_FLOOR_M`]; RMSE is on raw coordinates.
pub fn cmd_bench_horizon(
    corpus: &[TrajectoryRecord],
    cfg: &HorizonBenchConfig,
) -> Result<BenchReport, HarnessError> {
    if let Some(h) = cfg.horizons_pct.iter().find(|h| !(**h > 0.0 && **h <= 50.0)) {
        return Err(HarnessError::Usage(format!("horizon {h}% outside (0, 50]")));
    }
    let window = SlidingWindow::from_seconds(cfg.window_s, DEFAULT_DT)?;
    let cap = window.capacity();
    let horizons: Vec<Horizon> = cfg
        .horizons_pct
        .iter()
        .map(|h| Horizon::new(*h, cap))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(Algo, usize)> = cfg
        .algos
        .iter()
        .flat_map(|a| (0..corpus.len()).map(move |r| (*a, r)))
        .collect();
    type Errors = Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)>;
    let pool = thread_pool()?;
    let per_job: Vec<Errors> = pool.install(|| {
        jobs.par_iter()
            .map(|&(algo, r)| -> Result<Errors, HarnessError> {
                let rec = &corpus[r];
                let mut p = OnlinePredictor::new(algo.kind(), window.clone(), horizons[0], algo.config());
                let mut out: Errors = vec![Default::default(); horizons.len()];
                let motion = rec.motion_range();
                for (i, s) in rec.samples.iter().enumerate().skip(feed_start(rec, cap)) {
                    if i >= motion.end {
                        break;
                    }
                    if p.push(*s)?.is_none() || i < motion.start {
                        continue;
                    }
                    let base = p.window().first().expect("full window").position;
                    for (k, h) in horizons.iter().enumerate() {
                        let Some(actual) = rec.samples.get(i + h.steps) else {
                            continue;
                        };
                        let pred = p.predict_at(h)?;
                        for a in 0..3 {
                            out[k].0.push(pred.position[a] - base[a]);
                            out[k].1.push(actual.position[a] - base[a]);
                            out[k].2.push(pred.position[a]);
                            out[k].3.push(actual.position[a]);
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()
    })?;
    let mut rows = Vec::new();
    for (k, h) in cfg.horizons_pct.iter().enumerate() {
        for algo in &cfg.algos {
            let (mut pd, mut ad, mut pr, mut ac) = (vec![], vec![], vec![], vec![]);
            for (j, (a, _)) in jobs.iter().enumerate() {
                if a == algo {
                    let e = &per_job[j][k];
                    pd.extend(&e.0);
                    ad.extend(&e.1);
                    pr.extend(&e.2);
                    ac.extend(&e.3);
                }
            }
            let m = mape_with_floor(&pd, &ad, MAPE_FLOOR_M)?;
            let r = if pr.is_empty() { None } else { Some(rmse(&pr, &ac)?) };
            rows.push(BenchRow {
                key: *h,
                algo: *algo,
                time_ms: None,
                log_likelihood: None,
                mape: m.value.is_finite().then_some(m.value),
                rmse: r,
                n: m.used,
            });
        }
    }
    let desc = format!("bench-horizon|{:?}|{:?}", cfg, cfg.algos.iter().map(|a| a.config()).collect::<Vec<_>>());
    Ok(BenchReport {
        header: ReportHeader::new("bench-horizon", cfg.seed, &desc),
        kind: BenchKind::Horizon,
        reps: 1,
        rows,
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sd(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

// ---------------------------------------------------------------------------
// Simulation

/// Simulation settings as read from a `--params` JSON file. Every field is
/// optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub r: f64,
    pub alpha: f64,
    pub window_s: f64,
    pub horizon_pct: f64,
    pub stc_reference: crate::strategies::SafePointReference,
    pub v_free: f64,
    pub v_interior: f64,
    pub detection: DetectionRule,
    pub timeout_s: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        let s = StrategyParams::default();
        let c = SimConfig::default();
        Self {
            r: s.r,
            alpha: s.alpha,
            window_s: s.window_s,
            horizon_pct: s.horizon_pct,
            stc_reference: s.stc_reference,
            v_free: c.v_free,
            v_interior: c.v_interior,
            detection: c.detection,
            timeout_s: c.timeout_s,
        }
    }
}

impl RunParams {
    pub fn load(path: Option<&Path>) -> Result<Self, HarnessError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("params {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Usage(format!("params {}: {e}", path.display())))
    }

    pub fn sim_config(&self) -> Result<SimConfig, HarnessError> {
        let cfg = SimConfig {
            params: StrategyParams {
                r: self.r,
                alpha: self.alpha,
                window_s: self.window_s,
                horizon_pct: self.horizon_pct,
                stc_reference: self.stc_reference,
            },
            v_free: self.v_free,
            v_interior: self.v_interior,
            detection: self.detection,
            timeout_s: self.timeout_s,
            ..SimConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn require_gaze(rec: &TrajectoryRecord, kind: StrategyKind) -> Result<(), HarnessError> {
    if kind.uses_gaze() && !rec.has_gaze() {
        return Err(HarnessError::Usage(format!(
            "{kind} needs gaze columns gaze_ox_m,gaze_oy_m,gaze_oz_m,gaze_dx,gaze_dy,gaze_dz on every row of trajectory {:?}",
            rec.id
        )));
    }
    Ok(())
}

/// Runs one strategy on one trajectory and writes `metrics.csv`,
/// `run_log.csv` and `decisions.csv` into `out_dir`.
pub fn cmd_simulate(
    rec: &TrajectoryRecord,
    kind: StrategyKind,
    scene: &Scene,
    params: &RunParams,
    seed: u64,
    out_dir: &Path,
) -> Result<RunMetrics, HarnessError> {
    require_gaze(rec, kind)?;
    let cfg = params.sim_config()?;
    let out = simulator::run(rec, kind, scene, &cfg)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", out_dir.display())))?;
    let header = ReportHeader::new(
        "simulate",
        seed,
        &format!("{kind}|{}|{params:?}|{}", rec.id, scene.to_json()),
    );
    let mut buf = Vec::new();
    header.write(&mut buf)?;
    simulator::write_run_metrics(&mut buf, std::slice::from_ref(&out.metrics))?;
    fs::write(out_dir.join("metrics.csv"), buf)?;
    let mut buf = Vec::new();
    header.write(&mut buf)?;
    simulator::write_run_log(&mut buf, &out.log)?;
    fs::write(out_dir.join("run_log.csv"), buf)?;
    let mut buf = Vec::new();
    header.write(&mut buf)?;
    crate::strategies::write_decision_log(&mut buf, kind, &out.decisions)?;
    fs::write(out_dir.join("decisions.csv"), buf)?;
    Ok(out.metrics)
}

/// Metric columns of the comparison tables.
pub const METRICS: [&str; 6] = ["T_d_s", "T_r_s", "D_r_m", "SP_d", "SP_r", "D_h_m"];

fn metric_value(m: &RunMetrics, name: &str) -> Option<f64> {
    match name {
        "T_d_s" => m.t_d,
        "T_r_s" => m.t_r,
        "D_r_m" => Some(m.d_r),
        "SP_d" => Some(m.sp_d as f64),
        "SP_r" => Some(m.sp_r as f64),
        "D_h_m" => Some(m.d_h),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Runs contributing (undetected / unreached runs are left out of the
    /// time metrics).
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub header: ReportHeader,
    pub strategies: Vec<StrategyKind>,
    /// Per-run metrics, strategy-major in corpus order.
    pub runs: Vec<RunMetrics>,
    pub summary: BTreeMap<(StrategyKind, &'static str), MetricSummary>,
}

impl CompareReport {
    pub fn mean(&self, kind: StrategyKind, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|((k, m), _)| *k == kind && *m == metric)
            .and_then(|(_, s)| s.mean)
    }

    fn table<W: Write>(&self, mut w: W, metrics: &[&str]) -> io::Result<()> {
        self.header.write(&mut w)?;
        writeln!(w, "strategy,{}", metrics.join(","))?;
        for k in &self.strategies {
            let cells: Vec<String> = metrics
                .iter()
                .map(|m| {
                    let s = &self.summary[&(*k, METRICS.iter().find(|x| *x == m).copied().unwrap())];
                    match (s.mean, s.sd) {
                        (Some(a), Some(b)) => format!("{a:.2}({b:.2})"),
                        _ => String::new(),
                    }
                })
                .collect();
            writeln!(w, "{k},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Writes `runs.csv`, `summary.csv`, `efficiency.csv`, `safety.csv` and
    /// one `plot_<metric>.csv` per metric.
    pub fn write_dir(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        let mut buf = Vec::new();
        self.header.write(&mut buf)?;
        simulator::write_run_metrics(&mut buf, &self.runs)?;
        fs::write(dir.join("runs.csv"), buf)?;

        let mut buf = Vec::new();
        self.header.write(&mut buf)?;
        writeln!(buf, "strategy,metric,mean,sd,n")?;
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for k in &self.strategies {
            for m in METRICS {
                let s = &self.summary[&(*k, m)];
                writeln!(buf, "{k},{m},{},{},{}", o(s.mean), o(s.sd), s.n)?;
            }
        }
        fs::write(dir.join("summary.csv"), buf)?;

        let mut buf = Vec::new();
        self.table(&mut buf, &METRICS[..3])?;
        fs::write(dir.join("efficiency.csv"), buf)?;
        let mut buf = Vec::new();
        self.table(&mut buf, &METRICS[3..])?;
        fs::write(dir.join("safety.csv"), buf)?;

        let ids: Vec<&str> = {
            let mut seen = Vec::new();
            for r in &self.runs {
                if !seen.contains(&r.trajectory_id.as_str()) {
                    seen.push(r.trajectory_id.as_str());
                }
            }
            seen
        };
        for m in METRICS {
            let mut buf = Vec::new();
            self.header.write(&mut buf)?;
            let names: Vec<String> = self.strategies.iter().map(|k| k.to_string()).collect();
            writeln!(buf, "trajectory_id,{}", names.join(","))?;
            for id in &ids {
                let cells: Vec<String> = self
                    .strategies
                    .iter()
                    .map(|k| {
                        self.runs
                            .iter()
                            .find(|r| r.strategy == *k && r.trajectory_id == *id)
                            .and_then(|r| metric_value(r, m))
                            .map(|v| v.to_string())
                            .unwrap_or_default()
                    })
                    .collect();
                writeln!(buf, "{id},{}", cells.join(","))?;
            }
            fs::write(dir.join(format!("plot_{m}.csv")), buf)?;
        }
        Ok(())
    }
}

/// Runs every strategy on every record and summarizes each metric as
/// mean and sample standard deviation.
pub fn cmd_compare(
    corpus: &[TrajectoryRecord],
    strategies: &[StrategyKind],
    scene: &Scene,
    params: &RunParams,
    seed: u64,
) -> Result<CompareReport, HarnessError> {
    if strategies.is_empty() {
        return Err(HarnessError::Usage("empty strategy list".into()));
    }
    for k in strategies {
        for rec in corpus {
            require_gaze(rec, *k)?;
        }
    }
    let cfg = params.sim_config()?;
    let jobs: Vec<(StrategyKind, usize)> = strategies
        .iter()
        .flat_map(|k| (0..corpus.len()).map(move |r| (*k, r)))
        .collect();
    let pool = thread_pool()?;
    let runs: Vec<RunMetrics> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, r)| simulator::run(&corpus[r], k, scene, &cfg).map(|o| o.metrics))
            .collect::<Result<_, _>>()
    })?;
    let mut summary = BTreeMap::new();
    for k in strategies {
        for m in METRICS {
            let vals: Vec<f64> = runs
                .iter()
                .filter(|r| r.strategy == *k)
                .filter_map(|r| metric_value(r, m))
                .collect();
            summary.insert(
                (*k, m),
                MetricSummary {
                    mean: mean(&vals),
                    sd: sd(&vals),
                    n: vals.len(),
                },
            );
        }
    }
    let ids: Vec<&str> = corpus.iter().map(|r| r.id.as_str()).collect();
    let desc = format!("compare|{strategies:?}|{ids:?}|{params:?}|{}", scene.to_json());
    Ok(CompareReport {
        header: ReportHeader::new("compare", seed, &desc),
        strategies: strategies.to_vec(),
        runs,
        summary,
    })
}

/// Hand positions of a record, for plotting or smoothing.
pub fn positions(rec: &TrajectoryRecord) -> Vec<Vec3> {
    rec.samples.iter().map(|s| s.position).collect()
}
