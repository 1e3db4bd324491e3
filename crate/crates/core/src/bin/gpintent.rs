use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use gpintent::harness::{self, Algo, HarnessError, HorizonBenchConfig, RunParams, WindowBenchConfig};
use gpintent::strategies::StrategyKind;
use gpintent::trajgen::{self, GenParams};

/// Online GP hand-motion prediction and robot target-selection experiments.
///
/// Exit codes: 0 success, 2 usage, 3 I/O, 4 numerical failure.
/// GPINTENT_THREADS caps the number of worker threads.
#[derive(Parser)]
#[command(name = "gpintent", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the seven-trajectory synthetic corpus.
    ///
    /// Writes traj_<start>_<end>.csv files with columns
    /// t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,gaze_ox_m,gaze_oy_m,gaze_oz_m,gaze_dx,gaze_dy,gaze_dz
    /// and manifest.csv with trajectory_id,file,start_id,end_id,label,duration_s.
    Gen {
        /// Scene JSON (built-in cockpit when omitted).
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Time and log-likelihood per window and algorithm.
    ///
    /// Columns: window_s,algo,time_ms,log_likelihood,mape,rmse,n
    BenchWindow {
        #[arg(long, default_value = "basic,holrd,egp")]
        algos: String,
        #[arg(long, default_value = "0.5,1.0,1.5,2.0,2.5,3.0")]
        windows: String,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast MAPE and RMSE per horizon and algorithm.
    ///
    /// Columns: horizon_pct,algo,time_ms,log_likelihood,mape,rmse,n
    BenchHorizon {
        #[arg(long, default_value = "holrd,egp")]
        algos: String,
        /// Horizons in percent of the window.
        #[arg(long, default_value = "5,7.5,10,12.5,15,17.5,20")]
        horizons: String,
        /// Window length (s).
        #[arg(long, default_value_t = 2.0)]
        window: f64,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one strategy on one trajectory.
    ///
    /// Writes metrics.csv (trajectory_id,strategy,T_d_s,T_r_s,D_r_m,SP_d,SP_r,D_h_m),
    /// run_log.csv (t_s,decision_target,decision_source,robot_x,robot_y,robot_z,robot_state,d_h_m)
    /// and decisions.csv into --out-dir; without it the metrics row goes to stdout.
    Simulate {
        /// One of STA, STB, STC, STD, STE, STF.
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        scene: Option<PathBuf>,
        /// JSON with any of r, alpha, window_s, horizon_pct, stc_reference,
        /// v_free, v_interior, detection, timeout_s.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run several strategies on a corpus and summarize as mean(sd).
    ///
    /// Writes summary.csv (strategy,metric,mean,sd,n), efficiency.csv,
    /// safety.csv, runs.csv and plot_<metric>.csv into --out-dir; without it
    /// summary.csv goes to stdout.
    Compare {
        #[arg(long, default_value = "STA,STB,STC,STD,STE,STF")]
        strategies: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display()))),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.cmd {
        Cmd::Gen { scene, seed, out_dir } => {
            let scene = harness::load_scene(scene.as_deref())?;
            let params = GenParams { seed, ..GenParams::default() };
            let entries = harness::cmd_gen(&scene, &params, &out_dir)?;
            log::info!("wrote {} trajectories to {}", entries.len(), out_dir.display());
        }
        Cmd::BenchWindow { algos, windows, reps, corpus, seed, out } => {
            let cfg = WindowBenchConfig {
                algos: harness::parse_list(&algos, Algo::from_str)?,
                windows_s: harness::parse_list(&windows, f64::from_str)?,
                reps,
                seed,
                ..WindowBenchConfig::default()
            };
            let corpus = harness::load_corpus(&corpus)?;
            let rep = harness::cmd_bench_window(&corpus, &cfg)?;
            emit(out.as_ref(), &rep.to_csv_string())?;
        }
        Cmd::BenchHorizon { algos, horizons, window, corpus, seed, out } => {
            let cfg = HorizonBenchConfig {
                algos: harness::parse_list(&algos, Algo::from_str)?,
                horizons_pct: harness::parse_list(&horizons, f64::from_str)?,
                window_s: window,
                seed,
            };
            let corpus = harness::load_corpus(&corpus)?;
            let rep = harness::cmd_bench_horizon(&corpus, &cfg)?;
            emit(out.as_ref(), &rep.to_csv_string())?;
        }
        Cmd::Simulate { strategy, trajectory, scene, params, seed, out_dir } => {
            let kind: StrategyKind = strategy.parse().map_err(|e| HarnessError::Usage(format!("{e}")))?;
            let scene = harness::load_scene(scene.as_deref())?;
            let params = RunParams::load(params.as_deref())?;
            let rec = trajgen::read_csv_file(&trajectory)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", trajectory.display())))?;
            match out_dir {
                Some(dir) => {
                    harness::cmd_simulate(&rec, kind, &scene, &params, seed, &dir)?;
                }
                None => {
                    let dir = std::env::temp_dir().join(format!("gpintent-{}", std::process::id()));
                    harness::cmd_simulate(&rec, kind, &scene, &params, seed, &dir)?;
                    let text = std::fs::read_to_string(dir.join("metrics.csv"))?;
                    let _ = std::fs::remove_dir_all(&dir);
                    emit(None, &text)?;
                }
            }
        }
        Cmd::Compare { strategies, corpus, scene, params, seed, out_dir } => {
            let kinds = harness::parse_list(&strategies, StrategyKind::from_str)?;
            let scene = harness::load_scene(scene.as_deref())?;
            let params = RunParams::load(params.as_deref())?;
            let corpus = harness::load_corpus(&corpus)?;
            let rep = harness::cmd_compare(&corpus, &kinds, &scene, &params, seed)?;
            match out_dir {
                Some(dir) => rep.write_dir(&dir)?,
                None => {
                    let dir = std::env::temp_dir().join(format!("gpintent-{}", std::process::id()));
                    rep.write_dir(&dir)?;
                    let text = std::fs::read_to_string(dir.join("summary.csv"))?;
                    let _ = std::fs::remove_dir_all(&dir);
                    emit(None, &text)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpintent: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
