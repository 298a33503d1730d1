//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 2    | bad command-line usage                    |
//! | 3    | file could not be read or written         |
//! | 4    | scenario or trace could not be parsed     |
//! | 5    | unknown policy                            |
//! | 6    | pedestrian script does not cover the run  |
//! | 7    | invalid configuration or script           |
//! | 8    | calibration data malformed or empty       |
//! | 9    | replayed metrics differ from the original |
//! | 10   | live bridge could not bind its port       |

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::bridge::{self, BridgeConfig, Session, DEFAULT_MAX_STEER_SPEED};
use crate::engine::{compute_metrics, run_scenario, SafetyMetrics};
use crate::error::Error;
use crate::kinematics::calibrate_speed;
use crate::output::{self, RunSummary, METRICS_JSON, TRACE_JSONL};
use crate::policy::PolicyKind;
use crate::scenario::{self, Overrides};

pub const OUT_DIR_ENV: &str = "HRIBENCH_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Usage = 2,
    Io = 3,
    Parse = 4,
    UnknownPolicy = 5,
    Coverage = 6,
    Invalid = 7,
    Calibration = 8,
    ReplayMismatch = 9,
    Bind = 10,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

impl From<&Error> for Exit {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => Exit::Io,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => Exit::Parse,
            Error::UnknownPolicy(_) => Exit::UnknownPolicy,
            Error::ScriptCoverage { .. } => Exit::Coverage,
            Error::NoCalibrationSamples | Error::CalibrationSample(_) | Error::CalibrationRow { .. } => {
                Exit::Calibration
            }
            Error::InvalidConfig(_) | Error::InvalidScript(_) | Error::SensorId(_) | Error::EmptyTrace => Exit::Invalid,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hribench", version, about = "Human-robot interaction safety test bench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace, metrics and plot data.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        policy: Option<String>,
        /// Step length (ms).
        #[arg(long)]
        dt: Option<u32>,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
        /// Seed for the optional sensor noise.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mean base speed from a `dt_ms,dd_cm` table.
    Calibrate { csv: PathBuf },
    /// Recompute metrics from a trace and compare with the stored summary.
    Replay {
        /// `trace.jsonl`, or the run directory containing it.
        trace: PathBuf,
    },
    /// Serve a live session over WebSocket.
    Serve {
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        policy: Option<String>,
        /// Wall-clock tick period (ms); defaults to the scenario step length.
        #[arg(long)]
        tick_ms: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MAX_STEER_SPEED)]
        max_steer_speed: f64,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    Exit::from(e).into()
}

pub fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Run {
            scenario,
            policy,
            dt,
            out,
            seed,
        } => cmd_run(
            &scenario,
            &out,
            Overrides {
                policy,
                dt_ms: dt,
                seed,
            },
        ),
        Command::Calibrate { csv } => cmd_calibrate(&csv),
        Command::Replay { trace } => cmd_replay(&trace),
        Command::Serve {
            scenario,
            port,
            host,
            policy,
            tick_ms,
            max_steer_speed,
        } => cmd_serve(scenario.as_deref(), &host, port, policy, tick_ms, max_steer_speed),
    }
}

pub fn cmd_run(path: &Path, out: &Path, overrides: Overrides) -> ExitCode {
    let result = (|| {
        let s = scenario::load(path, &overrides)?;
        let (trace, metrics) = run_scenario(&s.pedestrians, s.policy, &s.config, s.duration_ms)?;
        let summary = RunSummary {
            scenario: s.name.clone(),
            policy: s.policy.to_string(),
            dt_ms: s.config.dt_ms,
            duration_ms: s.duration_ms,
            safe_distance_cm: s.config.safety.safe_distance,
            metrics,
        };
        output::write_run(out, &trace, &summary)?;
        Ok::<_, Error>((s, trace.len(), metrics))
    })();
    match result {
        Ok((s, steps, m)) => {
            println!(
                "scenario {} ({}): {steps} steps, wrote {}",
                s.name,
                s.policy,
                out.display()
            );
            print_metrics(&m);
            Exit::Ok.into()
        }
        Err(e) => fail(&e),
    }
}

fn print_metrics(m: &SafetyMetrics) {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.1} cm"));
    println!("  min distance       {}", fmt(m.min_distance));
    println!("  min clearance      {}", fmt(m.min_clearance));
    println!(
        "  unsafe dwell       {} ms ({} steps)",
        m.unsafe_dwell_ms, m.unsafe_steps
    );
    println!("  missed detections  {}", m.missed_detections);
    println!("  contact events     {}", m.violations);
}

pub fn cmd_calibrate(path: &Path) -> ExitCode {
    let result = output::read_calibration_csv(path).and_then(|s| calibrate_speed(&s).map(|m| (s, m)));
    match result {
        Ok((samples, mean)) => {
            println!("{:>4}  {:>8}  {:>8}  {:>10}", "row", "dt_ms", "dd_cm", "dv_cm_ms");
            for (i, s) in samples.iter().enumerate() {
                println!("{:>4}  {:>8}  {:>8}  {:>10.4}", i + 1, s.dt_ms, s.dd_cm, s.speed());
            }
            println!(
                "mean speed {mean:.4} cm/ms (~ {mean:.2} cm/ms) over {} runs",
                samples.len()
            );
            Exit::Ok.into()
        }
        Err(e) => fail(&e),
    }
}

pub fn cmd_replay(path: &Path) -> ExitCode {
    let trace_path = if path.is_dir() {
        path.join(TRACE_JSONL)
    } else {
        path.to_path_buf()
    };
    let summary_path = trace_path.with_file_name(METRICS_JSON);
    let result = (|| {
        let trace = output::read_trace_jsonl(&trace_path)?;
        let summary = output::read_summary(&summary_path)?;
        let recomputed = if trace.is_empty() {
            SafetyMetrics::default()
        } else {
            compute_metrics(&trace)?
        };
        Ok::<_, Error>((summary, recomputed))
    })();
    match result {
        Ok((summary, recomputed)) if summary.metrics == recomputed => {
            println!(
                "replay ok: {} records, metrics match {}",
                recomputed.steps,
                summary_path.display()
            );
            Exit::Ok.into()
        }
        Ok((summary, recomputed)) => {
            eprintln!(
                "replay mismatch\n  stored:     {:?}\n  recomputed: {recomputed:?}",
                summary.metrics
            );
            Exit::ReplayMismatch.into()
        }
        Err(e) => fail(&e),
    }
}

pub fn cmd_serve(
    path: Option<&Path>,
    host: &str,
    port: u16,
    policy: Option<String>,
    tick_ms: Option<u64>,
    max_steer_speed: f64,
) -> ExitCode {
    let session = (|| {
        let mut s = match path {
            Some(p) => {
                let sc = scenario::load(
                    p,
                    &Overrides {
                        policy: policy.clone(),
                        ..Overrides::default()
                    },
                )?;
                Session::from_scenario(&sc, max_steer_speed)?
            }
            None => {
                let kind: PolicyKind = policy.as_deref().unwrap_or("alg1").parse()?;
                Session::blank(kind)?
            }
        };
        if !(max_steer_speed.is_finite() && max_steer_speed > 0.0) {
            return Err(Error::InvalidConfig("max steer speed must be > 0".into()));
        }
        // the blank world already uses the default cap
        if path.is_none() && max_steer_speed != DEFAULT_MAX_STEER_SPEED {
            s = Session::new(
                s.config().clone(),
                s.policy(),
                s.initial_world().pedestrians.clone(),
                max_steer_speed,
            )?;
        }
        Ok::<_, Error>(s)
    })();
    let session = match session {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let tick = std::time::Duration::from_millis(tick_ms.unwrap_or(u64::from(session.config().dt_ms)).max(1));

    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return Exit::Io.into();
        }
    };
    rt.block_on(async move {
        let addr = format!("{host}:{port}");
        let listener = match bridge::bind(&addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {addr}: {e}");
                return Exit::Bind.into();
            }
        };
        let handle = match bridge::serve(listener, session, BridgeConfig { tick }) {
            Ok(h) => h,
            Err(e) => {
                eprintln!("error: {e}");
                return Exit::Bind.into();
            }
        };
        println!("listening on {} (ws://{}/ws)", handle.addr, handle.addr);
        tokio::select! {
            r = tokio::signal::ctrl_c() => {
                if let Err(e) = r {
                    eprintln!("error: {e}");
                }
                let _ = handle.shutdown().await;
            }
        }
        Exit::Ok.into()
    })
}
