//! Run artifacts.
//!
//! | file            | contents                                                        |
//! |-----------------|-----------------------------------------------------------------|
//! | `trace.jsonl`   | one [`TraceRecord`] per line, serde field order                 |
//! | `trace.csv`     | `step,t_ms,robot_x,robot_y,ped_x,ped_y,dist_cm,arm_reacting,s1..s6` |
//! | `metrics.json`  | [`RunSummary`]                                                  |
//! | `path.csv`      | `step,t_ms,robot_x,robot_y,ped_x,ped_y`                         |
//! | `distance.csv`  | `step,t_ms,dist_cm,clearance_cm,safe_distance_cm`               |
//! | `arm_flag.csv`  | `step,t_ms,arm_reacting`                                        |
//!
//! In the CSV files the pedestrian columns refer to the pedestrian nearest the
//! base, `dist_cm` is center-to-center, `arm_reacting` is `0`/`1`, and an empty
//! cell is an absent value (no pedestrian, or an out-of-range reading).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{SafetyMetrics, TraceRecord};
use crate::error::{Error, Result};
use crate::kinematics::CalibrationSample;

pub const TRACE_JSONL: &str = "trace.jsonl";
pub const TRACE_CSV: &str = "trace.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const PATH_CSV: &str = "path.csv";
pub const DISTANCE_CSV: &str = "distance.csv";
pub const ARM_FLAG_CSV: &str = "arm_flag.csv";

pub const TRACE_CSV_HEADER: [&str; 14] = [
    "step",
    "t_ms",
    "robot_x",
    "robot_y",
    "ped_x",
    "ped_y",
    "dist_cm",
    "arm_reacting",
    "s1",
    "s2",
    "s3",
    "s4",
    "s5",
    "s6",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub policy: String,
    pub dt_ms: u32,
    pub duration_ms: u64,
    pub safe_distance_cm: f64,
    pub metrics: SafetyMetrics,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.into(),
            message: format!("{other:?}"),
        },
    })
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> Result<String> {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trace_jsonl(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(trace_to_jsonl(trace)?.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_trace_jsonl(path: &Path) -> Result<Vec<TraceRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            message: format!("line {}: {e}", i + 1),
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_CSV_HEADER)?;
    for r in trace {
        let ped = r.nearest_position();
        let mut row = vec![
            r.step.to_string(),
            r.t_ms.to_string(),
            r.robot_pose.x.to_string(),
            r.robot_pose.y.to_string(),
            opt(ped.map(|p| p.x)),
            opt(ped.map(|p| p.y)),
            opt(r.center_distance),
            u8::from(r.arm_reacting).to_string(),
        ];
        row.extend(r.readings.iter().map(|s| opt(s.range_cm)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `path.csv`, `distance.csv` and `arm_flag.csv` into `dir`.
pub fn write_plot_data(dir: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut path = csv_writer(&dir.join(PATH_CSV))?;
    let mut dist = csv_writer(&dir.join(DISTANCE_CSV))?;
    let mut arm = csv_writer(&dir.join(ARM_FLAG_CSV))?;
    path.write_record(["step", "t_ms", "robot_x", "robot_y", "ped_x", "ped_y"])?;
    dist.write_record(["step", "t_ms", "dist_cm", "clearance_cm", "safe_distance_cm"])?;
    arm.write_record(["step", "t_ms", "arm_reacting"])?;
    for r in trace {
        let (step, t) = (r.step.to_string(), r.t_ms.to_string());
        let ped = r.nearest_position();
        path.write_record([
            step.clone(),
            t.clone(),
            r.robot_pose.x.to_string(),
            r.robot_pose.y.to_string(),
            opt(ped.map(|p| p.x)),
            opt(ped.map(|p| p.y)),
        ])?;
        dist.write_record([
            step.clone(),
            t.clone(),
            opt(r.center_distance),
            opt(r.clearance),
            r.safe_distance.to_string(),
        ])?;
        arm.write_record([step, t, u8::from(r.arm_reacting).to_string()])?;
    }
    for (w, name) in [
        (&mut path, PATH_CSV),
        (&mut dist, DISTANCE_CSV),
        (&mut arm, ARM_FLAG_CSV),
    ] {
        w.flush().map_err(|e| Error::io(dir.join(name), e))?;
    }
    Ok(())
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

/// Writes every run artifact into `dir`, creating it if needed.
pub fn write_run(dir: &Path, trace: &[TraceRecord], summary: &RunSummary) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trace_jsonl(&dir.join(TRACE_JSONL), trace)?;
    write_trace_csv(&dir.join(TRACE_CSV), trace)?;
    write_plot_data(dir, trace)?;
    write_summary(&dir.join(METRICS_JSON), summary)?;
    Ok([
        TRACE_JSONL,
        TRACE_CSV,
        METRICS_JSON,
        PATH_CSV,
        DISTANCE_CSV,
        ARM_FLAG_CSV,
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect())
}

/// Reads a `dt_ms,dd_cm` calibration table.
pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationSample>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_calibration(f)
}

pub fn parse_calibration(input: impl std::io::Read) -> Result<Vec<CalibrationSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["dt_ms", "dd_cm"] {
        return Err(Error::CalibrationRow {
            line: 1,
            message: format!(
                "expected header `dt_ms,dd_cm`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::CalibrationRow {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let field = |i: usize, name: &str| {
            rec[i].parse::<f64>().map_err(|_| Error::CalibrationRow {
                line,
                message: format!("{name} `{}` is not a number", &rec[i]),
            })
        };
        let sample =
            CalibrationSample::new(field(0, "dt_ms")?, field(1, "dd_cm")?).map_err(|e| Error::CalibrationRow {
                line,
                message: e.to_string(),
            })?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::NoCalibrationSamples);
    }
    Ok(samples)
}
