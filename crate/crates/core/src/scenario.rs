//! Scenario files (TOML, or JSON with the same structure).
//!
//! ```toml
//! name = "steady-approach"
//! policy = "alg1"          # alg1 | alg2
//! dt_ms = 50
//! duration_ms = 20000
//! seed = 0
//!
//! [base]                   # all optional
//! wheel_offset_radius_cm = 25.0
//! body_diameter_cm = 50.0
//! wheel1_angle_deg = 0.0
//! speed_cm_per_ms = 0.02
//!
//! [sensors]                # all optional
//! beam_half_angle_deg = 15.0
//! noise_cm = 0.0
//!
//! [safety]
//! safe_distance_cm = 50.0
//!
//! [[pedestrians]]
//! radius_cm = 15.0
//! waypoints = [[0, 200.0, 0.0], [5000, 60.0, 0.0]]   # [t_ms, x_cm, y_cm]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Pedestrian, PedestrianScript, SimConfig, Waypoint, DEFAULT_DT_MS, DEFAULT_PEDESTRIAN_RADIUS};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec2};
use crate::kinematics::BaseGeometry;
use crate::policy::PolicyKind;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseOverrides {
    pub wheel_offset_radius_cm: Option<f64>,
    pub wheel_radius_cm: Option<f64>,
    pub body_diameter_cm: Option<f64>,
    pub wheel1_angle_deg: Option<f64>,
    pub speed_cm_per_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorOverrides {
    pub mount_radius_cm: Option<f64>,
    pub first_axis_deg: Option<f64>,
    pub beam_half_angle_deg: Option<f64>,
    pub min_range_cm: Option<f64>,
    pub max_range_cm: Option<f64>,
    pub resolution_cm: Option<f64>,
    pub noise_cm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyOverrides {
    pub safe_distance_cm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmOverrides {
    pub link_length_cm: Option<f64>,
    pub slew_deg_per_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotStart {
    #[serde(default)]
    pub x_cm: f64,
    #[serde(default)]
    pub y_cm: f64,
    #[serde(default)]
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSpec {
    pub radius_cm: Option<f64>,
    /// `[t_ms, x_cm, y_cm]` triples.
    pub waypoints: Vec<[f64; 3]>,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default = "default_dt")]
    pub dt_ms: u32,
    pub duration_ms: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub base: BaseOverrides,
    #[serde(default)]
    pub sensors: SensorOverrides,
    #[serde(default)]
    pub safety: SafetyOverrides,
    #[serde(default)]
    pub arm: ArmOverrides,
    #[serde(default)]
    pub robot: RobotStart,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianSpec>,
}

fn default_policy() -> String {
    "alg1".into()
}

fn default_dt() -> u32 {
    DEFAULT_DT_MS
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub policy: PolicyKind,
    pub config: SimConfig,
    pub duration_ms: u64,
    pub pedestrians: Vec<Pedestrian>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub policy: Option<String>,
    pub dt_ms: Option<u32>,
    pub seed: Option<u64>,
}

impl ScenarioFile {
    pub fn from_toml_str(s: &str) -> std::result::Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    pub fn into_scenario(self, overrides: &Overrides) -> Result<Scenario> {
        let policy: PolicyKind = overrides.policy.as_deref().unwrap_or(&self.policy).parse()?;

        let mut cfg = SimConfig {
            dt_ms: overrides.dt_ms.unwrap_or(self.dt_ms),
            seed: overrides.seed.unwrap_or(self.seed),
            ..SimConfig::default()
        };
        let b = &self.base;
        let mut geometry = match b.wheel1_angle_deg {
            Some(a) => BaseGeometry::with_wheel1_angle(a),
            None => BaseGeometry::default(),
        };
        set(&mut geometry.wheel_offset_radius, b.wheel_offset_radius_cm);
        set(&mut geometry.wheel_radius, b.wheel_radius_cm);
        set(&mut geometry.body_diameter, b.body_diameter_cm);
        cfg.geometry = geometry;
        set(&mut cfg.base_speed, b.speed_cm_per_ms);

        let s = &self.sensors;
        // sensors sit on the rim unless told otherwise
        cfg.sensors.mount_radius = s.mount_radius_cm.unwrap_or(geometry.body_radius());
        set(&mut cfg.sensors.first_axis_deg, s.first_axis_deg);
        set(&mut cfg.sensors.beam_half_angle_deg, s.beam_half_angle_deg);
        set(&mut cfg.sensors.min_range, s.min_range_cm);
        set(&mut cfg.sensors.max_range, s.max_range_cm);
        set(&mut cfg.sensors.resolution, s.resolution_cm);
        set(&mut cfg.sensors.noise_amplitude, s.noise_cm);
        set(&mut cfg.safety.safe_distance, self.safety.safe_distance_cm);
        set(&mut cfg.arm.link_length, self.arm.link_length_cm);
        cfg.arm_slew_deg_per_step = self.arm.slew_deg_per_step;
        cfg.initial_pose = Pose::new(self.robot.x_cm, self.robot.y_cm, self.robot.heading_deg.to_radians());
        cfg.validate()?;

        let pedestrians = self
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| pedestrian(i, p))
            .collect::<Result<Vec<_>>>()?;
        for (index, p) in pedestrians.iter().enumerate() {
            p.validate()?;
            if !p.script.covers(self.duration_ms) {
                return Err(Error::ScriptCoverage {
                    index,
                    start_ms: p.script.start_ms(),
                    end_ms: p.script.end_ms(),
                    duration_ms: self.duration_ms,
                });
            }
        }
        Ok(Scenario {
            name: self.name,
            policy,
            config: cfg,
            duration_ms: self.duration_ms,
            pedestrians,
        })
    }
}

fn set(slot: &mut f64, value: Option<f64>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn pedestrian(index: usize, spec: &PedestrianSpec) -> Result<Pedestrian> {
    let waypoints = spec
        .waypoints
        .iter()
        .map(|[t, x, y]| {
            if !(t.is_finite() && *t >= 0.0 && t.fract() == 0.0) {
                return Err(Error::InvalidScript(format!(
                    "pedestrian {index}: waypoint time {t} is not a whole number of ms"
                )));
            }
            Ok(Waypoint {
                t_ms: *t as u64,
                position: Vec2::new(*x, *y),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let script =
        PedestrianScript::new(waypoints).map_err(|e| Error::InvalidScript(format!("pedestrian {index}: {e}")))?;
    Ok(Pedestrian {
        radius: spec.radius_cm.unwrap_or(DEFAULT_PEDESTRIAN_RADIUS),
        script,
    })
}

/// Reads a scenario file; `.json` files are parsed as JSON, anything else as TOML.
pub fn load_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        ScenarioFile::from_json_str(&text)
    } else {
        ScenarioFile::from_toml_str(&text)
    };
    parsed.map_err(|message| Error::Parse {
        path: PathBuf::from(path),
        message,
    })
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    load_file(path)?.into_scenario(overrides)
}
