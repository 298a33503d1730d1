//! The two-servo reactive arm.
//!
//! Servo 1 tilts the arm left/right, servo 2 (mounted on servo 1) tilts it
//! forward/backward. 90 degrees on both is upright, the default posture.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const NEUTRAL_DEG: f64 = 90.0;
pub const SERVO_MIN_DEG: f64 = 0.0;
pub const SERVO_MAX_DEG: f64 = 180.0;

/// Reaction table indexed by sensor id - 1: (servo 1, servo 2, direction).
///
/// Rows 1/6 and 2/5 share servo pairs but carry different direction words;
/// the pair is what drives the arm, the word is kept as printed.
const REACTIONS: [(f64, f64, ArmDirection); 6] = [
    (90.0, 45.0, ArmDirection::Front),
    (90.0, 135.0, ArmDirection::Right),
    (45.0, 90.0, ArmDirection::Left),
    (135.0, 90.0, ArmDirection::Right),
    (90.0, 135.0, ArmDirection::Behind),
    (90.0, 45.0, ArmDirection::Left),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmDirection {
    Front,
    Right,
    Left,
    Behind,
}

impl fmt::Display for ArmDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArmDirection::Front => "Front",
            ArmDirection::Right => "Right",
            ArmDirection::Left => "Left",
            ArmDirection::Behind => "Behind",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArmState")]
pub struct ArmState {
    servo1: f64,
    servo2: f64,
    reacting: bool,
}

#[derive(Deserialize)]
struct RawArmState {
    servo1: f64,
    servo2: f64,
    #[serde(default)]
    #[allow(dead_code)]
    reacting: Option<bool>,
}

impl TryFrom<RawArmState> for ArmState {
    type Error = Error;

    fn try_from(raw: RawArmState) -> Result<Self> {
        ArmState::new(raw.servo1, raw.servo2)
    }
}

impl ArmState {
    pub fn new(servo1: f64, servo2: f64) -> Result<Self> {
        for (name, v) in [("servo1", servo1), ("servo2", servo2)] {
            if !(SERVO_MIN_DEG..=SERVO_MAX_DEG).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} angle {v} outside [0, 180] deg")));
            }
        }
        Ok(Self::new_unchecked(servo1, servo2))
    }

    fn new_unchecked(servo1: f64, servo2: f64) -> Self {
        Self {
            servo1,
            servo2,
            reacting: servo1 != NEUTRAL_DEG || servo2 != NEUTRAL_DEG,
        }
    }

    pub fn servo1(&self) -> f64 {
        self.servo1
    }

    pub fn servo2(&self) -> f64 {
        self.servo2
    }

    pub fn reacting(&self) -> bool {
        self.reacting
    }

    /// Moves each servo toward `target` by at most `max_deg`.
    pub fn step_toward(&self, target: &ArmState, max_deg: f64) -> ArmState {
        let step = |from: f64, to: f64| from + (to - from).clamp(-max_deg, max_deg);
        Self::new_unchecked(step(self.servo1, target.servo1), step(self.servo2, target.servo2))
    }
}

impl Default for ArmState {
    fn default() -> Self {
        default_pose()
    }
}

/// Upright arm.
pub fn default_pose() -> ArmState {
    ArmState::new_unchecked(NEUTRAL_DEG, NEUTRAL_DEG)
}

/// Servo pair assumed when sensor `sensor_id` is stimulated.
pub fn react_to_sensor(sensor_id: u8) -> Result<ArmState> {
    let (s1, s2, _) = reaction_row(sensor_id)?;
    Ok(ArmState::new_unchecked(s1, s2))
}

/// Direction word of the reaction table row for `sensor_id`.
pub fn reaction_direction(sensor_id: u8) -> Result<ArmDirection> {
    reaction_row(sensor_id).map(|r| r.2)
}

fn reaction_row(sensor_id: u8) -> Result<(f64, f64, ArmDirection)> {
    match sensor_id {
        1..=6 => Ok(REACTIONS[usize::from(sensor_id - 1)]),
        _ => Err(Error::SensorId(sensor_id)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    /// Pivot-to-tip length (cm).
    pub link_length: f64,
    pub max_bend_from_vertical_deg: f64,
    /// Disc the tip projection must stay inside (cm).
    pub footprint_diameter: f64,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self {
            link_length: 21.0,
            max_bend_from_vertical_deg: 45.0,
            footprint_diameter: 30.0,
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.link_length > 0.0 && self.footprint_diameter > 0.0) {
            return Err(Error::InvalidConfig("arm lengths must be > 0".into()));
        }
        let reach = self.link_length * self.max_bend_from_vertical_deg.to_radians().sin();
        if reach > self.footprint_diameter / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "arm reach {reach:.3} cm exceeds footprint radius {} cm",
                self.footprint_diameter / 2.0
            )));
        }
        Ok(())
    }
}

/// Horizontal projection of the arm tip in the base frame (x Front, y Left).
///
/// Modelled as a universal joint: servo 1 tilts about the x axis, then servo 2
/// tilts about the (rotated) y axis. Servo 2 below 90 leans Front, servo 1
/// below 90 leans Left.
pub fn tip_offset(state: &ArmState, geom: &ArmGeometry) -> Vec2 {
    let roll = (NEUTRAL_DEG - state.servo1).to_radians();
    let pitch = (NEUTRAL_DEG - state.servo2).to_radians();
    Vec2::new(
        geom.link_length * pitch.sin(),
        geom.link_length * roll.sin() * pitch.cos(),
    )
}
