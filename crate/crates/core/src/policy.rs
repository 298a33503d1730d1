//! The two reactive safety policies as pure state transitions.
//!
//! Both policies escalate in two stages. A reading below the safe distance
//! triggers the first-stage reaction and latches the violating sensor; if a
//! violation is still present on the next step the second stage is added and
//! both stay engaged until every reading clears. The arm-first policy
//! (`alg1`) leans the arm away first and then retreats the base; the
//! base-first policy (`alg2`) does the reverse.
//!
//! The re-check between the stages happens on the following engine step,
//! since re-reading a sensor within one simulated instant cannot change its
//! value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arm::{react_to_sensor, ArmState};
use crate::error::{Error, Result};
use crate::kinematics::{nearest_hex_direction, BaseGeometry, HexDirection};
use crate::sensor::{nearest_violation, Readings, SensorConfig, SENSOR_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Arm first, then base.
    #[serde(rename = "alg1")]
    ArmFirst,
    /// Base first, then arm.
    #[serde(rename = "alg2")]
    BaseFirst,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ArmFirst => "alg1",
            PolicyKind::BaseFirst => "alg2",
        }
    }

    pub fn step(
        self,
        readings: &Readings,
        state: &PolicyState,
        cfg: &SafetyConfig,
        escape: &EscapeTable,
    ) -> (PolicyCommand, PolicyState) {
        match self {
            PolicyKind::ArmFirst => step_algorithm1(readings, state, cfg, escape),
            PolicyKind::BaseFirst => step_algorithm2(readings, state, cfg, escape),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(PolicyKind::ArmFirst),
            "alg2" => Ok(PolicyKind::BaseFirst),
            other => Err(Error::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    /// Readings strictly below this (cm) count as a violation.
    pub safe_distance: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self { safe_distance: 50.0 }
    }
}

impl SafetyConfig {
    pub fn validate(&self, sensors: &SensorConfig) -> Result<()> {
        if !(self.safe_distance > sensors.min_range && self.safe_distance <= sensors.max_range) {
            return Err(Error::InvalidConfig(format!(
                "safe distance {} must lie in ({}, {}]",
                self.safe_distance, sensors.min_range, sensors.max_range
            )));
        }
        Ok(())
    }
}

/// What the policy asks for this step. A missing arm target means the arm is
/// (or returns to) its default posture; a missing base direction means the
/// base stays put.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyCommand {
    pub arm: Option<ArmState>,
    pub base: Option<HexDirection>,
}

impl PolicyCommand {
    pub const HOLD: PolicyCommand = PolicyCommand { arm: None, base: None };

    pub fn is_hold(&self) -> bool {
        self.arm.is_none() && self.base.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Idle,
    /// Arm-first: arm leaned, base not yet moving.
    ArmReacted,
    /// Arm-first: arm latched and base retreating.
    BaseEngaged,
    /// Base-first: base retreating, arm still upright.
    BaseReacted,
    /// Base-first: base retreating and arm latched.
    ArmEngaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PolicyState {
    pub phase: Phase,
    pub latched_sensor: Option<u8>,
}

impl PolicyState {
    pub const IDLE: PolicyState = PolicyState {
        phase: Phase::Idle,
        latched_sensor: None,
    };

    fn latched(phase: Phase, sensor: u8) -> Self {
        Self {
            phase,
            latched_sensor: Some(sensor),
        }
    }
}

/// Escape direction per sensor, resolved once for a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscapeTable([HexDirection; SENSOR_COUNT]);

impl EscapeTable {
    pub fn new(geometry: &BaseGeometry, sensors: &SensorConfig) -> Self {
        Self(std::array::from_fn(|i| resolve_escape(i as u8 + 1, geometry, sensors)))
    }

    pub fn get(&self, sensor_id: u8) -> Result<HexDirection> {
        match sensor_id {
            1..=6 => Ok(self.0[usize::from(sensor_id - 1)]),
            _ => Err(Error::SensorId(sensor_id)),
        }
    }
}

fn resolve_escape(sensor_id: u8, geometry: &BaseGeometry, sensors: &SensorConfig) -> HexDirection {
    nearest_hex_direction(sensors.axis_angle(sensor_id) + std::f64::consts::PI, geometry)
}

/// Hex direction closest to the reverse of sensor `sensor_id`'s axis.
pub fn escape_direction(sensor_id: u8, geometry: &BaseGeometry, sensors: &SensorConfig) -> Result<HexDirection> {
    match sensor_id {
        1..=6 => Ok(resolve_escape(sensor_id, geometry, sensors)),
        _ => Err(Error::SensorId(sensor_id)),
    }
}

fn arm_for(sensor: u8) -> ArmState {
    // latched ids always come from a 1..=6 reading
    react_to_sensor(sensor).unwrap_or_default()
}

fn base_for(sensor: u8, escape: &EscapeTable) -> HexDirection {
    escape.0[usize::from(sensor - 1)]
}

/// Arm-first policy.
pub fn step_algorithm1(
    readings: &Readings,
    state: &PolicyState,
    cfg: &SafetyConfig,
    escape: &EscapeTable,
) -> (PolicyCommand, PolicyState) {
    let Some((violator, _)) = nearest_violation(readings, cfg.safe_distance) else {
        return (PolicyCommand::HOLD, PolicyState::IDLE);
    };
    match (state.phase, state.latched_sensor) {
        (Phase::ArmReacted | Phase::BaseEngaged, Some(s)) => (
            PolicyCommand {
                arm: Some(arm_for(s)),
                base: Some(base_for(s, escape)),
            },
            PolicyState::latched(Phase::BaseEngaged, s),
        ),
        _ => (
            PolicyCommand {
                arm: Some(arm_for(violator)),
                base: None,
            },
            PolicyState::latched(Phase::ArmReacted, violator),
        ),
    }
}

/// Base-first policy.
pub fn step_algorithm2(
    readings: &Readings,
    state: &PolicyState,
    cfg: &SafetyConfig,
    escape: &EscapeTable,
) -> (PolicyCommand, PolicyState) {
    let Some((violator, _)) = nearest_violation(readings, cfg.safe_distance) else {
        return (PolicyCommand::HOLD, PolicyState::IDLE);
    };
    match (state.phase, state.latched_sensor) {
        (Phase::BaseReacted | Phase::ArmEngaged, Some(s)) => (
            PolicyCommand {
                arm: Some(arm_for(s)),
                base: Some(base_for(s, escape)),
            },
            PolicyState::latched(Phase::ArmEngaged, s),
        ),
        _ => (
            PolicyCommand {
                arm: None,
                base: Some(base_for(violator, escape)),
            },
            PolicyState::latched(Phase::BaseReacted, violator),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::default_pose;
    use crate::sensor::SensorReading;

    fn readings(values: [Option<f64>; 6]) -> Readings {
        std::array::from_fn(|i| SensorReading {
            sensor_id: i as u8 + 1,
            range_cm: values[i],
        })
    }

    fn one(id: usize, v: f64) -> Readings {
        let mut vals = [None; 6];
        vals[id - 1] = Some(v);
        readings(vals)
    }

    fn table() -> EscapeTable {
        EscapeTable::new(&BaseGeometry::default(), &SensorConfig::default())
    }

    #[test]
    fn alg1_clear_is_hold() {
        let (cmd, st) = step_algorithm1(
            &readings([None; 6]),
            &PolicyState::IDLE,
            &SafetyConfig::default(),
            &table(),
        );
        assert!(cmd.is_hold());
        assert_eq!(st, PolicyState::IDLE);
    }

    #[test]
    fn alg1_arm_then_base() {
        let cfg = SafetyConfig::default();
        let (cmd, st) = step_algorithm1(&one(1, 40.0), &PolicyState::IDLE, &cfg, &table());
        let arm = cmd.arm.unwrap();
        assert_eq!((arm.servo1(), arm.servo2()), (90.0, 45.0));
        assert!(cmd.base.is_none());
        assert_eq!(st.phase, Phase::ArmReacted);
        assert_eq!(st.latched_sensor, Some(1));

        let (cmd, st) = step_algorithm1(&one(1, 42.0), &st, &cfg, &table());
        assert_eq!(cmd.arm, Some(arm));
        assert_eq!(
            cmd.base,
            Some(escape_direction(1, &BaseGeometry::default(), &SensorConfig::default()).unwrap())
        );
        assert_eq!(st.phase, Phase::BaseEngaged);
    }

    #[test]
    fn alg2_base_then_arm_then_clear() {
        let cfg = SafetyConfig::default();
        let (cmd, st) = step_algorithm2(&one(3, 45.0), &PolicyState::IDLE, &cfg, &table());
        assert!(cmd.arm.is_none());
        assert_eq!(cmd.base, Some(table().get(3).unwrap()));
        assert_eq!(st.phase, Phase::BaseReacted);

        let (cmd, st) = step_algorithm2(&one(3, 44.1), &st, &cfg, &table());
        let arm = cmd.arm.unwrap();
        assert_eq!((arm.servo1(), arm.servo2()), (45.0, 90.0));
        assert!(cmd.base.is_some());
        assert_eq!(st.phase, Phase::ArmEngaged);

        let (cmd, st) = step_algorithm2(&readings([None; 6]), &st, &cfg, &table());
        assert!(cmd.is_hold());
        assert_eq!(cmd.arm.unwrap_or(default_pose()), default_pose());
        assert_eq!(st, PolicyState::IDLE);
    }

    #[test]
    fn latch_survives_violator_change() {
        let cfg = SafetyConfig::default();
        let (_, st) = step_algorithm1(&one(2, 30.0), &PolicyState::IDLE, &cfg, &table());
        let (cmd, st) = step_algorithm1(&one(5, 10.0), &st, &cfg, &table());
        assert_eq!(st.latched_sensor, Some(2));
        assert_eq!(cmd.arm, Some(react_to_sensor(2).unwrap()));
    }

    #[test]
    fn reading_at_threshold_is_safe() {
        let (cmd, _) = step_algorithm1(&one(1, 50.0), &PolicyState::IDLE, &SafetyConfig::default(), &table());
        assert!(cmd.is_hold());
    }

    #[test]
    fn escape_examples() {
        let g = BaseGeometry::default();
        let s = SensorConfig::default();
        // sensor 1 faces +x; its escape must point straight back
        let e = escape_direction(1, &g, &s).unwrap();
        let u = e.unit_vector(&g);
        assert!((u.x + 1.0).abs() < 1e-9, "{e}: {u:?}");
        for id in 1..=3 {
            let a = escape_direction(id, &g, &s).unwrap();
            let b = escape_direction(id + 3, &g, &s).unwrap();
            assert_eq!(a.opposite(), b);
        }
        assert!(matches!(escape_direction(0, &g, &s), Err(Error::SensorId(0))));
        assert!(table().get(7).is_err());
    }

    #[test]
    fn escape_opposes_sensor_axis_in_both_alignments() {
        for wheel1 in [0.0, 30.0] {
            let g = BaseGeometry::with_wheel1_angle(wheel1);
            let s = SensorConfig::default();
            for id in 1..=6u8 {
                let e = escape_direction(id, &g, &s).unwrap().unit_vector(&g);
                let axis = crate::geometry::Vec2::from_angle(s.axis_angle(id));
                assert!(e.dot(axis) < 0.0);
            }
        }
    }

    #[test]
    fn policy_names() {
        assert_eq!("alg1".parse::<PolicyKind>().unwrap(), PolicyKind::ArmFirst);
        assert_eq!("alg2".parse::<PolicyKind>().unwrap(), PolicyKind::BaseFirst);
        assert!(matches!("alg3".parse::<PolicyKind>(), Err(Error::UnknownPolicy(_))));
        assert_eq!(serde_json::to_string(&PolicyKind::BaseFirst).unwrap(), "\"alg2\"");
    }

    #[test]
    fn safety_config_bounds() {
        let s = SensorConfig::default();
        assert!(SafetyConfig::default().validate(&s).is_ok());
        assert!(SafetyConfig { safe_distance: 1.0 }.validate(&s).is_err());
        assert!(SafetyConfig { safe_distance: 401.0 }.validate(&s).is_err());
    }
}
