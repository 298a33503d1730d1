//! Three-omni-wheel base kinematics.
//!
//! Wheel `i` sits at position angle `alpha_i` (measured counter-clockwise from
//! the base +x axis, which is also sensor 1's axis) at distance `R` from the
//! center. Its rim speed is tied to the body twist by the rolling constraint
//!
//! ```text
//! v_i = -sin(alpha_i) * vx + cos(alpha_i) * vy + R * omega
//! ```
//!
//! Wheel speeds are rim linear speeds, so the wheel radius never enters the
//! map. For three wheels spaced 120 degrees apart the constraint matrix `J`
//! satisfies `J^T J = diag(3/2, 3/2, 3 R^2)`, which gives the closed-form
//! inverse used by [`forward_kinematics`].
//!
//! Hex directions are the six straight-line motions obtained by driving two
//! wheels in opposite directions with the third idle. Labels follow the wheel
//! patterns: `(0, +1, -1)` is `+N`, `(1, -1, 0)` is `-M`, `(1, 0, -1)` is `+L`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};

/// Calibrated straight-line base speed (cm/ms).
pub const DEFAULT_BASE_SPEED: f64 = 0.02;

/// Angular tolerance used when matching a translation to a hex direction.
pub const HEX_MATCH_TOLERANCE_DEG: f64 = 1.0;

const REL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseGeometry {
    /// Center-to-wheel distance `R` (cm).
    pub wheel_offset_radius: f64,
    /// Wheel radius (cm). Carried for completeness; rim speeds absorb it.
    pub wheel_radius: f64,
    pub body_diameter: f64,
    /// Wheel position angles (deg), counter-clockwise from the base +x axis.
    pub wheel_position_angles: [f64; 3],
}

impl Default for BaseGeometry {
    fn default() -> Self {
        Self {
            wheel_offset_radius: 25.0,
            wheel_radius: 3.0,
            body_diameter: 50.0,
            wheel_position_angles: [0.0, 120.0, 240.0],
        }
    }
}

impl BaseGeometry {
    /// Default geometry with wheel 1 rotated to `deg`, the other two following
    /// at +120 and +240 degrees.
    pub fn with_wheel1_angle(deg: f64) -> Self {
        Self {
            wheel_position_angles: [deg, deg + 120.0, deg + 240.0],
            ..Self::default()
        }
    }

    pub fn body_radius(&self) -> f64 {
        self.body_diameter / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wheel_offset_radius", self.wheel_offset_radius),
            ("wheel_radius", self.wheel_radius),
            ("body_diameter", self.body_diameter),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        let a = self.wheel_position_angles;
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("wheel angles must be finite".into()));
        }
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let sep = wrap_angle((a[j] - a[i]).to_radians()).abs().to_degrees();
            if (sep - 120.0).abs() > 1e-6 {
                return Err(Error::InvalidConfig(format!(
                    "wheel position angles must be 120 deg apart, wheels {} and {} are {sep} deg apart",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }

    fn angles_rad(&self) -> [f64; 3] {
        self.wheel_position_angles.map(f64::to_radians)
    }
}

/// Signed rim speeds of the three wheels (cm/s, or any consistent unit).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl WheelSpeeds {
    pub const fn new(v1: f64, v2: f64, v3: f64) -> Self {
        Self { v1, v2, v3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.v1, self.v2, self.v3]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.v1 * k, self.v2 * k, self.v3 * k)
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Planar body twist in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub vx: f64,
    pub vy: f64,
    /// rad per time unit of the linear components.
    pub omega: f64,
}

impl BodyVelocity {
    pub const fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn translation(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }
}

/// Solves the rolling constraints for the body twist.
pub fn forward_kinematics(w: WheelSpeeds, g: &BaseGeometry) -> BodyVelocity {
    let v = w.as_array();
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (vi, a) in v.iter().zip(g.angles_rad()) {
        let (s, c) = a.sin_cos();
        sx -= s * vi;
        sy += c * vi;
    }
    BodyVelocity {
        vx: 2.0 / 3.0 * sx,
        vy: 2.0 / 3.0 * sy,
        omega: (v[0] + v[1] + v[2]) / (3.0 * g.wheel_offset_radius),
    }
}

/// Wheel rim speeds that realise the body twist `b`.
pub fn inverse_kinematics(b: BodyVelocity, g: &BaseGeometry) -> WheelSpeeds {
    let [v1, v2, v3] = g.angles_rad().map(|a| {
        let (s, c) = a.sin_cos();
        -s * b.vx + c * b.vy + g.wheel_offset_radius * b.omega
    });
    WheelSpeeds { v1, v2, v3 }
}

/// One of the six straight-line motions from the wheel direction table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HexDirection {
    #[serde(rename = "+N")]
    PlusN,
    #[serde(rename = "-N")]
    MinusN,
    #[serde(rename = "-M")]
    MinusM,
    #[serde(rename = "+M")]
    PlusM,
    #[serde(rename = "+L")]
    PlusL,
    #[serde(rename = "-L")]
    MinusL,
}

impl HexDirection {
    /// Table order: `+N, -N, -M, +M, +L, -L`.
    pub const ALL: [HexDirection; 6] = [
        HexDirection::PlusN,
        HexDirection::MinusN,
        HexDirection::MinusM,
        HexDirection::PlusM,
        HexDirection::PlusL,
        HexDirection::MinusL,
    ];

    pub fn label(self) -> &'static str {
        match self {
            HexDirection::PlusN => "+N",
            HexDirection::MinusN => "-N",
            HexDirection::MinusM => "-M",
            HexDirection::PlusM => "+M",
            HexDirection::PlusL => "+L",
            HexDirection::MinusL => "-L",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            HexDirection::PlusN => HexDirection::MinusN,
            HexDirection::MinusN => HexDirection::PlusN,
            HexDirection::MinusM => HexDirection::PlusM,
            HexDirection::PlusM => HexDirection::MinusM,
            HexDirection::PlusL => HexDirection::MinusL,
            HexDirection::MinusL => HexDirection::PlusL,
        }
    }

    /// Unit wheel pattern from the direction table (1 = driven forward,
    /// -1 = driven in reverse, 0 = idle).
    pub fn wheel_pattern(self) -> WheelSpeeds {
        match self {
            HexDirection::PlusN => WheelSpeeds::new(0.0, 1.0, -1.0),
            HexDirection::MinusN => WheelSpeeds::new(0.0, -1.0, 1.0),
            HexDirection::MinusM => WheelSpeeds::new(1.0, -1.0, 0.0),
            HexDirection::PlusM => WheelSpeeds::new(-1.0, 1.0, 0.0),
            HexDirection::PlusL => WheelSpeeds::new(1.0, 0.0, -1.0),
            HexDirection::MinusL => WheelSpeeds::new(-1.0, 0.0, 1.0),
        }
    }

    /// Base-frame unit vector of this direction.
    ///
    /// With wheel `k` idle its constraint forces the motion along wheel `k`'s
    /// radial line, `s * (cos a_k, sin a_k)`. Substituting into the other
    /// constraints gives `v_i = s * sin(a_k - a_i)`, which fixes the sign of `s`.
    pub fn unit_vector(self, g: &BaseGeometry) -> Vec2 {
        let pattern = self.wheel_pattern().as_array();
        let angles = g.angles_rad();
        let idle = pattern.iter().position(|p| *p == 0.0).unwrap_or(0);
        let drive: f64 = pattern
            .iter()
            .zip(angles)
            .map(|(p, a)| p * (angles[idle] - a).sin())
            .sum();
        let radial = Vec2::from_angle(angles[idle]);
        if drive >= 0.0 {
            radial
        } else {
            -radial
        }
    }
}

impl fmt::Display for HexDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for HexDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HexDirection::ALL
            .into_iter()
            .find(|d| d.label() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown hex direction `{s}`")))
    }
}

/// Matches a wheel pattern to a hex direction.
///
/// Returns `None` when the pattern rotates the base, does not translate it,
/// or translates it more than [`HEX_MATCH_TOLERANCE_DEG`] away from every
/// hex direction.
pub fn hex_direction_for_pattern(w: WheelSpeeds, g: &BaseGeometry) -> Option<HexDirection> {
    if !w.is_finite() {
        return None;
    }
    let scale = w.as_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let b = forward_kinematics(w, g);
    let t = b.translation();
    if t.norm() <= REL_EPS * scale || (b.omega * g.wheel_offset_radius).abs() > REL_EPS * scale {
        return None;
    }
    let heading = t.angle();
    HexDirection::ALL.into_iter().find(|d| {
        let off = wrap_angle(d.unit_vector(g).angle() - heading).abs();
        off.to_degrees() <= HEX_MATCH_TOLERANCE_DEG
    })
}

/// The hex direction angularly closest to `angle` (rad, base frame).
///
/// An exact tie between two neighbours resolves to the one counter-clockwise
/// of `angle`, which keeps the choice antisymmetric under a half turn.
pub fn nearest_hex_direction(angle: f64, g: &BaseGeometry) -> HexDirection {
    let mut best = HexDirection::ALL[0];
    let mut best_key = (f64::INFINITY, true);
    for d in HexDirection::ALL {
        let diff = wrap_angle(d.unit_vector(g).angle() - angle);
        let dist = diff.abs();
        let key = (dist, diff < 0.0);
        let better = if (dist - best_key.0).abs() <= 1e-9 {
            !key.1 && best_key.1
        } else {
            dist < best_key.0
        };
        if better {
            best = d;
            best_key = key;
        }
    }
    best
}

/// One row of a timed straight-line run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub dt_ms: f64,
    pub dd_cm: f64,
}

impl CalibrationSample {
    pub fn new(dt_ms: f64, dd_cm: f64) -> Result<Self> {
        let s = Self { dt_ms, dd_cm };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ms.is_finite() && self.dt_ms > 0.0) {
            return Err(Error::CalibrationSample(format!(
                "dt must be > 0 ms, got {}",
                self.dt_ms
            )));
        }
        if !(self.dd_cm.is_finite() && self.dd_cm >= 0.0) {
            return Err(Error::CalibrationSample(format!(
                "dd must be >= 0 cm, got {}",
                self.dd_cm
            )));
        }
        Ok(())
    }

    /// Average speed of this run (cm/ms).
    pub fn speed(&self) -> f64 {
        self.dd_cm / self.dt_ms
    }
}

/// Arithmetic mean of the per-run speeds (cm/ms).
pub fn calibrate_speed(samples: &[CalibrationSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::NoCalibrationSamples);
    }
    for s in samples {
        s.validate()?;
    }
    let sum: f64 = samples.iter().map(CalibrationSample::speed).sum();
    Ok(sum / samples.len() as f64)
}
