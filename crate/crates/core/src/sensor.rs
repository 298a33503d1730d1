//! Cone-beam model of the ultrasonic sensor ring.
//!
//! Sensors sit on the rim of the base, evenly spaced, each looking radially
//! outward. Sensor 1's axis is the base +x axis ("Front"); sensor `i` is
//! rotated `(i - 1) * angular_spacing` counter-clockwise from it.
//!
//! A disc obstacle is seen by a sensor when some point of its boundary lies in
//! the sensor's cone. The reported range is the distance from the sensor's
//! mount point to the nearest such boundary point, floored onto the
//! resolution grid and clamped into `[min_range, max_range]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose, Vec2};

pub const SENSOR_COUNT: usize = 6;

const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub count: usize,
    /// Distance from the base center to each sensor (cm).
    pub mount_radius: f64,
    pub angular_spacing_deg: f64,
    /// Axis angle of sensor 1 in the base frame (deg).
    pub first_axis_deg: f64,
    pub beam_half_angle_deg: f64,
    pub min_range: f64,
    pub max_range: f64,
    pub resolution: f64,
    /// Amplitude of optional additive uniform noise (cm). Zero disables it.
    pub noise_amplitude: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            count: SENSOR_COUNT,
            mount_radius: 25.0,
            angular_spacing_deg: 60.0,
            first_axis_deg: 0.0,
            beam_half_angle_deg: 15.0,
            min_range: 2.0,
            max_range: 400.0,
            resolution: 0.3,
            noise_amplitude: 0.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.count != SENSOR_COUNT {
            return bad(format!("sensor count must be {SENSOR_COUNT}, got {}", self.count));
        }
        if (self.count as f64 * self.angular_spacing_deg - 360.0).abs() > 1e-9 {
            return bad(format!(
                "count x angular_spacing must be 360 deg, got {}",
                self.count as f64 * self.angular_spacing_deg
            ));
        }
        if !(self.min_range > 0.0 && self.min_range < self.max_range && self.max_range.is_finite()) {
            return bad(format!(
                "need 0 < min_range < max_range, got {} and {}",
                self.min_range, self.max_range
            ));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be > 0, got {}", self.resolution));
        }
        if !(self.beam_half_angle_deg > 0.0 && self.beam_half_angle_deg < 90.0) {
            return bad(format!(
                "beam half-angle must be in (0, 90) deg, got {}",
                self.beam_half_angle_deg
            ));
        }
        if !(self.mount_radius >= 0.0 && self.mount_radius.is_finite()) {
            return bad(format!("mount_radius must be >= 0, got {}", self.mount_radius));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return bad(format!("noise amplitude must be >= 0, got {}", self.noise_amplitude));
        }
        if !self.first_axis_deg.is_finite() {
            return bad("first_axis_deg must be finite".into());
        }
        Ok(())
    }

    /// Axis angle of sensor `id` (1-based) in the base frame, radians.
    pub fn axis_angle(&self, id: u8) -> f64 {
        (self.first_axis_deg + f64::from(id.saturating_sub(1)) * self.angular_spacing_deg).to_radians()
    }

    fn min_ticks(&self) -> u32 {
        (self.min_range / self.resolution - GRID_EPS).ceil() as u32
    }

    fn max_ticks(&self) -> u32 {
        (self.max_range / self.resolution + GRID_EPS).floor() as u32
    }

    /// Floors `raw` onto the resolution grid inside the valid span.
    /// `None` when `raw` exceeds `max_range`.
    pub fn quantize(&self, raw: f64) -> Option<f64> {
        if raw.is_nan() || raw > self.max_range {
            return None;
        }
        let ticks = (raw.max(0.0) / self.resolution + GRID_EPS).floor() as u32;
        let ticks = ticks.clamp(self.min_ticks(), self.max_ticks());
        // snap off the representation error of ticks * resolution
        Some((f64::from(ticks) * self.resolution * 1e9).round() / 1e9)
    }
}

/// Fraction of the full circle covered by some sensor cone.
pub fn coverage_fraction(cfg: &SensorConfig) -> f64 {
    let covered = cfg.count as f64 * 2.0 * cfg.beam_half_angle_deg;
    (covered / 360.0).clamp(0.0, 1.0)
}

/// Pedestrians are discs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Self { center, radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub sensor_id: u8,
    /// `None` is the out-of-range sentinel.
    pub range_cm: Option<f64>,
}

impl SensorReading {
    pub fn out_of_range(sensor_id: u8) -> Self {
        Self {
            sensor_id,
            range_cm: None,
        }
    }

    pub fn is_below(&self, threshold: f64) -> bool {
        self.range_cm.is_some_and(|r| r < threshold)
    }
}

pub type Readings = [SensorReading; SENSOR_COUNT];

/// Unquantized distance from a cone apex to the nearest boundary point of
/// `obstacle` inside the cone, if any.
pub fn cone_range(apex: Vec2, axis: f64, half_angle: f64, obstacle: &Obstacle) -> Option<f64> {
    let d = obstacle.center - apex;
    let dist = d.norm();
    let rho = obstacle.radius;
    if dist <= rho {
        return Some(0.0);
    }
    if wrap_angle(d.angle() - axis).abs() <= half_angle {
        return Some(dist - rho);
    }
    // Nearest in-cone point lies on one of the cone's edge rays.
    [axis - half_angle, axis + half_angle]
        .into_iter()
        .filter_map(|edge| {
            let e = Vec2::from_angle(edge);
            let along = d.dot(e);
            if along <= 0.0 {
                return None;
            }
            let perp2 = dist * dist - along * along;
            let rho2 = rho * rho;
            if perp2 > rho2 {
                return None;
            }
            Some(along - (rho2 - perp2).sqrt())
        })
        .reduce(f64::min)
}

/// World-frame mount point and axis angle of sensor `id`.
pub fn sensor_frame(pose: &Pose, cfg: &SensorConfig, id: u8) -> (Vec2, f64) {
    let axis = cfg.axis_angle(id);
    let mount = pose.to_world_point(Vec2::from_angle(axis) * cfg.mount_radius);
    (mount, axis + pose.heading)
}

/// Noise-free readings of all sensors.
pub fn sense_all(pose: &Pose, obstacles: &[Obstacle], cfg: &SensorConfig) -> Readings {
    sense_all_perturbed(pose, obstacles, cfg, &[0.0; SENSOR_COUNT])
}

/// Readings with `offsets[i]` (cm) added to sensor `i + 1`'s raw range before
/// quantization.
pub fn sense_all_perturbed(
    pose: &Pose,
    obstacles: &[Obstacle],
    cfg: &SensorConfig,
    offsets: &[f64; SENSOR_COUNT],
) -> Readings {
    let half = cfg.beam_half_angle_deg.to_radians();
    std::array::from_fn(|i| {
        let id = (i + 1) as u8;
        let (mount, axis) = sensor_frame(pose, cfg, id);
        let raw = obstacles
            .iter()
            .filter_map(|o| cone_range(mount, axis, half, o))
            .reduce(f64::min);
        SensorReading {
            sensor_id: id,
            range_cm: raw.and_then(|r| cfg.quantize(r + offsets[i])),
        }
    })
}

/// Lowest reading below `threshold`; ties go to the lowest sensor id.
pub fn nearest_violation(readings: &Readings, threshold: f64) -> Option<(u8, f64)> {
    readings
        .iter()
        .filter_map(|r| r.range_cm.filter(|v| *v < threshold).map(|v| (r.sensor_id, v)))
        .fold(None, |best: Option<(u8, f64)>, cur| match best {
            Some(b) if b.1 <= cur.1 => Some(b),
            _ => Some(cur),
        })
}
