//! Fixed-step world simulation.
//!
//! One call to [`Engine::step`] does, in order:
//!
//! 1. move the pedestrians to their positions at `t + dt`;
//! 2. read all sensors from the current robot pose;
//! 3. step the policy;
//! 4. apply the arm command;
//! 5. translate the base at the calibrated speed along the commanded hex
//!    direction for `dt`;
//! 6. emit the trace record.
//!
//! The record holds the pose the robot sensed from. The base motion commanded
//! in a step shows up in the next record's pose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{default_pose, ArmGeometry, ArmState};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec2};
use crate::kinematics::{BaseGeometry, DEFAULT_BASE_SPEED};
use crate::policy::{EscapeTable, Phase, PolicyCommand, PolicyKind, PolicyState, SafetyConfig};
use crate::sensor::{sense_all_perturbed, Obstacle, Readings, SensorConfig, SENSOR_COUNT};

pub const DEFAULT_DT_MS: u32 = 50;
pub const DEFAULT_PEDESTRIAN_RADIUS: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub geometry: BaseGeometry,
    pub sensors: SensorConfig,
    pub safety: SafetyConfig,
    pub arm: ArmGeometry,
    /// Straight-line base speed (cm/ms).
    pub base_speed: f64,
    pub dt_ms: u32,
    /// Servo slew limit per step (deg); `None` moves the arm instantly.
    pub arm_slew_deg_per_step: Option<f64>,
    pub initial_pose: Pose,
    /// Seed for the optional sensor noise.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: BaseGeometry::default(),
            sensors: SensorConfig::default(),
            safety: SafetyConfig::default(),
            arm: ArmGeometry::default(),
            base_speed: DEFAULT_BASE_SPEED,
            dt_ms: DEFAULT_DT_MS,
            arm_slew_deg_per_step: None,
            initial_pose: Pose::default(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.sensors.validate()?;
        self.safety.validate(&self.sensors)?;
        self.arm.validate()?;
        if self.dt_ms == 0 {
            return Err(Error::InvalidConfig("dt must be > 0 ms".into()));
        }
        if !(self.base_speed.is_finite() && self.base_speed >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "base speed must be >= 0, got {}",
                self.base_speed
            )));
        }
        if let Some(s) = self.arm_slew_deg_per_step {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidConfig(format!("arm slew must be > 0 deg/step, got {s}")));
            }
        }
        let p = self.initial_pose;
        if !(p.x.is_finite() && p.y.is_finite() && p.heading.is_finite()) {
            return Err(Error::InvalidConfig("initial pose must be finite".into()));
        }
        Ok(())
    }

    /// Base displacement over one step (cm).
    pub fn step_length(&self) -> f64 {
        self.base_speed * f64::from(self.dt_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t_ms: u64,
    pub position: Vec2,
}

/// Piecewise-linear pedestrian trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianScript {
    waypoints: Vec<Waypoint>,
}

impl PedestrianScript {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::InvalidScript("at least one waypoint is required".into()));
        }
        for w in &waypoints {
            if !w.position.is_finite() {
                return Err(Error::InvalidScript(format!(
                    "non-finite position at t = {} ms",
                    w.t_ms
                )));
            }
        }
        if let Some(pair) = waypoints.windows(2).find(|p| p[1].t_ms <= p[0].t_ms) {
            return Err(Error::InvalidScript(format!(
                "waypoint times must be strictly increasing ({} ms then {} ms)",
                pair[0].t_ms, pair[1].t_ms
            )));
        }
        Ok(Self { waypoints })
    }

    pub fn stationary(position: Vec2) -> Self {
        Self {
            waypoints: vec![Waypoint { t_ms: 0, position }],
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn start_ms(&self) -> u64 {
        self.waypoints[0].t_ms
    }

    pub fn end_ms(&self) -> u64 {
        self.waypoints[self.waypoints.len() - 1].t_ms
    }

    pub fn covers(&self, duration_ms: u64) -> bool {
        self.start_ms() == 0 && self.end_ms() >= duration_ms
    }

    /// Position at `t_ms`; exact at waypoint times, `None` outside the script.
    pub fn position_at(&self, t_ms: u64) -> Option<Vec2> {
        if t_ms < self.start_ms() || t_ms > self.end_ms() {
            return None;
        }
        let i = self.waypoints.partition_point(|w| w.t_ms <= t_ms) - 1;
        let a = self.waypoints[i];
        if a.t_ms == t_ms {
            return Some(a.position);
        }
        let b = self.waypoints[i + 1];
        let s = (t_ms - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
        Some(a.position + (b.position - a.position) * s)
    }

    /// Largest segment speed (cm/ms).
    pub fn max_speed(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|p| (p[1].position - p[0].position).norm() / (p[1].t_ms - p[0].t_ms) as f64)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub radius: f64,
    pub script: PedestrianScript,
}

impl Pedestrian {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidScript(format!(
                "pedestrian radius must be > 0, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// The stepped state of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub step_index: u64,
    pub t_ms: u64,
    pub robot_pose: Pose,
    pub arm: ArmState,
    pub policy_state: PolicyState,
    pub pedestrians: Vec<Obstacle>,
}

impl WorldState {
    pub fn initial(pose: Pose, pedestrians: Vec<Obstacle>) -> Self {
        Self {
            step_index: 0,
            t_ms: 0,
            robot_pose: pose,
            arm: default_pose(),
            policy_state: PolicyState::IDLE,
            pedestrians,
        }
    }

    /// Nearest pedestrian by surface clearance: (index, center distance, clearance).
    pub fn nearest_pedestrian(&self, body_radius: f64) -> Option<(usize, f64, f64)> {
        nearest(&self.robot_pose, &self.pedestrians, body_radius)
    }
}

fn nearest(pose: &Pose, pedestrians: &[Obstacle], body_radius: f64) -> Option<(usize, f64, f64)> {
    let here = pose.position();
    pedestrians
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = (p.center - here).norm();
            (i, d, d - body_radius - p.radius)
        })
        .fold(None, |best, cur| match best {
            Some(b) if b.2 <= cur.2 => Some(b),
            _ => Some(cur),
        })
}

/// One immutable line of the simulation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub t_ms: u64,
    pub dt_ms: u32,
    pub policy: PolicyKind,
    /// Pose the robot sensed from at `t_ms`.
    pub robot_pose: Pose,
    pub pedestrians: Vec<Obstacle>,
    pub readings: Readings,
    pub command: PolicyCommand,
    pub phase: Phase,
    pub arm: ArmState,
    pub arm_reacting: bool,
    /// Index of the pedestrian nearest by clearance.
    pub nearest_pedestrian: Option<usize>,
    /// Center-to-center distance to that pedestrian (cm).
    pub center_distance: Option<f64>,
    /// Gap between the base rim and the pedestrian's surface (cm).
    pub clearance: Option<f64>,
    pub safe_distance: f64,
}

impl TraceRecord {
    pub fn nearest_position(&self) -> Option<Vec2> {
        self.nearest_pedestrian.map(|i| self.pedestrians[i].center)
    }

    /// Pedestrian inside the safe distance of the base rim.
    pub fn is_unsafe(&self) -> bool {
        self.clearance.is_some_and(|c| c < self.safe_distance)
    }

    pub fn detected(&self) -> bool {
        self.readings.iter().any(|r| r.is_below(self.safe_distance))
    }

    pub fn in_contact(&self) -> bool {
        self.clearance.is_some_and(|c| c <= 0.0)
    }
}

/// Summary of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetyMetrics {
    pub steps: u64,
    /// Smallest center-to-center distance (cm); absent for an empty run.
    pub min_distance: Option<f64>,
    pub min_clearance: Option<f64>,
    pub unsafe_steps: u64,
    /// Time spent with a pedestrian inside the safe distance (ms).
    pub unsafe_dwell_ms: u64,
    /// Unsafe steps on which no sensor reported a violation.
    pub missed_detections: u64,
    /// Onsets of contact between base and pedestrian.
    pub violations: u64,
}

/// Incremental metrics; [`compute_metrics`] folds a whole trace through it.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    metrics: SafetyMetrics,
    in_contact: bool,
}

impl MetricsAccumulator {
    pub fn push(&mut self, r: &TraceRecord) {
        let m = &mut self.metrics;
        m.steps += 1;
        if let Some(d) = r.center_distance {
            m.min_distance = Some(m.min_distance.map_or(d, |x| x.min(d)));
        }
        if let Some(c) = r.clearance {
            m.min_clearance = Some(m.min_clearance.map_or(c, |x| x.min(c)));
        }
        if r.is_unsafe() {
            m.unsafe_steps += 1;
            m.unsafe_dwell_ms += u64::from(r.dt_ms);
            if !r.detected() {
                m.missed_detections += 1;
            }
        }
        let contact = r.in_contact();
        if contact && !self.in_contact {
            m.violations += 1;
        }
        self.in_contact = contact;
    }

    pub fn metrics(&self) -> SafetyMetrics {
        self.metrics
    }
}

pub fn compute_metrics(trace: &[TraceRecord]) -> Result<SafetyMetrics> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut acc = MetricsAccumulator::default();
    trace.iter().for_each(|r| acc.push(r));
    Ok(acc.metrics())
}

/// Sensor noise source; draws six offsets every step whether or not anything
/// is in view, so the stream does not depend on the policy.
#[derive(Debug, Clone)]
struct Noise {
    rng: ChaCha8Rng,
    amplitude: f64,
}

impl Noise {
    fn draw(&mut self) -> [f64; SENSOR_COUNT] {
        let a = self.amplitude;
        std::array::from_fn(|_| self.rng.random_range(-a..=a))
    }
}

/// Steps a world under one configuration and policy.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: SimConfig,
    policy: PolicyKind,
    escape: EscapeTable,
    noise: Option<Noise>,
}

impl Engine {
    pub fn new(cfg: SimConfig, policy: PolicyKind) -> Result<Self> {
        cfg.validate()?;
        let escape = EscapeTable::new(&cfg.geometry, &cfg.sensors);
        let noise = (cfg.sensors.noise_amplitude > 0.0).then(|| Noise {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            amplitude: cfg.sensors.noise_amplitude,
        });
        Ok(Self {
            cfg,
            policy,
            escape,
            noise,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    pub fn set_policy(&mut self, policy: PolicyKind) {
        self.policy = policy;
    }

    /// Restarts the noise stream from the configured seed.
    pub fn reset_noise(&mut self) {
        if let Some(n) = &mut self.noise {
            n.rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        }
    }

    /// Advances `world` by one step with pedestrians moved to `positions`
    /// (one per pedestrian, at `t + dt`).
    pub fn step(&mut self, world: &WorldState, positions: &[Vec2]) -> (WorldState, TraceRecord) {
        let cfg = &self.cfg;
        let dt = cfg.dt_ms;
        let step_index = world.step_index + 1;
        let t_ms = step_index * u64::from(dt);

        // 1
        let pedestrians: Vec<Obstacle> = world
            .pedestrians
            .iter()
            .zip(positions)
            .map(|(p, c)| Obstacle::new(*c, p.radius))
            .collect();
        // 2
        let offsets = self.noise.as_mut().map_or([0.0; SENSOR_COUNT], Noise::draw);
        let pose = world.robot_pose;
        let readings = sense_all_perturbed(&pose, &pedestrians, &cfg.sensors, &offsets);
        // 3
        let (command, policy_state) = self
            .policy
            .step(&readings, &world.policy_state, &cfg.safety, &self.escape);
        // 4
        let target = command.arm.unwrap_or_else(default_pose);
        let arm = match cfg.arm_slew_deg_per_step {
            Some(max) => world.arm.step_toward(&target, max),
            None => target,
        };
        // 5
        let next_pose = match command.base {
            Some(dir) => {
                let d = pose.to_world_dir(dir.unit_vector(&cfg.geometry)) * cfg.step_length();
                Pose::new(pose.x + d.x, pose.y + d.y, pose.heading)
            }
            None => pose,
        };
        // 6
        let near = nearest(&pose, &pedestrians, cfg.geometry.body_radius());
        let record = TraceRecord {
            step: step_index,
            t_ms,
            dt_ms: dt,
            policy: self.policy,
            robot_pose: pose,
            pedestrians: pedestrians.clone(),
            readings,
            command,
            phase: policy_state.phase,
            arm,
            arm_reacting: arm.reacting(),
            nearest_pedestrian: near.map(|n| n.0),
            center_distance: near.map(|n| n.1),
            clearance: near.map(|n| n.2),
            safe_distance: cfg.safety.safe_distance,
        };
        let next = WorldState {
            step_index,
            t_ms,
            robot_pose: next_pose,
            arm,
            policy_state,
            pedestrians,
        };
        (next, record)
    }
}

/// A scripted run that can be stepped one record at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    engine: Engine,
    pedestrians: Vec<Pedestrian>,
    world: WorldState,
    total_steps: u64,
    metrics: MetricsAccumulator,
}

impl Simulation {
    pub fn new(pedestrians: Vec<Pedestrian>, policy: PolicyKind, cfg: SimConfig, duration_ms: u64) -> Result<Self> {
        for (index, p) in pedestrians.iter().enumerate() {
            p.validate()?;
            if !p.script.covers(duration_ms) {
                return Err(Error::ScriptCoverage {
                    index,
                    start_ms: p.script.start_ms(),
                    end_ms: p.script.end_ms(),
                    duration_ms,
                });
            }
        }
        let engine = Engine::new(cfg, policy)?;
        let obstacles = pedestrians
            .iter()
            .map(|p| Obstacle::new(p.script.waypoints()[0].position, p.radius))
            .collect();
        let world = WorldState::initial(engine.config().initial_pose, obstacles);
        let total_steps = duration_ms / u64::from(engine.config().dt_ms);
        Ok(Self {
            engine,
            pedestrians,
            world,
            total_steps,
            metrics: MetricsAccumulator::default(),
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn is_finished(&self) -> bool {
        self.world.step_index >= self.total_steps
    }

    pub fn metrics(&self) -> SafetyMetrics {
        self.metrics.metrics()
    }

    /// Next record, or `None` once the duration is exhausted.
    pub fn advance(&mut self) -> Option<TraceRecord> {
        if self.is_finished() {
            return None;
        }
        let t = (self.world.step_index + 1) * u64::from(self.engine.config().dt_ms);
        let positions: Vec<Vec2> = self
            .pedestrians
            .iter()
            .map(|p| p.script.position_at(t).expect("coverage checked at construction"))
            .collect();
        let (next, record) = self.engine.step(&self.world, &positions);
        self.world = next;
        self.metrics.push(&record);
        Some(record)
    }
}

/// Runs a scripted scenario for `duration_ms`.
pub fn run_scenario(
    pedestrians: &[Pedestrian],
    policy: PolicyKind,
    cfg: &SimConfig,
    duration_ms: u64,
) -> Result<(Vec<TraceRecord>, SafetyMetrics)> {
    let mut sim = Simulation::new(pedestrians.to_vec(), policy, cfg.clone(), duration_ms)?;
    let trace: Vec<TraceRecord> = std::iter::from_fn(|| sim.advance()).collect();
    Ok((trace, sim.metrics()))
}
