//! Live session bridge.
//!
//! A [`Session`] is one stepped simulation driven by a remote client: the
//! client steers the first pedestrian with a velocity, and the server advances
//! the world once per tick and broadcasts the resulting state. All inbound
//! messages take effect at tick boundaries.
//!
//! Messages are JSON objects tagged by `type`. Server to client: `hello`,
//! `state`, `error`. Client to server: `steer`, `pause`, `resume`, `reset`,
//! `set_policy`. See [`ServerMessage`] and [`ClientMessage`].

mod server;

pub use server::{bind, serve, BridgeConfig, ServerHandle};

use serde::{Deserialize, Serialize};

use crate::engine::{
    Engine, MetricsAccumulator, Pedestrian, PedestrianScript, SafetyMetrics, SimConfig, TraceRecord, Waypoint,
    WorldState, DEFAULT_PEDESTRIAN_RADIUS,
};
use crate::error::Result;
use crate::geometry::{Pose, Vec2};
use crate::policy::{Phase, PolicyKind};
use crate::scenario::Scenario;
use crate::sensor::{Obstacle, SensorConfig};

pub const PROTOCOL_VERSION: u32 = 1;

/// Default cap on steering speed (cm/s).
pub const DEFAULT_MAX_STEER_SPEED: f64 = 150.0;

/// Where the steerable pedestrian starts in a blank world.
pub const BLANK_WORLD_PEDESTRIAN: Vec2 = Vec2::new(150.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Controller,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub tick: u64,
    pub epoch: u64,
    pub protocol_version: u32,
    pub role: Role,
    pub tick_ms: u64,
    pub dt_ms: u32,
    pub policy: PolicyKind,
    pub max_steer_speed: f64,
    pub safe_distance: f64,
    pub body_radius: f64,
    pub sensors: SensorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub tick: u64,
    /// Incremented by every `reset`; ticks are monotone within an epoch.
    pub epoch: u64,
    pub t_ms: u64,
    pub paused: bool,
    pub policy: PolicyKind,
    pub robot_pose: Pose,
    pub arm_servo1: f64,
    pub arm_servo2: f64,
    pub arm_reacting: bool,
    pub phase: Phase,
    pub pedestrians: Vec<Obstacle>,
    /// Steering velocity applied on this tick (cm/s).
    pub steer: Vec2,
    /// Record of the step that produced this tick; absent at tick 0.
    pub record: Option<TraceRecord>,
    pub metrics: SafetyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello(Hello),
    State(Box<StateMessage>),
    Error { tick: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// Pedestrian velocity (cm/s).
    Steer {
        #[serde(default)]
        tick: Option<u64>,
        vx: f64,
        vy: f64,
    },
    Pause {
        #[serde(default)]
        tick: Option<u64>,
    },
    Resume {
        #[serde(default)]
        tick: Option<u64>,
    },
    Reset {
        #[serde(default)]
        tick: Option<u64>,
    },
    SetPolicy {
        #[serde(default)]
        tick: Option<u64>,
        policy: String,
    },
}

/// Position after moving at `velocity` (cm/s) for `dt_ms`.
pub fn advance_position(p: Vec2, velocity: Vec2, dt_ms: u32) -> Vec2 {
    p + velocity * (f64::from(dt_ms) / 1000.0)
}

/// Turns a per-tick steering log into a waypoint script, one waypoint per tick.
pub fn script_from_steers(start: Vec2, steers: &[Vec2], dt_ms: u32) -> PedestrianScript {
    let mut p = start;
    let mut waypoints = vec![Waypoint { t_ms: 0, position: p }];
    for (k, v) in steers.iter().enumerate() {
        p = advance_position(p, *v, dt_ms);
        waypoints.push(Waypoint {
            t_ms: (k as u64 + 1) * u64::from(dt_ms),
            position: p,
        });
    }
    PedestrianScript::new(waypoints).expect("tick times are strictly increasing")
}

/// One live simulation timeline.
#[derive(Debug, Clone)]
pub struct Session {
    engine: Engine,
    initial_policy: PolicyKind,
    initial_world: WorldState,
    world: WorldState,
    steer: Vec2,
    paused: bool,
    epoch: u64,
    max_steer_speed: f64,
    trace: Vec<TraceRecord>,
    steers: Vec<Vec2>,
    metrics: MetricsAccumulator,
    last_steer: Vec2,
}

impl Session {
    pub fn new(cfg: SimConfig, policy: PolicyKind, pedestrians: Vec<Obstacle>, max_steer_speed: f64) -> Result<Self> {
        let engine = Engine::new(cfg, policy)?;
        let world = WorldState::initial(engine.config().initial_pose, pedestrians);
        Ok(Self {
            engine,
            initial_policy: policy,
            initial_world: world.clone(),
            world,
            steer: Vec2::ZERO,
            paused: false,
            epoch: 0,
            max_steer_speed,
            trace: Vec::new(),
            steers: Vec::new(),
            metrics: MetricsAccumulator::default(),
            last_steer: Vec2::ZERO,
        })
    }

    /// Blank world: default robot and one pedestrian in front of sensor 1.
    pub fn blank(policy: PolicyKind) -> Result<Self> {
        Self::new(
            SimConfig::default(),
            policy,
            vec![Obstacle::new(BLANK_WORLD_PEDESTRIAN, DEFAULT_PEDESTRIAN_RADIUS)],
            DEFAULT_MAX_STEER_SPEED,
        )
    }

    /// Session over a scenario's configuration, pedestrians at their t = 0
    /// positions. A scenario without pedestrians gets the blank-world one.
    pub fn from_scenario(s: &Scenario, max_steer_speed: f64) -> Result<Self> {
        let mut peds: Vec<Obstacle> = s
            .pedestrians
            .iter()
            .map(|p| Obstacle::new(p.script.waypoints()[0].position, p.radius))
            .collect();
        if peds.is_empty() {
            peds.push(Obstacle::new(BLANK_WORLD_PEDESTRIAN, DEFAULT_PEDESTRIAN_RADIUS));
        }
        Self::new(s.config.clone(), s.policy, peds, max_steer_speed)
    }

    pub fn tick(&self) -> u64 {
        self.world.step_index
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn policy(&self) -> PolicyKind {
        self.engine.policy()
    }

    pub fn config(&self) -> &SimConfig {
        self.engine.config()
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn initial_world(&self) -> &WorldState {
        &self.initial_world
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Steering velocity applied on each tick so far.
    pub fn steers(&self) -> &[Vec2] {
        &self.steers
    }

    pub fn max_steer_speed(&self) -> f64 {
        self.max_steer_speed
    }

    /// Applies a client message. Errors leave the session unchanged.
    pub fn apply(&mut self, msg: &ClientMessage) -> std::result::Result<(), String> {
        match msg {
            ClientMessage::Steer { vx, vy, .. } => {
                let v = Vec2::new(*vx, *vy);
                if !v.is_finite() {
                    return Err("steer velocity must be finite".into());
                }
                if v.norm() > self.max_steer_speed {
                    return Err(format!(
                        "steer speed {:.3} cm/s exceeds the maximum of {} cm/s",
                        v.norm(),
                        self.max_steer_speed
                    ));
                }
                self.steer = v;
            }
            ClientMessage::Pause { .. } => self.paused = true,
            ClientMessage::Resume { .. } => self.paused = false,
            ClientMessage::Reset { .. } => self.reset(),
            ClientMessage::SetPolicy { policy, .. } => {
                let p: PolicyKind = policy.parse().map_err(|e: crate::Error| e.to_string())?;
                self.engine.set_policy(p);
                self.world.policy_state = Default::default();
            }
        }
        Ok(())
    }

    pub fn pause(&mut self) {
        self.paused = true;
    }

    fn reset(&mut self) {
        self.engine.set_policy(self.initial_policy);
        self.engine.reset_noise();
        self.world = self.initial_world.clone();
        self.steer = Vec2::ZERO;
        self.last_steer = Vec2::ZERO;
        self.trace.clear();
        self.steers.clear();
        self.metrics = MetricsAccumulator::default();
        self.epoch += 1;
    }

    /// Advances one tick unless paused. Returns whether the world moved.
    pub fn step(&mut self) -> bool {
        if self.paused {
            return false;
        }
        let dt = self.engine.config().dt_ms;
        let positions: Vec<Vec2> = self
            .world
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if i == 0 {
                    advance_position(p.center, self.steer, dt)
                } else {
                    p.center
                }
            })
            .collect();
        let (next, record) = self.engine.step(&self.world, &positions);
        self.world = next;
        self.metrics.push(&record);
        self.trace.push(record);
        self.steers.push(self.steer);
        self.last_steer = self.steer;
        true
    }

    pub fn state(&self) -> StateMessage {
        StateMessage {
            tick: self.tick(),
            epoch: self.epoch,
            t_ms: self.world.t_ms,
            paused: self.paused,
            policy: self.policy(),
            robot_pose: self.world.robot_pose,
            arm_servo1: self.world.arm.servo1(),
            arm_servo2: self.world.arm.servo2(),
            arm_reacting: self.world.arm.reacting(),
            phase: self.world.policy_state.phase,
            pedestrians: self.world.pedestrians.clone(),
            steer: self.last_steer,
            record: self.trace.last().cloned(),
            metrics: self.metrics.metrics(),
        }
    }

    pub fn hello(&self, role: Role, tick_ms: u64) -> Hello {
        let cfg = self.engine.config();
        Hello {
            tick: self.tick(),
            epoch: self.epoch,
            protocol_version: PROTOCOL_VERSION,
            role,
            tick_ms,
            dt_ms: cfg.dt_ms,
            policy: self.policy(),
            max_steer_speed: self.max_steer_speed,
            safe_distance: cfg.safety.safe_distance,
            body_radius: cfg.geometry.body_radius(),
            sensors: cfg.sensors,
        }
    }

    /// The session so far as offline pedestrians: the steered pedestrian's
    /// per-tick positions plus stationary scripts for the rest.
    pub fn recorded_pedestrians(&self) -> Vec<Pedestrian> {
        let dt = self.engine.config().dt_ms;
        let end = self.trace.len() as u64 * u64::from(dt);
        self.initial_world
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let script = if i == 0 {
                    script_from_steers(p.center, &self.steers, dt)
                } else {
                    let mut w = vec![Waypoint {
                        t_ms: 0,
                        position: p.center,
                    }];
                    if end > 0 {
                        w.push(Waypoint {
                            t_ms: end,
                            position: p.center,
                        });
                    }
                    PedestrianScript::new(w).expect("increasing times")
                };
                Pedestrian {
                    radius: p.radius,
                    script,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_scenario;

    fn steer(vx: f64, vy: f64) -> ClientMessage {
        ClientMessage::Steer { tick: None, vx, vy }
    }

    #[test]
    fn idle_session_holds() {
        let mut s = Session::blank(PolicyKind::ArmFirst).unwrap();
        for _ in 0..10 {
            assert!(s.step());
        }
        assert_eq!(s.tick(), 10);
        assert_eq!(s.world().pedestrians[0].center, BLANK_WORLD_PEDESTRIAN);
        assert_eq!(s.world().robot_pose, Pose::default());
        assert!(s.trace().iter().all(|r| r.command.is_hold()));
    }

    #[test]
    fn steer_limits() {
        let mut s = Session::blank(PolicyKind::ArmFirst).unwrap();
        assert!(s.apply(&steer(200.0, 0.0)).is_err());
        assert!(s.apply(&steer(f64::NAN, 0.0)).is_err());
        assert!(s.apply(&steer(-100.0, 100.0)).is_ok());
        assert!(s.apply(&steer(-107.0, 107.0)).is_err());
        assert!(s
            .apply(&ClientMessage::SetPolicy {
                tick: None,
                policy: "nope".into()
            })
            .is_err());
    }

    #[test]
    fn pause_freezes_the_tick() {
        let mut s = Session::blank(PolicyKind::ArmFirst).unwrap();
        s.step();
        s.apply(&ClientMessage::Pause { tick: None }).unwrap();
        assert!(!s.step());
        assert_eq!(s.tick(), 1);
        s.apply(&ClientMessage::Resume { tick: None }).unwrap();
        assert!(s.step());
        assert_eq!(s.tick(), 2);
    }

    #[test]
    fn reset_restores_initial_state() {
        let mut s = Session::blank(PolicyKind::BaseFirst).unwrap();
        let initial = s.state();
        s.apply(&steer(-100.0, 0.0)).unwrap();
        s.apply(&ClientMessage::SetPolicy {
            tick: None,
            policy: "alg1".into(),
        })
        .unwrap();
        for _ in 0..30 {
            s.step();
        }
        s.apply(&ClientMessage::Reset { tick: None }).unwrap();
        let after = s.state();
        assert_eq!(after.epoch, 1);
        assert_eq!(StateMessage { epoch: 0, ..after }, initial);
    }

    #[test]
    fn base_first_reaction_over_live_path() {
        let mut s = Session::blank(PolicyKind::BaseFirst).unwrap();
        s.apply(&steer(-100.0, 0.0)).unwrap();
        let first = loop {
            s.step();
            let r = s.trace().last().unwrap();
            if !r.command.is_hold() {
                break r.clone();
            }
            assert!(s.tick() < 200);
        };
        assert!(first.command.base.is_some());
        assert!(first.command.arm.is_none());
        assert!(!first.arm_reacting);
    }

    #[test]
    fn live_and_offline_traces_match() {
        let mut s = Session::blank(PolicyKind::BaseFirst).unwrap();
        let plan = [
            (-60.0, 0.0, 20),
            (-120.0, 10.0, 25),
            (0.0, 0.0, 10),
            (30.0, -40.0, 15),
            (-140.0, 0.0, 30),
        ];
        for (vx, vy, n) in plan {
            s.apply(&steer(vx, vy)).unwrap();
            for _ in 0..n {
                s.step();
            }
        }
        let duration = s.tick() * u64::from(s.config().dt_ms);
        let (offline, metrics) = run_scenario(&s.recorded_pedestrians(), s.policy(), s.config(), duration).unwrap();
        assert_eq!(offline, s.trace());
        assert_eq!(metrics, s.state().metrics);
    }

    #[test]
    fn message_wire_format() {
        let m: ClientMessage = serde_json::from_str(r#"{"type":"steer","tick":3,"vx":1.5,"vy":-2}"#).unwrap();
        assert_eq!(
            m,
            ClientMessage::Steer {
                tick: Some(3),
                vx: 1.5,
                vy: -2.0
            }
        );
        let m: ClientMessage = serde_json::from_str(r#"{"type":"set_policy","policy":"alg2"}"#).unwrap();
        assert!(matches!(m, ClientMessage::SetPolicy { .. }));
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"jump"}"#).is_err());
        let e = serde_json::to_value(ServerMessage::Error {
            tick: 4,
            message: "x".into(),
        })
        .unwrap();
        assert_eq!(e["type"], "error");
        assert_eq!(e["tick"], 4);
    }
}
