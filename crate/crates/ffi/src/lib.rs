//! C ABI over the `hribench` simulation core.
//!
//! Every fallible function returns an [`HbStatus`]; on failure a message is
//! stored per thread and can be fetched with [`hb_last_error_message`].
//! Simulations are opaque [`HbSimulation`] handles released with
//! [`hb_simulation_free`]. Missing values in output structs are NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hribench::arm::{react_to_sensor, tip_offset, ArmGeometry};
use hribench::engine::{SafetyMetrics, Simulation, TraceRecord};
use hribench::kinematics::{
    calibrate_speed, forward_kinematics, hex_direction_for_pattern, inverse_kinematics, BaseGeometry, BodyVelocity,
    CalibrationSample, HexDirection, WheelSpeeds,
};
use hribench::policy::{Phase, PolicyKind};
use hribench::scenario::{Overrides, ScenarioFile};
use hribench::Error;

/// Number of ultrasonic sensors; length of [`HbStepRecord::readings`].
pub const HB_SENSOR_COUNT: usize = 6;

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidConfig = 4,
    UnknownPolicy = 5,
    Coverage = 6,
    Calibration = 7,
    InvalidSensor = 8,
    /// The simulation has no steps left.
    Finished = 9,
    Panic = 10,
}

impl From<&Error> for HbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) | Error::Io { .. } => HbStatus::Parse,
            Error::UnknownPolicy(_) => HbStatus::UnknownPolicy,
            Error::ScriptCoverage { .. } => HbStatus::Coverage,
            Error::NoCalibrationSamples | Error::CalibrationSample(_) | Error::CalibrationRow { .. } => {
                HbStatus::Calibration
            }
            Error::SensorId(_) => HbStatus::InvalidSensor,
            Error::InvalidConfig(_) | Error::InvalidScript(_) | Error::EmptyTrace => HbStatus::InvalidConfig,
        }
    }
}

/// Base translation directions, in wheel-pattern order.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbHexDirection {
    None = -1,
    PlusN = 0,
    MinusN = 1,
    MinusM = 2,
    PlusM = 3,
    PlusL = 4,
    MinusL = 5,
}

impl From<Option<HexDirection>> for HbHexDirection {
    fn from(d: Option<HexDirection>) -> Self {
        match d {
            None => HbHexDirection::None,
            Some(HexDirection::PlusN) => HbHexDirection::PlusN,
            Some(HexDirection::MinusN) => HbHexDirection::MinusN,
            Some(HexDirection::MinusM) => HbHexDirection::MinusM,
            Some(HexDirection::PlusM) => HbHexDirection::PlusM,
            Some(HexDirection::PlusL) => HbHexDirection::PlusL,
            Some(HexDirection::MinusL) => HbHexDirection::MinusL,
        }
    }
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbPolicy {
    ArmFirst = 1,
    BaseFirst = 2,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbPhase {
    Idle = 0,
    ArmReacted = 1,
    BaseEngaged = 2,
    BaseReacted = 3,
    ArmEngaged = 4,
}

impl From<Phase> for HbPhase {
    fn from(p: Phase) -> Self {
        match p {
            Phase::Idle => HbPhase::Idle,
            Phase::ArmReacted => HbPhase::ArmReacted,
            Phase::BaseEngaged => HbPhase::BaseEngaged,
            Phase::BaseReacted => HbPhase::BaseReacted,
            Phase::ArmEngaged => HbPhase::ArmEngaged,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HbBodyVelocity {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HbWheelSpeeds {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

/// One simulation step, flattened.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbStepRecord {
    pub step: u64,
    pub t_ms: u64,
    pub robot_x: f64,
    pub robot_y: f64,
    pub robot_heading: f64,
    /// Nearest pedestrian; NaN without pedestrians.
    pub ped_x: f64,
    pub ped_y: f64,
    pub dist_cm: f64,
    pub clearance_cm: f64,
    /// Sensor ranges, sensor 1 first; NaN when nothing is in range.
    pub readings: [f64; HB_SENSOR_COUNT],
    pub arm_servo1: f64,
    pub arm_servo2: f64,
    pub arm_reacting: bool,
    pub arm_command: bool,
    pub base_command: HbHexDirection,
    pub phase: HbPhase,
}

const _: () = assert!(HB_SENSOR_COUNT == hribench::sensor::SENSOR_COUNT);

impl From<&TraceRecord> for HbStepRecord {
    fn from(r: &TraceRecord) -> Self {
        let ped = r.nearest_position();
        Self {
            step: r.step,
            t_ms: r.t_ms,
            robot_x: r.robot_pose.x,
            robot_y: r.robot_pose.y,
            robot_heading: r.robot_pose.heading,
            ped_x: ped.map_or(f64::NAN, |p| p.x),
            ped_y: ped.map_or(f64::NAN, |p| p.y),
            dist_cm: r.center_distance.unwrap_or(f64::NAN),
            clearance_cm: r.clearance.unwrap_or(f64::NAN),
            readings: std::array::from_fn(|i| r.readings[i].range_cm.unwrap_or(f64::NAN)),
            arm_servo1: r.arm.servo1(),
            arm_servo2: r.arm.servo2(),
            arm_reacting: r.arm_reacting,
            arm_command: r.command.arm.is_some(),
            base_command: r.command.base.into(),
            phase: r.phase.into(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbMetrics {
    pub steps: u64,
    pub min_distance: f64,
    pub min_clearance: f64,
    pub unsafe_steps: u64,
    pub unsafe_dwell_ms: u64,
    pub missed_detections: u64,
    pub violations: u64,
}

impl From<SafetyMetrics> for HbMetrics {
    fn from(m: SafetyMetrics) -> Self {
        Self {
            steps: m.steps,
            min_distance: m.min_distance.unwrap_or(f64::NAN),
            min_clearance: m.min_clearance.unwrap_or(f64::NAN),
            unsafe_steps: m.unsafe_steps,
            unsafe_dwell_ms: m.unsafe_dwell_ms,
            missed_detections: m.missed_detections,
            violations: m.violations,
        }
    }
}

/// Opaque scripted simulation.
pub struct HbSimulation {
    sim: Simulation,
    policy: PolicyKind,
    dt_ms: u32,
    duration_ms: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: HbStatus, msg: impl Into<String>) -> HbStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HbStatus) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(HbStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HbStatus> {
    if p.is_null() {
        return Err(fail(HbStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated) and returns its length without the terminator. Pass a null
/// `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn hb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Body velocity for wheel speeds on the default base.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_forward_kinematics(wheels: HbWheelSpeeds, out: *mut HbBodyVelocity) -> HbStatus {
    if out.is_null() {
        return fail(HbStatus::NullPointer, "out is null");
    }
    let b = forward_kinematics(
        WheelSpeeds::new(wheels.v1, wheels.v2, wheels.v3),
        &BaseGeometry::default(),
    );
    *out = HbBodyVelocity {
        vx: b.vx,
        vy: b.vy,
        omega: b.omega,
    };
    HbStatus::Ok
}

/// Wheel speeds for a body velocity on the default base.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_inverse_kinematics(body: HbBodyVelocity, out: *mut HbWheelSpeeds) -> HbStatus {
    if out.is_null() {
        return fail(HbStatus::NullPointer, "out is null");
    }
    let w = inverse_kinematics(
        BodyVelocity::new(body.vx, body.vy, body.omega),
        &BaseGeometry::default(),
    );
    *out = HbWheelSpeeds {
        v1: w.v1,
        v2: w.v2,
        v3: w.v3,
    };
    HbStatus::Ok
}

/// Hex direction a wheel pattern drives the default base in, or
/// `HbHexDirection::None`.
#[no_mangle]
pub extern "C" fn hb_hex_direction_for_pattern(wheels: HbWheelSpeeds) -> HbHexDirection {
    hex_direction_for_pattern(
        WheelSpeeds::new(wheels.v1, wheels.v2, wheels.v3),
        &BaseGeometry::default(),
    )
    .into()
}

/// Mean speed (cm/ms) over `n` timed runs.
///
/// # Safety
/// `dt_ms` and `dd_cm` must point to `n` readable values; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_calibrate_speed(dt_ms: *const f64, dd_cm: *const f64, n: usize, out: *mut f64) -> HbStatus {
    guard(|| {
        if out.is_null() || (n > 0 && (dt_ms.is_null() || dd_cm.is_null())) {
            return fail(HbStatus::NullPointer, "null argument");
        }
        let samples: Result<Vec<_>, _> = (0..n)
            .map(|i| CalibrationSample::new(*dt_ms.add(i), *dd_cm.add(i)))
            .collect();
        match samples.and_then(|s| calibrate_speed(&s)) {
            Ok(m) => {
                *out = m;
                HbStatus::Ok
            }
            Err(e) => fail((&e).into(), e.to_string()),
        }
    })
}

/// Arm reaction pose for a sensor (1..=6) and the tip offset it produces
/// in the base frame (x forward, y left).
///
/// # Safety
/// All out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_arm_react(
    sensor_id: u8,
    servo1: *mut f64,
    servo2: *mut f64,
    tip_x: *mut f64,
    tip_y: *mut f64,
) -> HbStatus {
    if servo1.is_null() || servo2.is_null() || tip_x.is_null() || tip_y.is_null() {
        return fail(HbStatus::NullPointer, "null argument");
    }
    match react_to_sensor(sensor_id) {
        Ok(a) => {
            let tip = tip_offset(&a, &ArmGeometry::default());
            *servo1 = a.servo1();
            *servo2 = a.servo2();
            *tip_x = tip.x;
            *tip_y = tip.y;
            HbStatus::Ok
        }
        Err(e) => fail((&e).into(), e.to_string()),
    }
}

/// Builds a simulation from scenario TOML. `policy` ("alg1"/"alg2") may be
/// null to keep the scenario's own.
///
/// # Safety
/// `toml` and `policy` must be null or NUL-terminated strings; `out` must be
/// valid for writes. On success `*out` owns a handle for
/// [`hb_simulation_free`].
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_new(
    toml: *const c_char,
    policy: *const c_char,
    out: *mut *mut HbSimulation,
) -> HbStatus {
    guard(|| {
        if out.is_null() {
            return fail(HbStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match str_arg(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let policy = if policy.is_null() {
            None
        } else {
            match str_arg(policy, "policy") {
                Ok(p) => Some(p.to_string()),
                Err(s) => return s,
            }
        };
        let file = match ScenarioFile::from_toml_str(text) {
            Ok(f) => f,
            Err(e) => return fail(HbStatus::Parse, e),
        };
        let overrides = Overrides {
            policy,
            ..Overrides::default()
        };
        let built = file.into_scenario(&overrides).and_then(|s| {
            let dt_ms = s.config.dt_ms;
            Simulation::new(s.pedestrians, s.policy, s.config, s.duration_ms).map(|sim| HbSimulation {
                sim,
                policy: s.policy,
                dt_ms,
                duration_ms: s.duration_ms,
            })
        });
        match built {
            Ok(h) => {
                *out = Box::into_raw(Box::new(h));
                HbStatus::Ok
            }
            Err(e) => fail((&e).into(), e.to_string()),
        }
    })
}

/// Advances one step and writes its record. Returns `Finished` once the
/// scenario duration is used up.
///
/// # Safety
/// `sim` must come from [`hb_simulation_new`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_step(sim: *mut HbSimulation, out: *mut HbStepRecord) -> HbStatus {
    guard(|| {
        let (Some(h), false) = (sim.as_mut(), out.is_null()) else {
            return fail(HbStatus::NullPointer, "null argument");
        };
        match h.sim.advance() {
            Some(r) => {
                *out = HbStepRecord::from(&r);
                HbStatus::Ok
            }
            None => fail(HbStatus::Finished, "simulation finished"),
        }
    })
}

/// Metrics over the steps taken so far.
///
/// # Safety
/// `sim` must come from [`hb_simulation_new`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_metrics(sim: *const HbSimulation, out: *mut HbMetrics) -> HbStatus {
    let (Some(h), false) = (sim.as_ref(), out.is_null()) else {
        return fail(HbStatus::NullPointer, "null argument");
    };
    *out = h.sim.metrics().into();
    HbStatus::Ok
}

/// Total steps the scenario will run; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or come from [`hb_simulation_new`].
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_total_steps(sim: *const HbSimulation) -> u64 {
    sim.as_ref().map_or(0, |h| h.sim.total_steps())
}

/// # Safety
/// `sim` must be null or come from [`hb_simulation_new`].
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_policy(sim: *const HbSimulation) -> HbPolicy {
    match sim.as_ref().map(|h| h.policy) {
        Some(PolicyKind::BaseFirst) => HbPolicy::BaseFirst,
        _ => HbPolicy::ArmFirst,
    }
}

/// Step length and duration in ms.
///
/// # Safety
/// `sim` must come from [`hb_simulation_new`]; out pointers must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_timing(
    sim: *const HbSimulation,
    dt_ms: *mut u32,
    duration_ms: *mut u64,
) -> HbStatus {
    let Some(h) = sim.as_ref() else {
        return fail(HbStatus::NullPointer, "sim is null");
    };
    if dt_ms.is_null() || duration_ms.is_null() {
        return fail(HbStatus::NullPointer, "null argument");
    }
    *dt_ms = h.dt_ms;
    *duration_ms = h.duration_ms;
    HbStatus::Ok
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or come from [`hb_simulation_new`], and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hb_simulation_free(sim: *mut HbSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
