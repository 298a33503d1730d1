//! Simulation test bench for reactive human-robot safety policies.
//!
//! The simulated platform is a 50 cm disc on three omni wheels, carrying a
//! two-servo arm and six edge-mounted ultrasonic range sensors. Two reactive
//! policies (arm-first and base-first) are stepped against scripted or
//! live-steered pedestrians, and every step is logged to an immutable trace
//! from which plots and safety metrics are derived.
//!
//! Module map:
//!
//! - [`kinematics`]: forward/inverse wheel kinematics, the six straight-line
//!   hex directions, and empirical speed calibration.
//! - [`sensor`]: cone-beam range model of the sensor ring.
//! - [`arm`]: servo reaction table and tip footprint.
//! - [`policy`]: the two safety policies as pure state transitions.
//! - [`engine`]: fixed-step world simulation, traces and metrics.
//! - [`scenario`]: scenario file loading.
//! - [`output`]: trace, metrics and plot-data writers/readers.
//! - [`bridge`]: live session server.
//! - [`cli`]: command-line front end.

pub mod arm;
pub mod bridge;
pub mod cli;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod output;
pub mod policy;
pub mod scenario;
pub mod sensor;

pub use error::{Error, Result};
pub use geometry::{Pose, Vec2};
