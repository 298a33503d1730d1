#ifndef HRIBENCH_H
#define HRIBENCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of ultrasonic sensors; length of [`HbStepRecord::readings`].
 */
#define HB_SENSOR_COUNT 6

/**
 * Result code of every fallible call.
 */
enum HbStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  HB_STATUS_OK = 0,
  HB_STATUS_NULL_POINTER = 1,
  HB_STATUS_INVALID_UTF8 = 2,
  HB_STATUS_PARSE = 3,
  HB_STATUS_INVALID_CONFIG = 4,
  HB_STATUS_UNKNOWN_POLICY = 5,
  HB_STATUS_COVERAGE = 6,
  HB_STATUS_CALIBRATION = 7,
  HB_STATUS_INVALID_SENSOR = 8,
  /**
   * The simulation has no steps left.
   */
  HB_STATUS_FINISHED = 9,
  HB_STATUS_PANIC = 10,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HbStatus HbStatus;
#else
typedef int32_t HbStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Base translation directions, in wheel-pattern order.
 */
enum HbHexDirection
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  HB_HEX_DIRECTION_NONE = -1,
  HB_HEX_DIRECTION_PLUS_N = 0,
  HB_HEX_DIRECTION_MINUS_N = 1,
  HB_HEX_DIRECTION_MINUS_M = 2,
  HB_HEX_DIRECTION_PLUS_M = 3,
  HB_HEX_DIRECTION_PLUS_L = 4,
  HB_HEX_DIRECTION_MINUS_L = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HbHexDirection HbHexDirection;
#else
typedef int32_t HbHexDirection;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum HbPhase
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  HB_PHASE_IDLE = 0,
  HB_PHASE_ARM_REACTED = 1,
  HB_PHASE_BASE_ENGAGED = 2,
  HB_PHASE_BASE_REACTED = 3,
  HB_PHASE_ARM_ENGAGED = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HbPhase HbPhase;
#else
typedef int32_t HbPhase;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum HbPolicy
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  HB_POLICY_ARM_FIRST = 1,
  HB_POLICY_BASE_FIRST = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HbPolicy HbPolicy;
#else
typedef int32_t HbPolicy;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque scripted simulation.
 */
typedef struct HbSimulation HbSimulation;

typedef struct HbWheelSpeeds {
  double v1;
  double v2;
  double v3;
} HbWheelSpeeds;

typedef struct HbBodyVelocity {
  double vx;
  double vy;
  double omega;
} HbBodyVelocity;

/**
 * One simulation step, flattened.
 */
typedef struct HbStepRecord {
  uint64_t step;
  uint64_t t_ms;
  double robot_x;
  double robot_y;
  double robot_heading;
  /**
   * Nearest pedestrian; NaN without pedestrians.
   */
  double ped_x;
  double ped_y;
  double dist_cm;
  double clearance_cm;
  /**
   * Sensor ranges, sensor 1 first; NaN when nothing is in range.
   */
  double readings[HB_SENSOR_COUNT];
  double arm_servo1;
  double arm_servo2;
  bool arm_reacting;
  bool arm_command;
  HbHexDirection base_command;
  HbPhase phase;
} HbStepRecord;

typedef struct HbMetrics {
  uint64_t steps;
  double min_distance;
  double min_clearance;
  uint64_t unsafe_steps;
  uint64_t unsafe_dwell_ms;
  uint64_t missed_detections;
  uint64_t violations;
} HbMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated) and returns its length without the terminator. Pass a null
 * `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t hb_last_error_message(char *buf, size_t len);

/**
 * Static, NUL-terminated crate version.
 */
const char *hb_version(void);

/**
 * Body velocity for wheel speeds on the default base.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
HbStatus hb_forward_kinematics(struct HbWheelSpeeds wheels, struct HbBodyVelocity *out);

/**
 * Wheel speeds for a body velocity on the default base.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
HbStatus hb_inverse_kinematics(struct HbBodyVelocity body, struct HbWheelSpeeds *out);

/**
 * Hex direction a wheel pattern drives the default base in, or
 * `HbHexDirection::None`.
 */
HbHexDirection hb_hex_direction_for_pattern(struct HbWheelSpeeds wheels);

/**
 * Mean speed (cm/ms) over `n` timed runs.
 *
 * # Safety
 * `dt_ms` and `dd_cm` must point to `n` readable values; `out` must be
 * valid for writes.
 */
HbStatus hb_calibrate_speed(const double *dt_ms, const double *dd_cm, size_t n, double *out);

/**
 * Arm reaction pose for a sensor (1..=6) and the tip offset it produces
 * in the base frame (x forward, y left).
 *
 * # Safety
 * All out pointers must be valid for writes.
 */
HbStatus hb_arm_react(uint8_t sensor_id,
                      double *servo1,
                      double *servo2,
                      double *tip_x,
                      double *tip_y);

/**
 * Builds a simulation from scenario TOML. `policy` ("alg1"/"alg2") may be
 * null to keep the scenario's own.
 *
 * # Safety
 * `toml` and `policy` must be null or NUL-terminated strings; `out` must be
 * valid for writes. On success `*out` owns a handle for
 * [`hb_simulation_free`].
 */
HbStatus hb_simulation_new(const char *toml, const char *policy, struct HbSimulation **out);

/**
 * Advances one step and writes its record. Returns `Finished` once the
 * scenario duration is used up.
 *
 * # Safety
 * `sim` must come from [`hb_simulation_new`]; `out` must be valid for writes.
 */
HbStatus hb_simulation_step(struct HbSimulation *sim, struct HbStepRecord *out);

/**
 * Metrics over the steps taken so far.
 *
 * # Safety
 * `sim` must come from [`hb_simulation_new`]; `out` must be valid for writes.
 */
HbStatus hb_simulation_metrics(const struct HbSimulation *sim, struct HbMetrics *out);

/**
 * Total steps the scenario will run; 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or come from [`hb_simulation_new`].
 */
uint64_t hb_simulation_total_steps(const struct HbSimulation *sim);

/**
 * # Safety
 * `sim` must be null or come from [`hb_simulation_new`].
 */
HbPolicy hb_simulation_policy(const struct HbSimulation *sim);

/**
 * Step length and duration in ms.
 *
 * # Safety
 * `sim` must come from [`hb_simulation_new`]; out pointers must be valid
 * for writes.
 */
HbStatus hb_simulation_timing(const struct HbSimulation *sim,
                              uint32_t *dt_ms,
                              uint64_t *duration_ms);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must be null or come from [`hb_simulation_new`], and must not be
 * used afterwards.
 */
void hb_simulation_free(struct HbSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HRIBENCH_H */
