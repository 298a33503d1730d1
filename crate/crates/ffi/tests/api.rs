use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use hribench_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        hb_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn scenario_text(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn records(name: &str, policy: Option<&str>) -> (Vec<HbStepRecord>, HbMetrics) {
    let text = scenario_text(name);
    let policy = policy.map(|p| CString::new(p).unwrap());
    let mut sim = ptr::null_mut();
    unsafe {
        let st = hb_simulation_new(
            text.as_ptr(),
            policy.as_ref().map_or(ptr::null(), |p| p.as_ptr()),
            &mut sim,
        );
        assert_eq!(st, HbStatus::Ok, "{}", last_error());
        let mut out = Vec::new();
        let mut rec = std::mem::MaybeUninit::<HbStepRecord>::uninit();
        loop {
            match hb_simulation_step(sim, rec.as_mut_ptr()) {
                HbStatus::Ok => out.push(rec.assume_init()),
                HbStatus::Finished => break,
                other => panic!("{other:?}: {}", last_error()),
            }
        }
        assert_eq!(out.len() as u64, hb_simulation_total_steps(sim));
        let mut m = std::mem::MaybeUninit::<HbMetrics>::uninit();
        assert_eq!(hb_simulation_metrics(sim, m.as_mut_ptr()), HbStatus::Ok);
        hb_simulation_free(sim);
        (out, m.assume_init())
    }
}

#[test]
fn simulation_matches_core() {
    let (recs, m) = records("scenario1.toml", None);
    let s = hribench::scenario::load(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/scenario1.toml"),
        &Default::default(),
    )
    .unwrap();
    let (trace, metrics) = hribench::engine::run_scenario(&s.pedestrians, s.policy, &s.config, s.duration_ms).unwrap();
    assert_eq!(recs.len(), trace.len());
    for (a, b) in recs.iter().zip(&trace) {
        assert_eq!(a.t_ms, b.t_ms);
        assert_eq!(a.robot_x, b.robot_pose.x);
        assert_eq!(a.dist_cm, b.center_distance.unwrap());
        assert_eq!(a.arm_reacting, b.arm_reacting);
        for (x, r) in a.readings.iter().zip(&b.readings) {
            match r.range_cm {
                Some(v) => assert_eq!(*x, v),
                None => assert!(x.is_nan()),
            }
        }
    }
    assert_eq!(m.missed_detections, metrics.missed_detections);
    assert_eq!(m.min_clearance, metrics.min_clearance.unwrap());
}

#[test]
fn policy_override_and_order() {
    let (recs, _) = records("steady_approach.toml", Some("alg2"));
    let first = recs
        .iter()
        .find(|r| r.arm_command || r.base_command != HbHexDirection::None)
        .unwrap();
    assert!(!first.arm_command);
    assert_eq!(first.base_command, HbHexDirection::PlusN);
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut sim = ptr::null_mut();
    unsafe {
        let bad = CString::new("name = [").unwrap();
        assert_eq!(hb_simulation_new(bad.as_ptr(), ptr::null(), &mut sim), HbStatus::Parse);
        assert!(sim.is_null());
        assert!(!last_error().is_empty());

        let text = scenario_text("steady_approach.toml");
        let p = CString::new("alg7").unwrap();
        assert_eq!(
            hb_simulation_new(text.as_ptr(), p.as_ptr(), &mut sim),
            HbStatus::UnknownPolicy
        );
        assert!(last_error().contains("alg7"));

        let short = CString::new(
            "name = \"short\"\nduration_ms = 5000\n[[pedestrians]]\nwaypoints = [[0, 100, 0], [1000, 90, 0]]\n",
        )
        .unwrap();
        assert_eq!(
            hb_simulation_new(short.as_ptr(), ptr::null(), &mut sim),
            HbStatus::Coverage
        );

        assert_eq!(
            hb_simulation_new(ptr::null(), ptr::null(), &mut sim),
            HbStatus::NullPointer
        );
        assert_eq!(
            hb_simulation_step(ptr::null_mut(), ptr::null_mut()),
            HbStatus::NullPointer
        );
        hb_simulation_free(ptr::null_mut());

        // length query without a buffer
        assert_eq!(hb_last_error_message(ptr::null_mut(), 0), last_error().len());
        let mut tiny = [1 as c_char; 4];
        hb_last_error_message(tiny.as_mut_ptr(), tiny.len());
        assert_eq!(tiny[3], 0);
    }
}

#[test]
fn kinematics_and_arm() {
    unsafe {
        let mut b = HbBodyVelocity::default();
        let w = HbWheelSpeeds {
            v1: 0.0,
            v2: 1.0,
            v3: -1.0,
        };
        assert_eq!(hb_forward_kinematics(w, &mut b), HbStatus::Ok);
        assert_eq!(b.omega, 0.0);
        assert!(b.vx < 0.0 && b.vy.abs() < 1e-12);
        assert_eq!(hb_hex_direction_for_pattern(w), HbHexDirection::PlusN);
        let mut back = HbWheelSpeeds::default();
        assert_eq!(hb_inverse_kinematics(b, &mut back), HbStatus::Ok);
        assert!((back.v2 - 1.0).abs() < 1e-12 && (back.v3 + 1.0).abs() < 1e-12);
        assert_eq!(
            hb_hex_direction_for_pattern(HbWheelSpeeds {
                v1: 1.0,
                v2: 1.0,
                v3: 1.0
            }),
            HbHexDirection::None
        );

        let (mut s1, mut s2, mut x, mut y) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(hb_arm_react(3, &mut s1, &mut s2, &mut x, &mut y), HbStatus::Ok);
        assert_eq!((s1, s2), (45.0, 90.0));
        assert!(x.hypot(y) <= 15.0);
        assert_eq!(
            hb_arm_react(7, &mut s1, &mut s2, &mut x, &mut y),
            HbStatus::InvalidSensor
        );

        let dt = [5500.0, 5000.0];
        let dd = [110.5, 100.0];
        let mut mean = 0.0;
        assert_eq!(hb_calibrate_speed(dt.as_ptr(), dd.as_ptr(), 2, &mut mean), HbStatus::Ok);
        assert!((mean - (110.5 / 5500.0 + 0.02) / 2.0).abs() < 1e-15);
        assert_eq!(
            hb_calibrate_speed(dt.as_ptr(), dd.as_ptr(), 0, &mut mean),
            HbStatus::Calibration
        );

        assert_eq!(
            CStr::from_ptr(hb_version()).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
    }
}
