use hribench::arm::default_pose;
use hribench::engine::{compute_metrics, run_scenario, Pedestrian, PedestrianScript, SimConfig, Waypoint};
use hribench::output::trace_to_jsonl;
use hribench::policy::{EscapeTable, PolicyKind, PolicyState};
use hribench::Vec2;
use proptest::prelude::*;

fn script() -> impl Strategy<Value = PedestrianScript> {
    prop::collection::vec((-250.0..250.0f64, -250.0..250.0f64), 2..6).prop_map(|pts| {
        let n = pts.len() as u64;
        let wps = pts
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| Waypoint {
                t_ms: i as u64 * 8000 / (n - 1),
                position: Vec2::new(x, y),
            })
            .collect();
        PedestrianScript::new(wps).unwrap()
    })
}

fn pedestrians() -> impl Strategy<Value = Vec<Pedestrian>> {
    prop::collection::vec((script(), 5.0..25.0f64), 1..3).prop_map(|v| {
        v.into_iter()
            .map(|(script, radius)| Pedestrian { radius, script })
            .collect()
    })
}

fn policy() -> impl Strategy<Value = PolicyKind> {
    prop_oneof![Just(PolicyKind::ArmFirst), Just(PolicyKind::BaseFirst)]
}

fn config() -> impl Strategy<Value = SimConfig> {
    (prop_oneof![Just(10u32), Just(50), Just(100)], 0.0..2.0f64, any::<u64>()).prop_map(|(dt_ms, noise, seed)| {
        let mut cfg = SimConfig {
            dt_ms,
            seed,
            ..SimConfig::default()
        };
        cfg.sensors.noise_amplitude = noise;
        cfg
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_is_consistent(peds in pedestrians(), p in policy(), cfg in config()) {
        let (trace, metrics) = run_scenario(&peds, p, &cfg, 8000).unwrap();
        prop_assert_eq!(trace.len() as u64, 8000 / u64::from(cfg.dt_ms));
        prop_assert_eq!(compute_metrics(&trace).unwrap(), metrics);
        let step = cfg.step_length();
        let body = cfg.geometry.body_radius();
        let esc = EscapeTable::new(&cfg.geometry, &cfg.sensors);
        let mut policy_state = PolicyState::IDLE;

        for (k, r) in trace.iter().enumerate() {
            prop_assert_eq!(r.t_ms, (k as u64 + 1) * u64::from(cfg.dt_ms));

            // distances agree with the logged positions
            let robot = r.robot_pose.position();
            let (i, d, c) = r
                .pedestrians
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let d = (o.center - robot).norm();
                    (i, d, d - body - o.radius)
                })
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .unwrap();
            prop_assert_eq!(r.nearest_pedestrian, Some(i));
            prop_assert!((r.center_distance.unwrap() - d).abs() < 1e-9);
            prop_assert!((r.clearance.unwrap() - c).abs() < 1e-9);

            // the policy alone, fed the logged readings, issues the logged command
            let (cmd, next) = p.step(&r.readings, &policy_state, &cfg.safety, &esc);
            prop_assert_eq!(cmd, r.command);
            prop_assert_eq!(next.phase, r.phase);
            policy_state = next;

            prop_assert_eq!(r.arm, r.command.arm.unwrap_or_else(default_pose));
            prop_assert_eq!(r.arm_reacting, r.arm != default_pose());

            if let Some(next_rec) = trace.get(k + 1) {
                let moved = next_rec.robot_pose.position() - robot;
                match r.command.base {
                    None => prop_assert_eq!(moved, Vec2::ZERO),
                    Some(dir) => {
                        let want = r.robot_pose.to_world_dir(dir.unit_vector(&cfg.geometry)) * step;
                        prop_assert!((moved - want).norm() < 1e-9);
                    }
                }
                prop_assert!(moved.norm() <= step + 1e-9);
            }
        }
        for (ped, idx) in peds.iter().zip(0..) {
            let limit = ped.script.max_speed() * f64::from(cfg.dt_ms) + 1e-9;
            for w in trace.windows(2) {
                let jump = (w[1].pedestrians[idx].center - w[0].pedestrians[idx].center).norm();
                prop_assert!(jump <= limit, "pedestrian jumped {jump} > {limit}");
            }
        }
    }

    #[test]
    fn runs_are_byte_identical(peds in pedestrians(), p in policy(), cfg in config()) {
        let (a, _) = run_scenario(&peds, p, &cfg, 8000).unwrap();
        let (b, _) = run_scenario(&peds, p, &cfg, 8000).unwrap();
        prop_assert_eq!(trace_to_jsonl(&a).unwrap(), trace_to_jsonl(&b).unwrap());
    }
}

#[test]
fn slew_limits_arm_motion() {
    let ped = Pedestrian {
        radius: 15.0,
        script: PedestrianScript::new(vec![
            Waypoint {
                t_ms: 0,
                position: Vec2::new(60.0, 0.0),
            },
            Waypoint {
                t_ms: 5000,
                position: Vec2::new(60.0, 0.0),
            },
        ])
        .unwrap(),
    };
    let cfg = SimConfig {
        arm_slew_deg_per_step: Some(5.0),
        ..SimConfig::default()
    };
    let (trace, _) = run_scenario(&[ped], PolicyKind::ArmFirst, &cfg, 5000).unwrap();
    let mut prev = default_pose();
    for r in &trace {
        assert!((r.arm.servo1() - prev.servo1()).abs() <= 5.0 + 1e-12);
        assert!((r.arm.servo2() - prev.servo2()).abs() <= 5.0 + 1e-12);
        prev = r.arm;
    }
}
