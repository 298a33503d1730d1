use std::time::Duration;

use hribench::bridge::{
    bind, script_from_steers, serve, BridgeConfig, ClientMessage, Role, ServerMessage, Session, StateMessage,
};
use hribench::engine::{run_scenario, Pedestrian, TraceRecord};
use hribench::output::trace_to_jsonl;
use hribench::policy::PolicyKind;
use hribench::Vec2;

use super::ws::{http_get, Client};

fn state(m: &ServerMessage) -> Option<StateMessage> {
    match m {
        ServerMessage::State(s) => Some((**s).clone()),
        _ => None,
    }
}

/// Steers a blank-world session through a fixed plan from a scripted client,
/// then rebuilds the pedestrian script from the streamed steering and runs
/// it offline.
///
/// Returns the streamed trace, the offline trace and the server's `/trace`,
/// all as JSON lines.
pub async fn steer_and_replay(policy: PolicyKind) -> (String, String, String) {
    let session = Session::blank(policy).unwrap();
    let cfg = session.config().clone();
    let start = session.initial_world().pedestrians[0];
    let listener = bind("127.0.0.1:0").await.unwrap();
    let server = serve(
        listener,
        session,
        BridgeConfig {
            tick: Duration::from_millis(5),
        },
    )
    .unwrap();

    let mut c = Client::connect(server.addr).await;
    match c.recv().await {
        ServerMessage::Hello(h) => assert_eq!(h.role, Role::Controller),
        other => panic!("expected hello, got {other:?}"),
    }
    c.send(&ClientMessage::Pause { tick: None }).await;
    c.send(&ClientMessage::Reset { tick: None }).await;
    c.recv_until(|m| state(m).filter(|s| s.epoch == 1 && s.paused && s.tick == 0))
        .await;

    let plan = [(-80.0, 0.0), (-40.0, 30.0), (0.0, -60.0), (90.0, 10.0)];
    let mut states: Vec<StateMessage> = Vec::new();
    c.send(&ClientMessage::Resume { tick: None }).await;
    for (vx, vy) in plan {
        c.send(&ClientMessage::Steer { tick: None, vx, vy }).await;
        let target = states.last().map_or(0, |s| s.tick) + 25;
        loop {
            let s = c.recv_until(state).await;
            let done = s.tick >= target;
            states.push(s);
            if done {
                break;
            }
        }
    }
    c.send(&ClientMessage::Pause { tick: None }).await;
    loop {
        let s = c.recv_until(state).await;
        let done = s.paused;
        states.push(s);
        if done {
            break;
        }
    }

    // one entry per tick; acknowledgements repeat the current tick
    let mut ticks: Vec<StateMessage> = Vec::new();
    for s in states.into_iter().filter(|s| s.record.is_some()) {
        if ticks.last().is_none_or(|l| l.tick < s.tick) {
            ticks.push(s);
        }
    }
    for (k, s) in ticks.iter().enumerate() {
        assert_eq!(s.tick, k as u64 + 1, "gap in streamed states");
    }
    let live: Vec<TraceRecord> = ticks.iter().filter_map(|s| s.record.clone()).collect();
    assert!(
        live.iter().any(|r| !r.command.is_hold()),
        "steering never reached the robot"
    );
    let steers: Vec<Vec2> = ticks.iter().map(|s| s.steer).collect();

    let peds = vec![Pedestrian {
        radius: start.radius,
        script: script_from_steers(start.center, &steers, cfg.dt_ms),
    }];
    let duration = steers.len() as u64 * u64::from(cfg.dt_ms);
    let (offline, _) = run_scenario(&peds, policy, &cfg, duration).unwrap();
    let served = http_get(server.addr, "/trace").await;
    c.close().await;
    server.shutdown().await.unwrap();
    (
        trace_to_jsonl(&live).unwrap(),
        trace_to_jsonl(&offline).unwrap(),
        served,
    )
}
