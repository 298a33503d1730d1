use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use log::{debug, info, warn};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;

use super::{ClientMessage, Role, ServerMessage, Session};
use crate::output::trace_to_jsonl;

const BROADCAST_CAPACITY: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct BridgeConfig {
    /// Wall-clock period between ticks.
    pub tick: Duration,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            tick: Duration::from_millis(u64::from(crate::engine::DEFAULT_DT_MS)),
        }
    }
}

enum Inbound {
    Client {
        msg: ClientMessage,
        reply: mpsc::UnboundedSender<String>,
    },
    ControllerLeft,
}

struct Shared {
    session: Mutex<Session>,
    inbox: mpsc::UnboundedSender<Inbound>,
    states: broadcast::Sender<(u64, String)>,
    /// Broadcast sequence number; only touched with the session locked.
    seq: AtomicU64,
    controller: Mutex<Option<u64>>,
    next_client: AtomicU64,
    tick_ms: u64,
}

impl Shared {
    fn session(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }
}

/// A running bridge. Dropping the handle does not stop the server; call
/// [`ServerHandle::shutdown`].
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.unwrap_or(Ok(()))
    }

    /// Waits until the server exits on its own.
    pub async fn join(self) -> std::io::Result<()> {
        self.task.await.unwrap_or(Ok(()))
    }
}

pub async fn bind(addr: &str) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

fn encode(msg: &ServerMessage) -> String {
    serde_json::to_string(msg).expect("server messages always serialize")
}

/// Starts serving `session` on `listener`.
///
/// Routes: `GET /ws` upgrades to the session protocol, `GET /` returns the
/// current state as JSON, `GET /trace` the session trace as JSON lines.
pub fn serve(listener: TcpListener, session: Session, cfg: BridgeConfig) -> std::io::Result<ServerHandle> {
    let addr = listener.local_addr()?;
    let (inbox, inbox_rx) = mpsc::unbounded_channel();
    let (states, _) = broadcast::channel(BROADCAST_CAPACITY);
    let shared = Arc::new(Shared {
        session: Mutex::new(session),
        inbox,
        states,
        controller: Mutex::new(None),
        seq: AtomicU64::new(0),
        next_client: AtomicU64::new(0),
        tick_ms: cfg.tick.as_millis() as u64,
    });
    let (stop_tx, stop_rx) = oneshot::channel::<()>();

    let ticker = tokio::spawn(tick_loop(shared.clone(), inbox_rx, cfg.tick));
    let app = Router::new()
        .route("/", get(status))
        .route("/trace", get(trace))
        .route("/ws", get(upgrade))
        .with_state(shared);
    let task = tokio::spawn(async move {
        let res = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stop_rx.await;
            })
            .await;
        ticker.abort();
        res
    });
    info!("live bridge listening on {addr}");
    Ok(ServerHandle {
        addr,
        stop: Some(stop_tx),
        task,
    })
}

async fn tick_loop(shared: Arc<Shared>, mut inbox: mpsc::UnboundedReceiver<Inbound>, period: Duration) {
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let state = {
            let mut session = shared.session();
            let mut changed = false;
            while let Ok(inbound) = inbox.try_recv() {
                changed = true;
                match inbound {
                    Inbound::Client { msg, reply } => {
                        if let Err(message) = session.apply(&msg) {
                            let _ = reply.send(encode(&ServerMessage::Error {
                                tick: session.tick(),
                                message,
                            }));
                        }
                    }
                    Inbound::ControllerLeft => session.pause(),
                }
            }
            changed |= session.step();
            changed.then(|| {
                let seq = shared.seq.fetch_add(1, Ordering::Relaxed) + 1;
                (seq, encode(&ServerMessage::State(Box::new(session.state()))))
            })
        };
        if let Some(state) = state {
            // no receivers is fine
            let _ = shared.states.send(state);
        }
    }
}

async fn status(State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    Json(shared.session().state())
}

async fn trace(State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    let body = trace_to_jsonl(shared.session().trace()).unwrap_or_default();
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body)
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, shared))
}

async fn connection(socket: WebSocket, shared: Arc<Shared>) {
    let id = shared.next_client.fetch_add(1, Ordering::Relaxed);
    let role = {
        let mut c = shared.controller.lock().unwrap_or_else(|p| p.into_inner());
        if c.is_none() {
            *c = Some(id);
            Role::Controller
        } else {
            Role::Observer
        }
    };
    debug!("client {id} connected as {role:?}");

    // Subscribe before snapshotting so no state falls between the two.
    let mut states = shared.states.subscribe();
    let (hello, snapshot) = {
        let s = shared.session();
        (
            encode(&ServerMessage::Hello(s.hello(role, shared.tick_ms))),
            (
                shared.seq.load(Ordering::Relaxed),
                encode(&ServerMessage::State(Box::new(s.state()))),
            ),
        )
    };
    let (mut sink, mut stream) = socket.split();
    let (reply_tx, mut reply_rx) = mpsc::unbounded_channel::<String>();

    let writer = tokio::spawn(async move {
        if sink.send(Message::Text(hello.into())).await.is_err() {
            return;
        }
        let mut last = snapshot.0;
        if sink.send(Message::Text(snapshot.1.into())).await.is_err() {
            return;
        }
        loop {
            tokio::select! {
                r = states.recv() => match r {
                    Ok((seq, text)) => {
                        if seq <= last {
                            continue;
                        }
                        last = seq;
                        if sink.send(Message::Text(text.into())).await.is_err() {
                            break;
                        }
                    }
                    // slow reader: skip ahead to whatever is current
                    Err(broadcast::error::RecvError::Lagged(n)) => debug!("dropped {n} states for a slow reader"),
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                r = reply_rx.recv() => match r {
                    Some(text) => {
                        if sink.send(Message::Text(text.into())).await.is_err() {
                            break;
                        }
                    }
                    None => break,
                },
            }
        }
    });

    while let Some(Ok(frame)) = stream.next().await {
        let text = match frame {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => match String::from_utf8(b.to_vec()) {
                Ok(t) => t,
                Err(_) => {
                    reply_error(&shared, &reply_tx, "binary frames must be UTF-8 JSON".into());
                    continue;
                }
            },
            Message::Close(_) => break,
            _ => continue,
        };
        let msg = match serde_json::from_str::<ClientMessage>(&text) {
            Ok(m) => m,
            Err(e) => {
                reply_error(&shared, &reply_tx, format!("malformed message: {e}"));
                continue;
            }
        };
        if role == Role::Observer {
            reply_error(&shared, &reply_tx, "observers are read-only".into());
            continue;
        }
        let _ = shared.inbox.send(Inbound::Client {
            msg,
            reply: reply_tx.clone(),
        });
    }

    if role == Role::Controller {
        *shared.controller.lock().unwrap_or_else(|p| p.into_inner()) = None;
        let _ = shared.inbox.send(Inbound::ControllerLeft);
        warn!("controller {id} disconnected; session paused");
    }
    drop(reply_tx);
    writer.abort();
}

fn reply_error(shared: &Shared, reply: &mpsc::UnboundedSender<String>, message: String) {
    let tick = shared.session().tick();
    let _ = reply.send(encode(&ServerMessage::Error { tick, message }));
}
