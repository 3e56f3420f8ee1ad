//! HTTP and WebSocket front end around a session loop running on its own thread.
//!
//! The loop thread owns the session. Clients reach it only through queues: an
//! ordered command queue in (each command carries a reply slot) and a broadcast of
//! encoded frames out, plus a watch slot holding the latest frame for late joiners.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures::stream::FuturesOrdered;
use futures::{SinkExt, StreamExt};
use std::sync::Arc;
use std::thread::JoinHandle;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tower_http::services::ServeDir;

use crate::protocol::{parse_command, Command, Frame, Reply};
use crate::{LoadedScenario, ServiceError, Session};

/// Frames buffered per client before a slow client starts missing frames.
const FRAME_BUFFER: usize = 4096;

struct Envelope {
    cmd: Command,
    reply: oneshot::Sender<Reply>,
}

/// Encoded frame with its step index.
#[derive(Debug, Clone)]
struct Encoded {
    step: u64,
    json: Arc<str>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::UnboundedSender<Envelope>,
    frames: broadcast::Sender<Encoded>,
    latest: watch::Receiver<Option<Encoded>>,
    info: Arc<serde_json::Value>,
}

/// A running session loop and the channels that reach it.
pub struct SessionLoop {
    state: AppState,
    thread: JoinHandle<Result<(), ServiceError>>,
}

fn encode(frame: &Frame) -> Encoded {
    Encoded {
        step: frame.step,
        json: serde_json::to_string(frame).expect("frames serialize").into(),
    }
}

/// Starts the session loop on a dedicated thread. It steps until the episode ends
/// and keeps answering commands until every command sender is gone.
pub fn spawn_session(scenario: LoadedScenario) -> Result<SessionLoop, ServiceError> {
    let (cmd_tx, mut cmd_rx) = mpsc::unbounded_channel::<Envelope>();
    let (frame_tx, _) = broadcast::channel::<Encoded>(FRAME_BUFFER);
    let (latest_tx, latest_rx) = watch::channel::<Option<Encoded>>(None);
    let info = Arc::new(scenario.info());
    let frames = frame_tx.clone();
    let (ready_tx, ready_rx) = std::sync::mpsc::channel();
    let thread = std::thread::Builder::new()
        .name("session".into())
        .spawn(move || {
            let LoadedScenario {
                config,
                controller,
                surrogate,
                ..
            } = scenario;
            let mut session = match Session::new(
                &config.env,
                &config.start,
                controller.as_ref(),
                &surrogate,
                config.realtime_factor,
            ) {
                Ok(s) => {
                    let _ = ready_tx.send(Ok(()));
                    s
                }
                Err(e) => {
                    let _ = ready_tx.send(Err(e.to_string()));
                    return Err(e);
                }
            };
            session.set_paused(config.start_paused);
            loop {
                while let Ok(env) = cmd_rx.try_recv() {
                    let _ = env.reply.send(session.apply(env.cmd));
                }
                if session.is_paused() || session.is_done() {
                    match cmd_rx.blocking_recv() {
                        Some(env) => {
                            let _ = env.reply.send(session.apply(env.cmd));
                            continue;
                        }
                        None => return Ok(()),
                    }
                }
                if let Some(frame) = session.step()? {
                    let enc = encode(&frame);
                    // no receivers is fine: the episode runs regardless of clients
                    let _ = frame_tx.send(enc.clone());
                    latest_tx.send_replace(Some(enc));
                    if frame.outcome.is_some() {
                        tracing::info!(step = frame.step, outcome = ?frame.outcome, "episode finished");
                        continue;
                    }
                }
                std::thread::sleep(session.step_interval());
            }
        })
        .map_err(ServiceError::Io)?;
    match ready_rx.recv() {
        Ok(Ok(())) => {}
        Ok(Err(message)) => return Err(ServiceError::Config(message)),
        Err(_) => return Err(ServiceError::Config("session thread exited during startup".into())),
    }
    Ok(SessionLoop {
        state: AppState {
            commands: cmd_tx,
            frames,
            latest: latest_rx,
            info,
        },
        thread,
    })
}

impl SessionLoop {
    /// Routes: `/health`, `/scenario`, `/ws` and, if given, static files at `/`.
    pub fn router(&self, static_dir: Option<&std::path::Path>) -> Router {
        let r = Router::new()
            .route("/health", get(health))
            .route("/scenario", get(scenario))
            .route("/ws", get(ws_upgrade));
        let r = match static_dir {
            Some(d) => r.fallback_service(ServeDir::new(d)),
            None => r,
        };
        r.with_state(self.state.clone())
    }

    /// Sends a command as if from a client and waits for the reply.
    pub async fn command(&self, cmd: Command) -> Result<Reply, ServiceError> {
        let (tx, rx) = oneshot::channel();
        self.state
            .commands
            .send(Envelope { cmd, reply: tx })
            .map_err(|_| ServiceError::Closed)?;
        rx.await.map_err(|_| ServiceError::Closed)
    }

    /// Drops this handle's command sender and waits for the loop thread. Only
    /// returns once every router built from this loop has been dropped too.
    pub fn join(self) -> Result<(), ServiceError> {
        drop(self.state);
        self.thread.join().map_err(|_| ServiceError::Closed)?
    }
}

async fn health() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn scenario(State(s): State<AppState>) -> impl IntoResponse {
    Json((*s.info).clone())
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(s): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, s))
}

fn reply_text(r: &Reply) -> String {
    serde_json::to_string(r).expect("replies serialize")
}

/// One connected client: forwards frames out and commands in until either side closes.
async fn client(socket: WebSocket, s: AppState) {
    let (mut tx, mut rx) = socket.split();
    // subscribe before reading the latest frame so nothing falls in between
    let mut frames = s.frames.subscribe();
    let mut last_step = None;
    let latest = s.latest.borrow().clone();
    if let Some(enc) = latest {
        last_step = Some(enc.step);
        if tx.send(Message::Text(enc.json.as_ref().into())).await.is_err() {
            return;
        }
    }
    let mut pending = FuturesOrdered::new();
    loop {
        tokio::select! {
            // replies first: a command's reply was ready before any frame stepped after it
            biased;
            Some(reply) = pending.next(), if !pending.is_empty() => {
                let Ok(reply) = reply else { break };
                if tx.send(Message::Text(reply_text(&reply).into())).await.is_err() {
                    break;
                }
            }
            msg = rx.next() => {
                let text = match msg {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                match parse_command(text.as_str()) {
                    Ok(cmd) => {
                        let (reply_tx, reply_rx) = oneshot::channel();
                        if s.commands.send(Envelope { cmd, reply: reply_tx }).is_err() {
                            break;
                        }
                        pending.push_back(reply_rx);
                    }
                    Err(reply) => {
                        if tx.send(Message::Text(reply_text(&reply).into())).await.is_err() {
                            break;
                        }
                    }
                }
            }
            frame = frames.recv() => {
                match frame {
                    Ok(enc) => {
                        if last_step.is_some_and(|l| enc.step <= l) {
                            continue;
                        }
                        last_step = Some(enc.step);
                        if tx.send(Message::Text(enc.json.as_ref().into())).await.is_err() {
                            break;
                        }
                    }
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::warn!(skipped = n, "client fell behind the frame stream");
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                }
            }
        }
    }
}

/// Serves an already started session loop on `listener` until the future is dropped.
pub async fn serve_on(listener: TcpListener, session: &SessionLoop, static_dir: Option<&std::path::Path>) -> Result<(), ServiceError> {
    axum::serve(listener, session.router(static_dir)).await.map_err(ServiceError::Io)
}

/// Loads the scenario, starts the loop and serves on `addr` until shutdown.
pub async fn serve(addr: &str, scenario: LoadedScenario) -> Result<(), ServiceError> {
    let static_dir = scenario.config.static_dir.clone();
    let session = spawn_session(scenario)?;
    let listener = TcpListener::bind(addr).await.map_err(ServiceError::Io)?;
    tracing::info!(addr = %listener.local_addr().map_err(ServiceError::Io)?, "serving");
    serve_on(listener, &session, static_dir.as_deref()).await
}
