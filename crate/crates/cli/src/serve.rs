//! Live session: a fixed-rate control task fed by TCP and WebSocket clients.
//! Network tasks talk to the control task only through an input queue and a
//! telemetry broadcast; slow readers lose telemetry, never inputs.

use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{Context, Result};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc};
use tpo_core::station::{
    decode_message, encode_line, session_handshake, ConfigSnapshot, LogWriter, MonotoneStream,
    RoleRegistry, SessionRole, Stack, WireMessage,
};
use tracing::{info, warn};

pub struct ServeOptions {
    pub config: ConfigSnapshot,
    pub tcp_port: u16,
    pub http_port: u16,
    pub ui_dir: PathBuf,
    pub log: PathBuf,
    pub duration: Option<f64>,
}

#[derive(Clone)]
struct Hub {
    inputs: mpsc::UnboundedSender<WireMessage>,
    telemetry: broadcast::Sender<Arc<str>>,
    roles: Arc<Mutex<RoleRegistry>>,
    ui_dir: Arc<PathBuf>,
}

pub async fn serve(opts: ServeOptions) -> Result<()> {
    let stack = Stack::new(&opts.config)?;
    let file =
        File::create(&opts.log).with_context(|| format!("creating {}", opts.log.display()))?;
    let log = LogWriter::new(BufWriter::new(file), &opts.config)?;
    let (input_tx, input_rx) = mpsc::unbounded_channel();
    let (telemetry, _) = broadcast::channel(256);
    let hub = Hub {
        inputs: input_tx,
        telemetry: telemetry.clone(),
        roles: Arc::new(Mutex::new(RoleRegistry::default())),
        ui_dir: Arc::new(opts.ui_dir),
    };

    let tcp = TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], opts.tcp_port))).await?;
    let http = TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], opts.http_port))).await?;
    info!(
        tcp = %tcp.local_addr()?,
        http = %http.local_addr()?,
        condition = %opts.config.condition,
        "session listening"
    );
    tokio::spawn(accept_tcp(tcp, hub.clone()));
    let app = Router::new()
        .route("/ws", get(ws_upgrade))
        .fallback(static_asset)
        .with_state(hub.clone());
    tokio::spawn(async move {
        if let Err(e) = axum::serve(http, app).await {
            warn!("http server stopped: {e}");
        }
    });

    let control = control_loop(stack, log, input_rx, telemetry, opts.duration);
    tokio::select! {
        result = control => result,
        _ = tokio::signal::ctrl_c() => {
            info!("interrupted");
            Ok(())
        }
    }
}

async fn control_loop(
    mut stack: Stack,
    mut log: LogWriter<BufWriter<File>>,
    mut inputs: mpsc::UnboundedReceiver<WireMessage>,
    telemetry: broadcast::Sender<Arc<str>>,
    duration: Option<f64>,
) -> Result<()> {
    let mut interval = tokio::time::interval(Duration::from_micros(stack.period().micros() as u64));
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Burst);
    let result = loop {
        interval.tick().await;
        if duration.is_some_and(|d| stack.now().secs() > d) {
            break Ok(());
        }
        // Inputs are restamped with session time so the log replays exactly.
        let now = stack.now();
        while let Ok(message) = inputs.try_recv() {
            if let Err(e) = stack.push_input(restamp(message, now)) {
                warn!("dropped input: {e}");
            }
        }
        let record = match stack.step() {
            Ok(r) => r,
            Err(e) => break Err(e.into()),
        };
        if let Err(e) = log.append_tick(&record) {
            break Err(e.into());
        }
        for message in &record.outputs {
            if let Ok(line) = encode_line(message) {
                // no receivers is fine
                let _ = telemetry.send(line.into());
            }
        }
    };
    if let Err(e) = &result {
        warn!("session terminated: {e}");
    }
    log.flush()?;
    result
}

fn restamp(message: WireMessage, now: tpo_core::time::Timestamp) -> WireMessage {
    match message {
        WireMessage::OperatorInput {
            right_wrist,
            left_wrist,
            buttons,
            ..
        } => WireMessage::OperatorInput {
            t: now,
            right_wrist,
            left_wrist,
            buttons,
        },
        WireMessage::ExternalCommand { token, .. } => {
            WireMessage::ExternalCommand { t: now, token }
        }
        other => other,
    }
}

/// Per-connection protocol state shared by TCP and WebSocket clients.
struct Client {
    hub: Hub,
    role: Option<SessionRole>,
    stream: MonotoneStream,
}

enum Verdict {
    Reply(String),
    Continue,
    Close,
}

impl Client {
    fn new(hub: Hub) -> Self {
        Self {
            hub,
            role: None,
            stream: MonotoneStream::default(),
        }
    }

    fn on_frame(&mut self, frame: &[u8]) -> Verdict {
        let message = match decode_message(frame) {
            Ok(m) => m,
            Err(e) => {
                warn!("bad frame: {e}");
                return if self.role.is_some() {
                    Verdict::Continue
                } else {
                    Verdict::Close
                };
            }
        };
        let Some(role) = self.role else {
            let accepted =
                session_handshake(&mut self.hub.roles.lock().expect("registry lock"), &message);
            return match accepted {
                Ok(role) => {
                    info!(?role, "client joined");
                    self.role = Some(role);
                    Verdict::Reply(
                        encode_line(&WireMessage::handshake(role)).expect("handshake encodes"),
                    )
                }
                Err(e) => {
                    warn!("handshake rejected: {e}");
                    Verdict::Close
                }
            };
        };
        if let Err(e) = self.stream.check(&message) {
            warn!("dropped frame: {e}");
            return Verdict::Continue;
        }
        let allowed = matches!(
            (&message, role),
            (WireMessage::OperatorInput { .. }, SessionRole::Operator)
                | (
                    WireMessage::ExternalCommand { .. },
                    SessionRole::Operator | SessionRole::CommandChannel,
                )
        );
        if allowed {
            let _ = self.hub.inputs.send(message);
        } else {
            warn!(?role, "ignored frame not allowed for role");
        }
        Verdict::Continue
    }
}

impl Drop for Client {
    fn drop(&mut self) {
        if let Some(role) = self.role {
            self.hub.roles.lock().expect("registry lock").release(role);
            info!(?role, "client left");
        }
    }
}

async fn accept_tcp(listener: TcpListener, hub: Hub) {
    loop {
        match listener.accept().await {
            Ok((socket, peer)) => {
                tokio::spawn(tcp_client(socket, peer, hub.clone()));
            }
            Err(e) => warn!("accept failed: {e}"),
        }
    }
}

async fn tcp_client(socket: TcpStream, peer: SocketAddr, hub: Hub) {
    let (read, mut write) = socket.into_split();
    let mut lines = BufReader::new(read).lines();
    let mut telemetry = hub.telemetry.subscribe();
    let mut client = Client::new(hub);
    loop {
        tokio::select! {
            line = lines.next_line() => match line {
                Ok(Some(line)) => match client.on_frame(line.as_bytes()) {
                    Verdict::Reply(reply) => {
                        if write.write_all(format!("{reply}\n").as_bytes()).await.is_err() {
                            break;
                        }
                    }
                    Verdict::Continue => {}
                    Verdict::Close => break,
                },
                _ => break,
            },
            frame = telemetry.recv(), if client.role.is_some() => match frame {
                Ok(frame) => {
                    if write.write_all(format!("{frame}\n").as_bytes()).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => warn!(%peer, "dropped {n} stale frames"),
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(hub): State<Hub>) -> Response {
    ws.on_upgrade(move |socket| ws_client(socket, hub))
}

async fn ws_client(socket: WebSocket, hub: Hub) {
    let (mut sink, mut source) = socket.split();
    let mut telemetry = hub.telemetry.subscribe();
    let mut client = Client::new(hub);
    loop {
        tokio::select! {
            incoming = source.next() => match incoming {
                Some(Ok(Message::Text(text))) => match client.on_frame(text.as_bytes()) {
                    Verdict::Reply(reply) => {
                        if sink.send(Message::Text(reply.into())).await.is_err() {
                            break;
                        }
                    }
                    Verdict::Continue => {}
                    Verdict::Close => break,
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            frame = telemetry.recv(), if client.role.is_some() => match frame {
                Ok(frame) => {
                    if sink.send(Message::Text(frame.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

const NO_UI: &str = "<!doctype html><title>tpo</title><p>Operator UI not built. \
Telemetry is available on the <code>/ws</code> WebSocket.</p>";

async fn static_asset(State(hub): State<Hub>, uri: Uri) -> Response {
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::BAD_REQUEST.into_response();
    }
    let path = hub.ui_dir.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) if rel == Path::new("index.html") => {
            ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], NO_UI).into_response()
        }
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
