//! WebSocket transport: one [`Session`] per connection at `/ws`, plus an
//! optional static directory for the browser client.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use forage::agent::PolicyNet;
use forage::env::Action;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::session::Session;
use crate::wire::ServerMessage;

#[derive(Debug, Clone, Default)]
pub struct ServeConfig {
    /// Master seed of the session episodes; session `i` uses stream `i`.
    pub seed: u64,
    /// Auto-`stay` after this many milliseconds without an action; 0 waits
    /// forever.
    pub step_timeout_ms: u64,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

struct App {
    helper: Arc<PolicyNet>,
    config: ServeConfig,
    next_session: AtomicU64,
}

pub fn router(helper: Arc<PolicyNet>, config: ServeConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let app = Arc::new(App {
        helper,
        config,
        next_session: AtomicU64::new(0),
    });
    let router = Router::new().route("/ws", get(upgrade)).with_state(app);
    match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// Binds `addr` and serves until the process exits. `on_bound` receives the
/// actual address, which matters when port 0 was requested.
pub async fn serve(addr: SocketAddr, router: Router, on_bound: impl FnOnce(SocketAddr)) -> Result<(), ServeError> {
    let listener = TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(app): State<Arc<App>>) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, app))
}

async fn send_all(socket: &mut WebSocket, messages: &[ServerMessage]) -> bool {
    for m in messages {
        if socket.send(Message::Text(m.to_line().into())).await.is_err() {
            return false;
        }
    }
    true
}

async fn run_session(mut socket: WebSocket, app: Arc<App>) {
    let id = app.next_session.fetch_add(1, Ordering::Relaxed);
    let timeout = Some(app.config.step_timeout_ms).filter(|&ms| ms > 0);
    let (mut session, opening) = match Session::start(app.helper.clone(), app.config.seed, id) {
        Ok((s, _)) => {
            let s = s.with_deadline(timeout);
            let opening = s.opening();
            (s, opening)
        }
        Err(e) => {
            let _ = send_all(&mut socket, &[ServerMessage::Error { message: e.to_string() }]).await;
            return;
        }
    };
    if !send_all(&mut socket, &opening).await {
        return;
    }
    while !session.is_finished() {
        let incoming = match timeout {
            Some(ms) => match tokio::time::timeout(Duration::from_millis(ms), socket.recv()).await {
                Ok(m) => m,
                Err(_) => {
                    let replies = session.handle_action(Action::Stay, true);
                    if !send_all(&mut socket, &replies).await {
                        return;
                    }
                    continue;
                }
            },
            None => socket.recv().await,
        };
        let text = match incoming {
            Some(Ok(Message::Text(t))) => t,
            Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
            Some(Ok(_)) => continue,
        };
        // One action per `your_turn`: a frame carrying several lines only
        // gets its first valid action applied.
        let mut acted = false;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let replies = if acted {
                vec![ServerMessage::Error {
                    message: "one action per your_turn".into(),
                }]
            } else {
                session.handle_line(line)
            };
            acted |= replies.iter().any(|m| m.kind() != "error");
            if !send_all(&mut socket, &replies).await {
                return;
            }
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}
