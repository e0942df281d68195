use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use forage::agent::PolicyNet;
use forage::env::Role;
use forage::nn::init_params;
use forage::rng::{stream, Domain};
use forage_serve::{replay, router, serve, ServeConfig, ServerMessage, Transcript};
use futures_util::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;

fn helper() -> Arc<PolicyNet> {
    let mut rng = stream(1, Domain::Init, 1);
    Arc::new(PolicyNet::new(Role::Helper, init_params(&mut rng, Role::Helper.obs_len(), 8)).unwrap())
}

async fn start(config: ServeConfig) -> SocketAddr {
    let (tx, rx) = tokio::sync::oneshot::channel();
    let app = router(helper(), config);
    tokio::spawn(serve("127.0.0.1:0".parse().unwrap(), app, move |addr| {
        let _ = tx.send(addr);
    }));
    rx.await.unwrap()
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next(ws: &mut Ws) -> Option<ServerMessage> {
    loop {
        match tokio::time::timeout(Duration::from_secs(10), ws.next()).await.expect("server answers") {
            Some(Ok(Message::Text(t))) => {
                assert!(t.ends_with('\n'));
                return Some(serde_json::from_str(&t).unwrap());
            }
            Some(Ok(Message::Close(_))) | None => return None,
            Some(Ok(_)) => continue,
            Some(Err(e)) => panic!("{e}"),
        }
    }
}

async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.to_string().into())).await.unwrap();
}

#[tokio::test]
async fn full_episode_over_websocket() {
    let addr = start(ServeConfig { seed: 9, ..ServeConfig::default() }).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let session_id = match next(&mut ws).await.unwrap() {
        ServerMessage::Hello { session_id, .. } => session_id,
        other => panic!("{other:?}"),
    };
    assert_eq!(next(&mut ws).await.unwrap().kind(), "state");
    assert_eq!(next(&mut ws).await.unwrap().kind(), "your_turn");

    let mut rewards = Vec::new();
    let mut final_rewards = Vec::new();
    for step in 0..100 {
        let action = if step % 7 == 0 { "left" } else if step % 5 == 0 { "right" } else { "stay" };
        send(&mut ws, &format!("{{\"type\":\"action\",\"action\":\"{action}\"}}\n")).await;
        match next(&mut ws).await.unwrap() {
            ServerMessage::State { reward, t, .. } => {
                assert_eq!(t, step + 1);
                rewards.push(reward);
                assert_eq!(next(&mut ws).await.unwrap().kind(), "your_turn");
            }
            ServerMessage::EpisodeEnd { rewards: r, prime_actions, .. } => {
                assert_eq!(step, 99);
                assert_eq!(prime_actions.len(), 100);
                final_rewards = r;
            }
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(&final_rewards[..99], &rewards[..]);
    assert!(next(&mut ws).await.is_none(), "server closes after the episode");

    let transcript = Transcript {
        seed: 9,
        session_id,
        prime_actions: (0..100)
            .map(|s| if s % 7 == 0 { "left" } else if s % 5 == 0 { "right" } else { "stay" }.parse().unwrap())
            .collect(),
    };
    let offline = replay(&helper(), &transcript).unwrap();
    assert_eq!(offline.rewards.iter().map(|r| r.as_f64()).collect::<Vec<_>>(), final_rewards);
}

#[tokio::test]
async fn extra_actions_in_one_frame_are_rejected() {
    let addr = start(ServeConfig::default()).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    for _ in 0..3 {
        next(&mut ws).await.unwrap();
    }
    send(&mut ws, "{\"type\":\"action\",\"action\":\"stay\"}\n{\"type\":\"action\",\"action\":\"stay\"}\n").await;
    let kinds = [next(&mut ws).await.unwrap(), next(&mut ws).await.unwrap(), next(&mut ws).await.unwrap()]
        .map(|m| m.kind());
    assert_eq!(kinds, ["state", "your_turn", "error"]);
    send(&mut ws, "{\"type\":\"action\",\"action\":\"up\"}").await;
    assert_eq!(next(&mut ws).await.unwrap().kind(), "error");
}

#[tokio::test]
async fn idle_client_gets_auto_stay() {
    let addr = start(ServeConfig { step_timeout_ms: 30, ..ServeConfig::default() }).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    next(&mut ws).await.unwrap();
    next(&mut ws).await.unwrap();
    match next(&mut ws).await.unwrap() {
        ServerMessage::YourTurn { deadline_ms, .. } => assert_eq!(deadline_ms, Some(30)),
        other => panic!("{other:?}"),
    }
    match next(&mut ws).await.unwrap() {
        ServerMessage::State { auto_stay, prime_action, t, .. } => {
            assert!(auto_stay);
            assert_eq!(prime_action.as_deref(), Some("stay"));
            assert_eq!(t, 1);
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn static_files_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>forage</html>").unwrap();
    let addr = start(ServeConfig { static_dir: Some(dir.path().to_path_buf()), ..ServeConfig::default() }).await;
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream.write_all(b"GET /index.html HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut body = String::new();
    stream.read_to_string(&mut body).await.unwrap();
    assert!(body.starts_with("HTTP/1.1 200"));
    assert!(body.ends_with("<html>forage</html>"));
}
