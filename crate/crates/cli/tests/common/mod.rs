#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use isabel::{AppState, ServiceConfig};

pub const ROW_1: &str = "I want a computer with 1 TB of storage, graphic card to play videogames and shoes.";
pub const ROW_2: &str = "I want a computer with 512 GB of storage and 8GB of RAM memory";
pub const ROW_3: &str = "I want a computer with i5 processor, 512 GB of storage and 8GB of RAM memory";

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/kg.json")
}

pub struct Server {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
}

impl Server {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
    }
}

/// Start the service on an ephemeral port. `preload` decides whether the
/// graph is loaded before the first request.
pub async fn start(config: ServiceConfig, preload: bool) -> Server {
    let state = Arc::new(AppState::new(config));
    if preload {
        state.reload().expect("graph loads");
    }
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel();
    let s = state.clone();
    tokio::spawn(async move {
        isabel::service::serve(listener, s, async {
            let _ = rx.await;
        })
        .await
        .unwrap();
    });
    Server {
        addr,
        state,
        stop: Some(tx),
    }
}

pub fn fixture_config() -> ServiceConfig {
    ServiceConfig {
        kg_path: Some(fixture_path()),
        ..ServiceConfig::default()
    }
}
