#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use tirettes_service::{serve, AppState, ServiceConfig};
use tokio::task::JoinHandle;

pub fn fixtures_pack() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures_pack.json")
}

pub struct Running {
    pub base: String,
    pub task: JoinHandle<std::io::Result<()>>,
}

impl Running {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn stop(self) {
        self.task.abort();
        let _ = self.task.await;
    }
}

pub async fn start(log_dir: &Path, hints: bool) -> Running {
    let mut cfg = ServiceConfig::new(fixtures_pack(), log_dir);
    cfg.hints = hints;
    let state = AppState::open(&cfg).unwrap();
    assert!(state.warnings().is_empty(), "{:?}", state.warnings());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let task = tokio::spawn(serve(listener, Arc::new(state)));
    Running { base, task }
}
