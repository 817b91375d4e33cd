use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use tirettes_service::{serve, AppState, ServiceConfig};

#[tokio::main]
async fn main() -> Result<()> {
    let path: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .context("usage: tirettes-service <config.json>")?;
    let cfg = ServiceConfig::load(&path)?;
    let state = AppState::open(&cfg).context("starting service")?;
    for w in state.warnings() {
        eprintln!("warning: {w}");
    }
    let addr = SocketAddr::new(cfg.host, cfg.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve(listener, Arc::new(state)).await?;
    Ok(())
}
