//! HTTP/JSON service exposing models, concern guidance and per-tenant
//! customization sessions.
//!
//! Models are immutable once loaded and shared by every session. Each session
//! owns its customization and runs in its own task, so operations on one
//! session are totally ordered while distinct sessions proceed in parallel.

mod routes;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use metacust_core::AppModel;
use tokio::net::TcpListener;

pub use routes::router;
pub use session::SessionHandle;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_SESSIONS: usize = 10_000;
pub const DEFAULT_TENANT: &str = "tenant";

#[derive(Debug, Clone)]
pub struct Config {
    pub listen: SocketAddr,
    pub snapshot_dir: Option<PathBuf>,
    pub max_sessions: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: DEFAULT_LISTEN.parse().expect("valid default address"),
            snapshot_dir: None,
            max_sessions: DEFAULT_MAX_SESSIONS,
        }
    }
}

#[derive(Default)]
pub struct Store {
    models: RwLock<HashMap<String, Arc<AppModel>>>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl Store {
    pub fn model(&self, id: &str) -> Option<Arc<AppModel>> {
        self.models.read().expect("model store poisoned").get(id).cloned()
    }

    pub fn session(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().expect("session store poisoned").get(id).cloned()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session store poisoned").len()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub config: Arc<Config>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState {
            store: Arc::new(Store::default()),
            config: Arc::new(config),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })
}

/// Serves until ctrl-c.
pub async fn serve(config: Config) -> Result<(), ServeError> {
    if let Some(dir) = &config.snapshot_dir {
        tokio::fs::create_dir_all(dir).await?;
    }
    let listener = bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let app = router(AppState::new(config));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Binds `config.listen` (port 0 picks a free port) and serves in a
/// background task. Returns the bound address.
pub async fn spawn(config: Config) -> Result<(SocketAddr, tokio::task::JoinHandle<()>), ServeError> {
    if let Some(dir) = &config.snapshot_dir {
        tokio::fs::create_dir_all(dir).await?;
    }
    let listener = bind(config.listen).await?;
    let addr = listener.local_addr()?;
    let app = router(AppState::new(config));
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    Ok((addr, handle))
}
