//! HTTP facade over the solution gallery.
//!
//! | method | path | result |
//! |---|---|---|
//! | GET  | `/api/solutions?cursor=&skeleton=` | [`SolutionPage`] |
//! | GET  | `/api/solutions/{id}` | solution without its trace, plus score |
//! | GET  | `/api/solutions/{id}/trace` | the stored trace file, byte for byte |
//! | POST | `/api/solutions` | create from a `SolutionRecord`; 201 + [`Created`] |
//! | POST | `/api/solutions/{id}/ratings` | [`RatingRequest`] in, `CrowdScore` out |
//! | GET  | `/api/solutions/top?skeleton=&k=` | best-rated good solutions |
//! | GET  | `/healthz` | 200 when the store directory is readable |
//!
//! Every non-2xx response carries an [`ApiError`] body.

mod api;
pub mod client;
mod error;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use crowdwalk_core::gallery::{GalleryError, GalleryStore, DEFAULT_PAGE_SIZE, DEFAULT_THRESHOLD};
use thiserror::Error;
use tokio::net::TcpListener;

pub use api::{router, AppState, Created, RatingRequest, SolutionPage, DEFAULT_TOP_K, MAX_TOP_K};
pub use client::{Client, ClientError};
pub use error::ApiError;

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub store_path: PathBuf,
    pub threshold: f64,
    pub page_size: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store_path: PathBuf::from("gallery"),
            threshold: DEFAULT_THRESHOLD,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("cannot open store at {path}: {source}")]
    Store { path: PathBuf, source: GalleryError },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

/// A store opened and a socket bound, ready to [`run`](Server::run).
pub struct Server {
    listener: TcpListener,
    state: AppState,
}

impl Server {
    pub async fn bind(config: &ServiceConfig) -> Result<Self, ServiceError> {
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(ServiceError::Config(format!("threshold {} is outside [0, 1]", config.threshold)));
        }
        if config.page_size == 0 {
            return Err(ServiceError::Config("page_size must be positive".into()));
        }
        let path = config.store_path.clone();
        let threshold = config.threshold;
        let store = tokio::task::spawn_blocking(move || GalleryStore::open(path, threshold))
            .await
            .map_err(|e| ServiceError::Config(format!("store open task failed: {e}")))?
            .map_err(|source| ServiceError::Store { path: config.store_path.clone(), source })?;
        let listener = TcpListener::bind(config.bind)
            .await
            .map_err(|source| ServiceError::Bind { addr: config.bind, source })?;
        Ok(Self { listener, state: AppState { store: Arc::new(store), page_size: config.page_size } })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn store(&self) -> Arc<GalleryStore> {
        self.state.store.clone()
    }

    /// Serves until `shutdown` resolves, then stops accepting and lets
    /// in-flight requests finish. Store writes are synchronous, so a
    /// request that completed has already reached disk.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        let addr = self.local_addr();
        tracing::info!(%addr, solutions = self.state.store.len(), "serving gallery");
        axum::serve(self.listener, router(self.state))
            .with_graceful_shutdown(shutdown)
            .await
            .map_err(ServiceError::Serve)?;
        tracing::info!("server stopped");
        Ok(())
    }
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Binds and serves until Ctrl-C / SIGTERM.
pub async fn serve(config: &ServiceConfig) -> Result<(), ServiceError> {
    Server::bind(config).await?.run(shutdown_signal()).await
}
