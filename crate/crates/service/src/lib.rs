//! Preview service: runs diffusion on small uploaded crops as cancellable
//! background jobs and serves periodic PNG frames for polling clients.

mod api;
mod jobs;

pub use api::{router, ApiError, PresetView};
pub use jobs::{JobId, JobState, JobStatus, JobStore};

use std::net::SocketAddr;

/// Frame stride used when a request does not specify one.
pub const DEFAULT_FRAME_STRIDE: usize = 64;
/// Largest accepted crop edge, in pixels.
pub const DEFAULT_MAX_EDGE: usize = 512;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Jobs diffusing at the same time.
    pub max_running: usize,
    /// Jobs waiting to run; further submissions are refused.
    pub queue_capacity: usize,
    pub max_width: usize,
    pub max_height: usize,
    pub default_frame_stride: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_running: 1,
            queue_capacity: 8,
            max_width: DEFAULT_MAX_EDGE,
            max_height: DEFAULT_MAX_EDGE,
            default_frame_stride: DEFAULT_FRAME_STRIDE,
        }
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("preview service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(JobStore::new(config))).await
}
