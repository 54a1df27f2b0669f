//! Shared plumbing for the command-line binaries.

use std::sync::Arc;

use tracing_subscriber::EnvFilter;
use wpsrest_core::server::{self, HttpHandler};

/// Logs to stderr, filtered by `RUST_LOG` (default `info`).
pub fn init_logging() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .try_init();
}

/// Binds `port` on all interfaces, announces the address on stdout and
/// serves until Ctrl-C.
pub async fn serve<H: HttpHandler>(name: &str, port: u16, handler: Arc<H>) -> std::io::Result<()> {
    let listener = server::bind(port).await?;
    let addr = listener.local_addr()?;
    let handle = server::spawn(listener, handler)?;
    println!("{name} listening on http://{addr}");
    tokio::signal::ctrl_c().await?;
    handle.shutdown().await;
    Ok(())
}
