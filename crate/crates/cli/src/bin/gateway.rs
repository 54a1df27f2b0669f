use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use wpsrest_core::gateway::{Gateway, GatewayConfig, DEFAULT_CACHE_TTL};
use wpsrest_core::semantics::DEFAULT_RETRY_AFTER_SECS;

/// Resource-oriented HTTP facade over a WPS 1.0.0 endpoint.
#[derive(Parser)]
#[command(name = "gateway", version)]
struct Args {
    /// Port to listen on (0 picks a free one).
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// WPS endpoint URL, e.g. http://localhost:8081/wps.
    #[arg(long)]
    backend: String,
    /// Absolute URI clients use to reach this gateway.
    #[arg(long)]
    base_uri: String,
    /// Seconds a fetched process catalog stays fresh.
    #[arg(long, default_value_t = DEFAULT_CACHE_TTL.as_secs())]
    cache_ttl: u64,
    /// Retry-After value sent with 503 answers, in seconds.
    #[arg(long, default_value_t = DEFAULT_RETRY_AFTER_SECS)]
    retry_after: u64,
    /// Append-only job journal; replayed on start.
    #[arg(long)]
    journal: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    wpsrest_cli::init_logging();
    let args = Args::parse();
    let mut config = GatewayConfig::new(args.base_uri, args.backend);
    config.port = args.port;
    config.cache_ttl = Duration::from_secs(args.cache_ttl);
    config.retry_after_secs = args.retry_after;
    config.journal = args.journal;
    let gateway = match Gateway::from_config(&config) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("gateway: {e}");
            return ExitCode::from(2);
        }
    };
    match wpsrest_cli::serve("gateway", config.port, Arc::new(gateway)).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gateway: {e}");
            ExitCode::FAILURE
        }
    }
}
