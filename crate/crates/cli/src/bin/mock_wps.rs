use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use wpsrest_core::mock::{FaultConfig, FaultMode, MockWps};

/// Simulated WPS 1.0.0 server offering the topology processes.
#[derive(Parser)]
#[command(name = "mock-wps", version)]
struct Args {
    /// Port to listen on (0 picks a free one).
    #[arg(long, default_value_t = 8081)]
    port: u16,
    /// Fault injected into every Execute: none, server-busy or drop.
    #[arg(long, default_value = "none")]
    fault: FaultMode,
    /// Extra latency added before each Execute answer, in milliseconds.
    #[arg(long, default_value_t = 0)]
    latency_ms: u64,
}

#[tokio::main]
async fn main() -> ExitCode {
    wpsrest_cli::init_logging();
    let args = Args::parse();
    let fault = match FaultConfig::new(args.fault, Duration::from_millis(args.latency_ms)) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("mock-wps: {e}");
            return ExitCode::from(2);
        }
    };
    match wpsrest_cli::serve("mock-wps", args.port, Arc::new(MockWps::new(fault))).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mock-wps: {e}");
            ExitCode::FAILURE
        }
    }
}
