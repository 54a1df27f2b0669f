use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use wpsrest_core::auditor::{render_report, run_audit, AuditOptions, EntryStyle, ReportFormat};

/// Probes an HTTP endpoint and reports how it fares against REST constraints.
#[derive(Parser)]
#[command(name = "audit", version)]
struct Args {
    /// Entry point to audit: a raw WPS endpoint or a resource root.
    url: String,
    /// How to treat the entry point.
    #[arg(long, default_value = "auto")]
    style: EntryStyle,
    /// Output format: table or json.
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 10)]
    timeout: u64,
}

#[tokio::main]
async fn main() -> ExitCode {
    wpsrest_cli::init_logging();
    let args = Args::parse();
    let options = AuditOptions {
        style: args.style,
        timeout: Duration::from_secs(args.timeout.max(1)),
    };
    let report = run_audit(&args.url, &options).await;
    print!("{}", render_report(&report, args.format));
    if report.reachable {
        ExitCode::SUCCESS
    } else {
        eprintln!("audit: {} is unreachable", args.url);
        ExitCode::from(2)
    }
}
