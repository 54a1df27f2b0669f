//! Automated REST assessment of an HTTP endpoint, one check per table row.

mod probes;
mod report;

pub use report::{parse_table, render_report, ReportFormat, TableParseError};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PROBE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    Partial,
    No,
    Error,
    NotProbed,
}

impl Verdict {
    pub const ALL: [Verdict; 5] = [
        Verdict::Yes,
        Verdict::Partial,
        Verdict::No,
        Verdict::Error,
        Verdict::NotProbed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::Partial => "partial",
            Verdict::No => "no",
            Verdict::Error => "error",
            Verdict::NotProbed => "not-probed",
        }
    }

    /// Position on the conformance scale no < partial < yes. Errors and
    /// informational rows are off the scale.
    pub fn rank(self) -> Option<u8> {
        match self {
            Verdict::No => Some(0),
            Verdict::Partial => Some(1),
            Verdict::Yes => Some(2),
            Verdict::Error | Verdict::NotProbed => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verdict::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown verdict `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStyle {
    #[default]
    Auto,
    RawWps,
    Resource,
}

impl FromStr for EntryStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(EntryStyle::Auto),
            "raw-wps" => Ok(EntryStyle::RawWps),
            "resource" => Ok(EntryStyle::Resource),
            other => Err(format!("unknown style `{other}` (expected auto, raw-wps or resource)")),
        }
    }
}

impl fmt::Display for EntryStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryStyle::Auto => "auto",
            EntryStyle::RawWps => "raw-wps",
            EntryStyle::Resource => "resource",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceCheck {
    pub check_id: String,
    pub table_row: String,
    pub probe_description: String,
    pub verdict: Verdict,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub target: String,
    pub timestamp: String,
    /// The style the probes ran under, after auto-detection.
    pub style: EntryStyle,
    pub reachable: bool,
    pub checks: Vec<ComplianceCheck>,
    pub counts: BTreeMap<Verdict, usize>,
}

pub fn tally(checks: &[ComplianceCheck]) -> BTreeMap<Verdict, usize> {
    let mut counts: BTreeMap<Verdict, usize> = Verdict::ALL.into_iter().map(|v| (v, 0)).collect();
    for c in checks {
        *counts.entry(c.verdict).or_default() += 1;
    }
    counts
}

impl ComplianceReport {
    pub fn new(target: impl Into<String>, style: EntryStyle, reachable: bool, checks: Vec<ComplianceCheck>) -> Self {
        ComplianceReport {
            target: target.into(),
            timestamp: Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            style,
            reachable,
            counts: tally(&checks),
            checks,
        }
    }

    pub fn verdict(&self, check_id: &str) -> Option<Verdict> {
        self.checks.iter().find(|c| c.check_id == check_id).map(|c| c.verdict)
    }

    /// `(check_id, verdict)` pairs in report order.
    pub fn verdicts(&self) -> Vec<(String, Verdict)> {
        self.checks.iter().map(|c| (c.check_id.clone(), c.verdict)).collect()
    }
}

/// The checks every report carries, in order: id, table row, description.
pub const CHECKS: [(&str, &str, &str); 9] = [
    (
        "cache",
        "Cache",
        "GET the entry, look for Cache-Control/ETag/Last-Modified, re-GET conditionally expecting 304",
    ),
    (
        "uniform_interface",
        "Uniform interface",
        "operation tunneling through a request= parameter, reads over POST, 405+Allow on a disallowed verb",
    ),
    (
        "identification",
        "Identification of resources",
        "processes at distinct dereferenceable URIs and a navigable canonical entry point",
    ),
    (
        "negotiation",
        "Representation: content negotiation",
        "vary Accept across JSON, XML, HTML and a bogus type, expecting matching Content-Type and 406",
    ),
    (
        "hypermedia",
        "Hypermedia: use of typed links",
        "crawl embedded links from the entry (3 hops) looking for a process resource",
    ),
    (
        "status_codes",
        "Self-descriptive messages: exception handling",
        "induce a missing-parameter error, expecting a 4xx status rather than 200 with an exception body",
    ),
    (
        "safety",
        "Use of HTTP idioms: safe GET",
        "compare a state-revealing view around a GET storm and try execute semantics over GET",
    ),
    ("layered", "Layered approach", "no observable remote probe"),
    ("code_on_demand", "Code-on-demand", "no observable remote probe"),
];

pub const PROBED_CHECKS: [&str; 7] = [
    "cache",
    "uniform_interface",
    "identification",
    "negotiation",
    "hypermedia",
    "status_codes",
    "safety",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub style: EntryStyle,
    pub timeout: Duration,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            style: EntryStyle::Auto,
            timeout: DEFAULT_PROBE_TIMEOUT,
        }
    }
}

pub(crate) fn check(id: &str, verdict: Verdict, evidence: Vec<String>) -> ComplianceCheck {
    let (_, row, description) = CHECKS
        .iter()
        .find(|(c, _, _)| *c == id)
        .expect("check ids come from the CHECKS table");
    ComplianceCheck {
        check_id: id.to_string(),
        table_row: row.to_string(),
        probe_description: description.to_string(),
        verdict,
        evidence,
    }
}

/// Runs every probe against `target`, one after another. An unreachable
/// target yields a report whose probed checks are all `error`.
pub async fn run_audit(target: &str, options: &AuditOptions) -> ComplianceReport {
    probes::run(target, options).await
}
