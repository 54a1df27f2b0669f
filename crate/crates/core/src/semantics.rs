//! HTTP application-protocol mechanics: exception status mapping, cache
//! validators and policies, and the per-resource method table.

use std::time::{Duration, SystemTime};

use http::{Method, StatusCode};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::resource::{ResourceBody, ResourceId, ResourceKind};
use crate::wps::{ExceptionCode, ExceptionReport};

pub const DEFAULT_RETRY_AFTER_SECS: u64 = 30;

type Headers = Vec<(String, String)>;

/// Exception code to HTTP status, plus any headers that go with it.
#[derive(Debug, Clone, PartialEq)]
pub struct StatusMapping {
    table: Vec<(ExceptionCode, StatusCode, Headers)>,
    fallback: StatusCode,
}

impl StatusMapping {
    pub fn new(retry_after_secs: u64) -> Self {
        StatusMapping {
            table: vec![
                (ExceptionCode::MissingParameterValue, StatusCode::BAD_REQUEST, vec![]),
                (ExceptionCode::InvalidParameterValue, StatusCode::BAD_REQUEST, vec![]),
                (
                    ExceptionCode::ServerBusy,
                    StatusCode::SERVICE_UNAVAILABLE,
                    vec![("Retry-After".into(), retry_after_secs.to_string())],
                ),
                (ExceptionCode::NoApplicableCode, StatusCode::INTERNAL_SERVER_ERROR, vec![]),
            ],
            fallback: StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn lookup(&self, code: &ExceptionCode) -> (StatusCode, &[(String, String)]) {
        self.table
            .iter()
            .find(|(c, _, _)| c == code)
            .map(|(_, s, h)| (*s, h.as_slice()))
            .unwrap_or((self.fallback, &[]))
    }
}

impl Default for StatusMapping {
    fn default() -> Self {
        StatusMapping::new(DEFAULT_RETRY_AFTER_SECS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedException {
    pub status: StatusCode,
    pub headers: Vec<(String, String)>,
    /// Problem document; the caller supplies its links when rendering.
    pub body: ResourceBody,
}

/// Translates a report into an HTTP answer. The first entry decides the
/// status; an empty report maps like an unknown code.
pub fn map_exception(report: &ExceptionReport, mapping: &StatusMapping) -> MappedException {
    let fallback = ExceptionCode::NoApplicableCode;
    let code = report.entries.first().map(|e| &e.code).unwrap_or(&fallback);
    let (status, headers) = mapping.lookup(code);
    MappedException {
        status,
        headers: headers.to_vec(),
        body: problem_body(status, report),
    }
}

pub fn problem_body(status: StatusCode, report: &ExceptionReport) -> ResourceBody {
    let first = report.entries.first();
    let entries: Vec<_> = report
        .entries
        .iter()
        .map(|e| json!({"code": e.code, "locator": e.locator, "text": e.text}))
        .collect();
    let title = first
        .map(|e| e.code.as_str().to_string())
        .unwrap_or_else(|| status.canonical_reason().unwrap_or("Error").to_string());
    ResourceBody::new(
        title,
        "Problem",
        json!({
            "status": status.as_u16(),
            "code": first.map(|e| e.code.as_str()),
            "locator": first.and_then(|e| e.locator.as_deref()),
            "text": first.and_then(|e| e.text.as_deref()),
            "exceptions": entries,
        }),
    )
}

/// Strong validator: the quoted lowercase hex SHA-256 of the body.
pub fn compute_etag(body: &[u8]) -> String {
    format!("\"{}\"", hex::encode(Sha256::digest(body)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditional {
    Full,
    NotModified,
}

fn opaque_tag(tag: &str) -> &str {
    tag.trim().strip_prefix("W/").unwrap_or(tag.trim())
}

/// Decides between a full answer and 304. A present If-None-Match is
/// authoritative; If-Modified-Since is only consulted without it.
pub fn evaluate_conditional(
    if_none_match: Option<&str>,
    if_modified_since: Option<&str>,
    current_etag: &str,
    current_last_modified: SystemTime,
) -> Conditional {
    if let Some(inm) = if_none_match {
        let hit = inm.trim() == "*"
            || inm
                .split(',')
                .any(|t| opaque_tag(t) == opaque_tag(current_etag));
        return if hit {
            Conditional::NotModified
        } else {
            Conditional::Full
        };
    }
    if let Some(since) = if_modified_since.and_then(parse_http_date) {
        if since >= truncate_to_seconds(current_last_modified) {
            return Conditional::NotModified;
        }
    }
    Conditional::Full
}

fn truncate_to_seconds(t: SystemTime) -> SystemTime {
    match t.duration_since(SystemTime::UNIX_EPOCH) {
        Ok(d) => SystemTime::UNIX_EPOCH + Duration::from_secs(d.as_secs()),
        Err(_) => t,
    }
}

pub fn format_http_date(t: SystemTime) -> String {
    httpdate::fmt_http_date(t)
}

pub fn parse_http_date(s: &str) -> Option<SystemTime> {
    httpdate::parse_http_date(s.trim()).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validators {
    ETag,
    LastModified,
    Both,
    None,
}

impl Validators {
    pub fn etag(self) -> bool {
        matches!(self, Validators::ETag | Validators::Both)
    }

    pub fn last_modified(self) -> bool {
        matches!(self, Validators::LastModified | Validators::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CachePolicy {
    pub cache_control: &'static str,
    pub validators: Validators,
}

impl CachePolicy {
    pub fn for_kind(kind: ResourceKind) -> CachePolicy {
        match kind {
            ResourceKind::Entry | ResourceKind::ProcessCollection | ResourceKind::Process => CachePolicy {
                cache_control: "public, max-age=3600",
                validators: Validators::Both,
            },
            ResourceKind::JobCollection | ResourceKind::Job => CachePolicy {
                cache_control: "no-cache",
                validators: Validators::ETag,
            },
            ResourceKind::JobResult => CachePolicy {
                cache_control: "public, max-age=86400",
                validators: Validators::Both,
            },
        }
    }

    /// Error answers are never stored.
    pub fn problem() -> CachePolicy {
        CachePolicy {
            cache_control: "no-store",
            validators: Validators::None,
        }
    }

    /// The `max-age` directive in seconds, if any.
    pub fn max_age(&self) -> Option<u64> {
        self.cache_control
            .split(',')
            .find_map(|d| d.trim().strip_prefix("max-age="))
            .and_then(|v| v.parse().ok())
    }
}

pub fn allowed_methods(kind: ResourceKind) -> &'static [Method] {
    const GET: &[Method] = &[Method::GET];
    const GET_POST: &[Method] = &[Method::GET, Method::POST];
    const GET_DELETE: &[Method] = &[Method::GET, Method::DELETE];
    match kind {
        ResourceKind::Entry
        | ResourceKind::ProcessCollection
        | ResourceKind::Process
        | ResourceKind::JobResult => GET,
        ResourceKind::JobCollection => GET_POST,
        ResourceKind::Job => GET_DELETE,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MethodCheck {
    Allowed,
    NotAllowed(Vec<Method>),
}

impl MethodCheck {
    /// Value for the `Allow` header of a 405.
    pub fn allow_header(methods: &[Method]) -> String {
        methods
            .iter()
            .map(Method::as_str)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn method_guard(id: &ResourceId, method: &Method) -> MethodCheck {
    let allowed = allowed_methods(id.kind());
    if allowed.contains(method) {
        MethodCheck::Allowed
    } else {
        MethodCheck::NotAllowed(allowed.to_vec())
    }
}
