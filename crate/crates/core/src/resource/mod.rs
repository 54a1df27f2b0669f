//! The resource-oriented face of the gateway: URI scheme, typed links,
//! content negotiation and representation rendering.

mod links;
mod negotiate;
mod render;

pub use links::{extract_links, links_for, similar_processes, JobStatus, Rel, StateSummary, TypedLink};
pub use negotiate::{negotiate, parse_accept, MediaType};
pub use render::{render, Representation, ResourceBody, HTML, JSON, REPRESENTATION_TYPES, XML};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

/// Every addressable resource. Keys are process identifiers or job tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ResourceId {
    Entry,
    ProcessCollection,
    Process(String),
    /// All jobs, or the jobs of one process when scoped.
    JobCollection { process: Option<String> },
    Job(String),
    JobResult(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResourceKind {
    Entry,
    ProcessCollection,
    Process,
    JobCollection,
    Job,
    JobResult,
}

impl ResourceId {
    pub fn kind(&self) -> ResourceKind {
        match self {
            ResourceId::Entry => ResourceKind::Entry,
            ResourceId::ProcessCollection => ResourceKind::ProcessCollection,
            ResourceId::Process(_) => ResourceKind::Process,
            ResourceId::JobCollection { .. } => ResourceKind::JobCollection,
            ResourceId::Job(_) => ResourceKind::Job,
            ResourceId::JobResult(_) => ResourceKind::JobResult,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            ResourceId::Process(k) | ResourceId::Job(k) | ResourceId::JobResult(k) => !k.is_empty(),
            ResourceId::JobCollection { process: Some(k) } => !k.is_empty(),
            _ => true,
        }
    }

    /// Path below the base URI, always starting with `/`.
    pub fn path(&self) -> String {
        let enc = |k: &str| utf8_percent_encode(k, SEGMENT).to_string();
        match self {
            ResourceId::Entry => "/".into(),
            ResourceId::ProcessCollection => "/processes".into(),
            ResourceId::Process(pid) => format!("/processes/{}", enc(pid)),
            ResourceId::JobCollection { process: None } => "/jobs".into(),
            ResourceId::JobCollection { process: Some(pid) } => {
                format!("/processes/{}/jobs", enc(pid))
            }
            ResourceId::Job(jid) => format!("/jobs/{}", enc(jid)),
            ResourceId::JobResult(jid) => format!("/jobs/{}/result", enc(jid)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no resource at `{0}`")]
pub struct NotFound(pub String);

/// Absolute URI of a resource under `base`.
pub fn uri_for(id: &ResourceId, base: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), id.path())
}

pub fn route(path: &str) -> Result<ResourceId, NotFound> {
    let not_found = || NotFound(path.to_string());
    if path == "/" || path.is_empty() {
        return Ok(ResourceId::Entry);
    }
    let rest = path.strip_prefix('/').ok_or_else(not_found)?;
    let segments: Vec<&str> = rest.split('/').collect();
    let key = |raw: &str| -> Result<String, NotFound> {
        let decoded = percent_decode_str(raw)
            .decode_utf8()
            .map_err(|_| not_found())?;
        if decoded.is_empty() {
            Err(not_found())
        } else {
            Ok(decoded.into_owned())
        }
    };
    match segments.as_slice() {
        ["processes"] => Ok(ResourceId::ProcessCollection),
        ["processes", pid] => Ok(ResourceId::Process(key(pid)?)),
        ["processes", pid, "jobs"] => Ok(ResourceId::JobCollection {
            process: Some(key(pid)?),
        }),
        ["jobs"] => Ok(ResourceId::JobCollection { process: None }),
        ["jobs", jid] => Ok(ResourceId::Job(key(jid)?)),
        ["jobs", jid, "result"] => Ok(ResourceId::JobResult(key(jid)?)),
        _ => Err(not_found()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BASE: &str = "http://gw.example:8080";

    #[test]
    fn process_uri_template() {
        let id = ResourceId::Process("org.n52.wps.server.algorithm.topology.Area".into());
        assert_eq!(
            uri_for(&id, BASE),
            "http://gw.example:8080/processes/org.n52.wps.server.algorithm.topology.Area"
        );
    }

    #[test]
    fn entry_uri() {
        assert_eq!(uri_for(&ResourceId::Entry, BASE), "http://gw.example:8080/");
        assert_eq!(uri_for(&ResourceId::Entry, "http://h/"), "http://h/");
    }

    #[test]
    fn unknown_and_empty_keys_are_not_found() {
        assert!(route("/bogus").is_err());
        assert!(route("/processes//").is_err());
        assert!(route("/processes/").is_err());
        assert!(route("/jobs/x/other").is_err());
    }

    #[test]
    fn scoped_job_collection() {
        assert_eq!(
            route("/processes/Area/jobs").unwrap(),
            ResourceId::JobCollection {
                process: Some("Area".into())
            }
        );
    }

    fn resource_id() -> impl Strategy<Value = ResourceId> {
        let key = "\\PC{1,24}";
        prop_oneof![
            Just(ResourceId::Entry),
            Just(ResourceId::ProcessCollection),
            key.prop_map(ResourceId::Process),
            Just(ResourceId::JobCollection { process: None }),
            key.prop_map(|k| ResourceId::JobCollection { process: Some(k) }),
            key.prop_map(ResourceId::Job),
            key.prop_map(ResourceId::JobResult),
        ]
    }

    proptest! {
        #[test]
        fn route_inverts_uri_for(id in resource_id()) {
            let path = id.path();
            let routed = route(&path).unwrap();
            prop_assert_eq!(&routed, &id);
            prop_assert_eq!(routed.path(), path);
        }
    }
}
