use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use super::{uri_for, ResourceId};
use crate::wps::ProcessDescription;

/// The controlled relation vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rel {
    #[serde(rename = "self")]
    SelfLink,
    Up,
    Collection,
    Item,
    Describedby,
    Execute,
    Monitor,
    Results,
    Similar,
    Alternate,
}

impl Rel {
    pub const ALL: [Rel; 10] = [
        Rel::SelfLink,
        Rel::Up,
        Rel::Collection,
        Rel::Item,
        Rel::Describedby,
        Rel::Execute,
        Rel::Monitor,
        Rel::Results,
        Rel::Similar,
        Rel::Alternate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rel::SelfLink => "self",
            Rel::Up => "up",
            Rel::Collection => "collection",
            Rel::Item => "item",
            Rel::Describedby => "describedby",
            Rel::Execute => "execute",
            Rel::Monitor => "monitor",
            Rel::Results => "results",
            Rel::Similar => "similar",
            Rel::Alternate => "alternate",
        }
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Rel::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedLink {
    pub rel: Rel,
    pub href: String,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none", default)]
    pub media_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub title: Option<String>,
}

impl TypedLink {
    pub fn new(rel: Rel, href: impl Into<String>) -> Self {
        TypedLink {
            rel,
            href: href.into(),
            media_type: None,
            title: None,
        }
    }

    pub fn typed(mut self, media_type: &str) -> Self {
        self.media_type = Some(media_type.to_string());
        self
    }

    pub fn titled(mut self, title: &str) -> Self {
        self.title = Some(title.to_string());
        self
    }

    /// Value for an HTTP `Link` header entry.
    pub fn to_header_value(&self) -> String {
        let mut v = format!("<{}>; rel=\"{}\"", self.href, self.rel);
        if let Some(t) = &self.media_type {
            v.push_str(&format!("; type=\"{t}\""));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Accepted,
    Running,
    Succeeded,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Succeeded | JobStatus::Failed)
    }

    /// Legal single-step transitions of the job state machine.
    pub fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Accepted, JobStatus::Running)
                | (JobStatus::Running, JobStatus::Succeeded)
                | (JobStatus::Running, JobStatus::Failed)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Accepted => "accepted",
            JobStatus::Running => "running",
            JobStatus::Succeeded => "succeeded",
            JobStatus::Failed => "failed",
        }
    }
}

/// What `links_for` needs to know about the resource's current state.
#[derive(Debug, Clone, Copy)]
pub enum StateSummary<'a> {
    Entry,
    ProcessCollection {
        processes: &'a [ProcessDescription],
    },
    Process {
        process: &'a ProcessDescription,
        catalog: &'a [ProcessDescription],
    },
    JobCollection {
        job_ids: &'a [String],
    },
    Job {
        status: JobStatus,
        process_id: &'a str,
        catalog: &'a [ProcessDescription],
    },
    JobResult {
        job_id: &'a str,
    },
}

/// Other processes sharing at least one taxonomy tag, in catalog order.
pub fn similar_processes<'a>(
    process_id: &str,
    catalog: &'a [ProcessDescription],
) -> Vec<&'a ProcessDescription> {
    let Some(process) = catalog.iter().find(|p| p.identifier == process_id) else {
        return Vec::new();
    };
    catalog
        .iter()
        .filter(|p| p.identifier != process_id)
        .filter(|p| p.taxonomy_tags.iter().any(|t| process.taxonomy_tags.contains(t)))
        .collect()
}

fn similar_links(process_id: &str, catalog: &[ProcessDescription], base: &str) -> Vec<TypedLink> {
    similar_processes(process_id, catalog)
        .into_iter()
        .map(|p| {
            TypedLink::new(Rel::Similar, uri_for(&ResourceId::Process(p.identifier.clone()), base))
                .titled(&p.title)
        })
        .collect()
}

/// The transitions a client may follow from `id` in its current state.
/// The list always starts with exactly one `self` link.
pub fn links_for(id: &ResourceId, state: StateSummary<'_>, base: &str) -> Vec<TypedLink> {
    let mut links = vec![TypedLink::new(Rel::SelfLink, uri_for(id, base))];
    match state {
        StateSummary::Entry => {
            links.push(
                TypedLink::new(Rel::Collection, uri_for(&ResourceId::ProcessCollection, base))
                    .titled("processes"),
            );
            links.push(
                TypedLink::new(
                    Rel::Collection,
                    uri_for(&ResourceId::JobCollection { process: None }, base),
                )
                .titled("jobs"),
            );
        }
        StateSummary::ProcessCollection { processes } => {
            links.push(TypedLink::new(Rel::Up, uri_for(&ResourceId::Entry, base)));
            for p in processes {
                let href = uri_for(&ResourceId::Process(p.identifier.clone()), base);
                links.push(TypedLink::new(Rel::Item, href.clone()).titled(&p.title));
                links.push(
                    TypedLink::new(Rel::Describedby, href)
                        .typed(super::XML)
                        .titled(&p.title),
                );
            }
        }
        StateSummary::Process { process, catalog } => {
            links.push(TypedLink::new(Rel::Up, uri_for(&ResourceId::ProcessCollection, base)));
            links.push(
                TypedLink::new(
                    Rel::Execute,
                    uri_for(
                        &ResourceId::JobCollection {
                            process: Some(process.identifier.clone()),
                        },
                        base,
                    ),
                )
                .typed(super::JSON),
            );
            links.extend(similar_links(&process.identifier, catalog, base));
        }
        StateSummary::JobCollection { job_ids } => {
            links.push(TypedLink::new(Rel::Up, uri_for(&ResourceId::Entry, base)));
            for jid in job_ids {
                links.push(TypedLink::new(Rel::Item, uri_for(&ResourceId::Job(jid.clone()), base)));
            }
        }
        StateSummary::Job {
            status,
            process_id,
            catalog,
        } => {
            let job_uri = uri_for(id, base);
            let process_uri = uri_for(&ResourceId::Process(process_id.to_string()), base);
            match status {
                JobStatus::Accepted | JobStatus::Running => {
                    links.push(TypedLink::new(Rel::Monitor, job_uri));
                    links.push(TypedLink::new(Rel::Up, process_uri));
                }
                JobStatus::Succeeded => {
                    if let ResourceId::Job(jid) = id {
                        links.push(TypedLink::new(
                            Rel::Results,
                            uri_for(&ResourceId::JobResult(jid.clone()), base),
                        ));
                    }
                    links.push(TypedLink::new(Rel::Up, process_uri));
                }
                JobStatus::Failed => {
                    links.extend(similar_links(process_id, catalog, base));
                    links.push(TypedLink::new(Rel::Up, process_uri));
                }
            }
        }
        StateSummary::JobResult { job_id } => {
            links.push(TypedLink::new(
                Rel::Up,
                uri_for(&ResourceId::Job(job_id.to_string()), base),
            ));
        }
    }
    links
}

static ANCHOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<a\s([^>]*)>").unwrap());
static ATTR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?is)([a-z][a-z0-9_-]*)\s*=\s*(?:"([^"]*)"|'([^']*)')"#).unwrap()
});

fn html_unescape(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

/// Recovers the typed links embedded in a representation body. Links whose
/// relation is outside the vocabulary are skipped.
pub fn extract_links(media_type: &str, body: &[u8]) -> Vec<TypedLink> {
    let essence = media_type
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase();
    match essence.as_str() {
        "application/json" => {
            let Ok(value) = serde_json::from_slice::<serde_json::Value>(body) else {
                return Vec::new();
            };
            value
                .get("links")
                .and_then(|l| l.as_array())
                .map(|links| {
                    links
                        .iter()
                        .filter_map(|l| {
                            let rel = l.get("rel")?.as_str()?.parse().ok()?;
                            let mut link = TypedLink::new(rel, l.get("href")?.as_str()?);
                            link.media_type = l.get("type").and_then(|t| t.as_str()).map(String::from);
                            link.title = l.get("title").and_then(|t| t.as_str()).map(String::from);
                            Some(link)
                        })
                        .collect()
                })
                .unwrap_or_default()
        }
        "application/xml" | "text/xml" => {
            let Ok(root) = crate::wps::xml_tree_parse(body) else {
                return Vec::new();
            };
            let mut out = Vec::new();
            collect_xml_links(&root, &mut out);
            out
        }
        "text/html" => {
            let text = String::from_utf8_lossy(body);
            ANCHOR
                .captures_iter(&text)
                .filter_map(|cap| {
                    let attrs: Vec<(String, String)> = ATTR
                        .captures_iter(&cap[1])
                        .map(|a| {
                            let v = a.get(2).or(a.get(3)).map(|m| m.as_str()).unwrap_or("");
                            (a[1].to_ascii_lowercase(), html_unescape(v))
                        })
                        .collect();
                    let get = |k: &str| attrs.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
                    let rel = get("rel")?.parse().ok()?;
                    let mut link = TypedLink::new(rel, get("href")?);
                    link.media_type = get("type");
                    link.title = get("title");
                    Some(link)
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

fn collect_xml_links(e: &crate::wps::XmlElement, out: &mut Vec<TypedLink>) {
    if e.name == "link" {
        if let (Some(rel), Some(href)) = (e.get_attr("rel"), e.get_attr("href")) {
            if let Ok(rel) = rel.parse() {
                let mut link = TypedLink::new(rel, href);
                link.media_type = e.get_attr("type").map(String::from);
                link.title = e.get_attr("title").map(String::from);
                out.push(link);
            }
        }
    }
    for child in e.elements() {
        collect_xml_links(child, out);
    }
}
