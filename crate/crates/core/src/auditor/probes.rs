use std::collections::{HashSet, VecDeque};

use bytes::Bytes;
use http::header::{self, HeaderMap};
use http::{Method, StatusCode};
use reqwest::Url;
use sha2::{Digest, Sha256};
use tokio::sync::OnceCell;

use super::{check, AuditOptions, ComplianceCheck, ComplianceReport, EntryStyle, Verdict, CHECKS, PROBED_CHECKS};
use crate::resource::{extract_links, Rel, TypedLink, HTML, JSON, XML};
use crate::wps::{
    kvp, xml, DataKind, DataValue, ExecuteRequest, LiteralType, OperationRequest, ProcessDescription,
    ResponseForm, BoundingBox,
};

const MAX_HOPS: usize = 3;
const MAX_RESOURCES: usize = 200;
const STORM_ROUNDS: usize = 3;
const BOGUS_TYPE: &str = "application/x-bogus-media-type";
const BROWSE_ACCEPT: &str = "application/json, application/xml;q=0.9, text/html;q=0.8";

struct Fetched {
    status: StatusCode,
    headers: HeaderMap,
    body: Bytes,
}

impl Fetched {
    fn header(&self, name: header::HeaderName) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }

    fn content_type(&self) -> String {
        self.header(header::CONTENT_TYPE)
            .map(|t| t.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
            .unwrap_or_default()
    }

    fn links(&self) -> Vec<TypedLink> {
        extract_links(&self.content_type(), &self.body)
    }

    fn is_wps_exception(&self) -> bool {
        xml::root_name(&self.body).as_deref() == Some("ExceptionReport")
    }

    fn summary(&self, method: &Method, url: &str) -> String {
        let ct = self.content_type();
        let ct = if ct.is_empty() { "no Content-Type".to_string() } else { ct };
        format!("{method} {url} -> {} ({ct})", self.status.as_u16())
    }
}

struct Crawled {
    url: Url,
    links: Vec<TypedLink>,
}

struct Context {
    client: reqwest::Client,
    target: Url,
    style: EntryStyle,
    /// The URL whose representation stands for the service as a whole.
    entry: Url,
    crawl: OnceCell<Result<Vec<Crawled>, String>>,
}

type ProbeResult = Result<(Verdict, Vec<String>), String>;

impl Context {
    async fn send(&self, method: Method, url: &Url, headers: &[(&str, &str)], body: Option<Vec<u8>>) -> Result<Fetched, String> {
        let mut req = self.client.request(method.clone(), url.clone());
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        if let Some(b) = body {
            req = req.body(b);
        }
        let resp = req.send().await.map_err(|e| format!("{method} {url}: {e}"))?;
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp.bytes().await.map_err(|e| format!("{method} {url}: {e}"))?;
        Ok(Fetched { status, headers, body })
    }

    async fn get(&self, url: &Url, headers: &[(&str, &str)]) -> Result<Fetched, String> {
        self.send(Method::GET, url, headers, None).await
    }

    fn with_query(&self, query: &str) -> Url {
        let mut url = self.target.clone();
        url.set_query(Some(query));
        url
    }

    fn same_origin(&self, url: &Url) -> bool {
        url.origin() == self.target.origin()
    }

    /// Breadth-first walk over embedded links, GET only, same origin only.
    async fn crawl(&self) -> Result<&Vec<Crawled>, String> {
        self.crawl
            .get_or_init(|| async {
                let mut seen = HashSet::from([self.entry.to_string()]);
                let mut queue = VecDeque::from([(self.entry.clone(), 0usize)]);
                let mut out = Vec::new();
                while let Some((url, depth)) = queue.pop_front() {
                    let resp = match self.get(&url, &[("Accept", BROWSE_ACCEPT)]).await {
                        Ok(r) => r,
                        Err(e) if out.is_empty() => return Err(e),
                        Err(_) => continue,
                    };
                    let links = if resp.status.is_success() { resp.links() } else { vec![] };
                    if depth < MAX_HOPS {
                        for l in &links {
                            let Ok(next) = url.join(&l.href) else { continue };
                            if self.same_origin(&next) && out.len() + queue.len() < MAX_RESOURCES && seen.insert(next.to_string()) {
                                queue.push_back((next, depth + 1));
                            }
                        }
                    }
                    out.push(Crawled { url, links });
                }
                Ok(out)
            })
            .await
            .as_ref()
            .map_err(Clone::clone)
    }

    async fn execute_links(&self) -> Result<Vec<Url>, String> {
        let crawl = self.crawl().await?;
        let mut out: Vec<Url> = Vec::new();
        for r in crawl {
            for l in r.links.iter().filter(|l| l.rel == Rel::Execute) {
                if let Ok(u) = r.url.join(&l.href) {
                    if !out.contains(&u) {
                        out.push(u);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn digest(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

pub(super) async fn run(target: &str, options: &AuditOptions) -> ComplianceReport {
    let informational = || {
        CHECKS
            .iter()
            .filter(|(id, _, _)| !PROBED_CHECKS.contains(id))
            .map(|(id, _, _)| check(id, Verdict::NotProbed, vec!["no observable remote probe exists for this row".into()]))
            .collect::<Vec<_>>()
    };
    let unreachable = |style, reason: String| {
        let mut checks: Vec<ComplianceCheck> = PROBED_CHECKS
            .iter()
            .map(|id| check(id, Verdict::Error, vec![reason.clone()]))
            .collect();
        checks.extend(informational());
        ComplianceReport::new(target, style, false, checks)
    };
    let url = match Url::parse(target) {
        Ok(u) if matches!(u.scheme(), "http" | "https") => u,
        _ => return unreachable(options.style, format!("`{target}` is not an http(s) URL")),
    };
    let client = match reqwest::Client::builder().timeout(options.timeout).build() {
        Ok(c) => c,
        Err(e) => return unreachable(options.style, e.to_string()),
    };
    let mut ctx = Context {
        client,
        entry: url.clone(),
        target: url,
        style: options.style,
        crawl: OnceCell::new(),
    };
    let first = match ctx.get(&ctx.target, &[("Accept", BROWSE_ACCEPT)]).await {
        Ok(r) => r,
        Err(e) => return unreachable(options.style, e),
    };
    if ctx.style == EntryStyle::Auto {
        ctx.style = if first.status.is_success() && !first.links().is_empty() {
            EntryStyle::Resource
        } else {
            EntryStyle::RawWps
        };
    }
    if ctx.style == EntryStyle::RawWps {
        ctx.entry = ctx.with_query("service=WPS&request=GetCapabilities");
    }

    let mut checks = Vec::new();
    for id in PROBED_CHECKS {
        let outcome = match id {
            "cache" => probe_cache(&ctx).await,
            "uniform_interface" => probe_uniform_interface(&ctx).await,
            "identification" => probe_identification(&ctx).await,
            "negotiation" => probe_negotiation(&ctx).await,
            "hypermedia" => probe_hypermedia(&ctx).await,
            "status_codes" => probe_status_codes(&ctx).await,
            "safety" => probe_safety(&ctx).await,
            _ => unreachable!("PROBED_CHECKS lists known probes"),
        };
        checks.push(match outcome {
            Ok((verdict, evidence)) => check(id, verdict, evidence),
            Err(e) => check(id, Verdict::Error, vec![e]),
        });
    }
    checks.extend(informational());
    ComplianceReport::new(target, ctx.style, true, checks)
}

async fn probe_cache(ctx: &Context) -> ProbeResult {
    let first = ctx.get(&ctx.entry, &[]).await?;
    let mut evidence = vec![first.summary(&Method::GET, ctx.entry.as_str())];
    let etag = first.header(header::ETAG).map(str::to_string);
    let last_modified = first.header(header::LAST_MODIFIED).map(str::to_string);
    let cache_control = first.header(header::CACHE_CONTROL).map(str::to_string);
    for (name, value) in [("ETag", &etag), ("Last-Modified", &last_modified), ("Cache-Control", &cache_control)] {
        evidence.push(format!("{name}: {}", value.as_deref().unwrap_or("absent")));
    }
    if etag.is_none() && last_modified.is_none() && cache_control.is_none() {
        return Ok((Verdict::No, evidence));
    }
    let conditional = match (&etag, &last_modified) {
        (Some(tag), _) => Some(("If-None-Match", tag.as_str())),
        (None, Some(date)) => Some(("If-Modified-Since", date.as_str())),
        _ => None,
    };
    let revalidated = match conditional {
        Some((name, value)) => {
            let again = ctx.get(&ctx.entry, &[(name, value)]).await?;
            evidence.push(format!("conditional GET with {name} -> {}", again.status.as_u16()));
            again.status == StatusCode::NOT_MODIFIED && again.body.is_empty()
        }
        None => false,
    };
    let verdict = if revalidated && cache_control.is_some() {
        Verdict::Yes
    } else {
        Verdict::Partial
    };
    Ok((verdict, evidence))
}

fn capabilities_request() -> Vec<u8> {
    xml::encode_xml(&OperationRequest::GetCapabilities {
        service: "WPS".into(),
    })
    .expect("GetCapabilities encodes")
}

async fn probe_uniform_interface(ctx: &Context) -> ProbeResult {
    let mut evidence = Vec::new();
    let tunnel_url = ctx.with_query("service=WPS&request=GetCapabilities");
    let tunnel = ctx.get(&tunnel_url, &[]).await?;
    let tunneled = tunnel.status.is_success()
        && xml::root_name(&tunnel.body).as_deref() == Some("Capabilities");
    evidence.push(format!(
        "{}: operation tunneling {}",
        tunnel.summary(&Method::GET, tunnel_url.as_str()),
        if tunneled { "accepted" } else { "refused" }
    ));

    let post = ctx
        .send(
            Method::POST,
            &ctx.target,
            &[("Content-Type", "text/xml")],
            Some(capabilities_request()),
        )
        .await?;
    let read_over_post = post.status.is_success() && !post.is_wps_exception();
    evidence.push(format!(
        "{}: read over POST {}",
        post.summary(&Method::POST, ctx.target.as_str()),
        if read_over_post { "served" } else { "refused" }
    ));

    let delete = ctx.send(Method::DELETE, &ctx.target, &[], None).await?;
    let allow = delete.header(header::ALLOW).map(str::to_string);
    let proper_405 = delete.status == StatusCode::METHOD_NOT_ALLOWED && allow.is_some();
    evidence.push(format!(
        "{}: Allow {}",
        delete.summary(&Method::DELETE, ctx.target.as_str()),
        allow.as_deref().unwrap_or("absent")
    ));

    let verdict = match (tunneled, read_over_post, proper_405) {
        (true, _, _) => Verdict::No,
        (false, false, true) => Verdict::Yes,
        _ => Verdict::Partial,
    };
    Ok((verdict, evidence))
}

async fn raw_capabilities(ctx: &Context) -> Result<(Fetched, Option<crate::wps::ServiceCapabilities>), String> {
    let caps = ctx.get(&ctx.entry, &[]).await?;
    let parsed = if caps.status.is_success() {
        xml::parse_capabilities(&caps.body).ok()
    } else {
        None
    };
    Ok((caps, parsed))
}

async fn probe_identification(ctx: &Context) -> ProbeResult {
    match ctx.style {
        EntryStyle::RawWps => {
            let (resp, caps) = raw_capabilities(ctx).await?;
            let mut evidence = vec![resp.summary(&Method::GET, ctx.entry.as_str())];
            match caps {
                Some(caps) => {
                    evidence.push(format!(
                        "{} processes reachable only through the endpoint `{}`",
                        caps.processes.len(),
                        ctx.target
                    ));
                    evidence.push("service endpoint usable as canonical URI; resources hidden".into());
                    Ok((Verdict::Partial, evidence))
                }
                None => {
                    evidence.push("no capabilities document at the endpoint".into());
                    Ok((Verdict::No, evidence))
                }
            }
        }
        _ => {
            let crawl = ctx.crawl().await?;
            let entry_links = crawl.first().map(|c| c.links.len()).unwrap_or(0);
            let mut evidence = vec![format!("entry {} exposes {entry_links} links", ctx.entry)];
            let process_uris: Vec<&Url> = crawl
                .iter()
                .filter(|c| c.url != ctx.entry && c.links.iter().any(|l| l.rel == Rel::Execute))
                .map(|c| &c.url)
                .collect();
            evidence.push(format!("{} process resources at distinct URIs", process_uris.len()));
            let mut dereferenced = 0;
            for uri in &process_uris {
                let r = ctx.get(uri, &[]).await?;
                if r.status.is_success() {
                    dereferenced += 1;
                } else {
                    evidence.push(r.summary(&Method::GET, uri.as_str()));
                }
            }
            evidence.push(format!("{dereferenced} of them dereference with 2xx"));
            let verdict = match (entry_links > 0, !process_uris.is_empty() && dereferenced == process_uris.len()) {
                (true, true) => Verdict::Yes,
                (false, false) => Verdict::No,
                _ => Verdict::Partial,
            };
            Ok((verdict, evidence))
        }
    }
}

async fn probe_negotiation(ctx: &Context) -> ProbeResult {
    let mut evidence = Vec::new();
    let mut honoured = 0;
    let mut served = HashSet::new();
    for t in [JSON, XML, HTML] {
        let r = ctx.get(&ctx.entry, &[("Accept", t)]).await?;
        let ct = r.content_type();
        evidence.push(format!("Accept {t} -> {} {ct}", r.status.as_u16()));
        if r.status.is_success() {
            served.insert(ct.clone());
            if ct == t {
                honoured += 1;
            }
        }
    }
    let bogus = ctx.get(&ctx.entry, &[("Accept", BOGUS_TYPE)]).await?;
    evidence.push(format!("Accept {BOGUS_TYPE} -> {}", bogus.status.as_u16()));
    let refuses = bogus.status == StatusCode::NOT_ACCEPTABLE;
    let verdict = match (honoured == 3, refuses) {
        (true, true) => Verdict::Yes,
        _ if served.len() > 1 || refuses => Verdict::Partial,
        _ => Verdict::No,
    };
    Ok((verdict, evidence))
}

async fn probe_hypermedia(ctx: &Context) -> ProbeResult {
    let crawl = ctx.crawl().await?;
    let links: usize = crawl.iter().map(|c| c.links.len()).sum();
    let processes = crawl
        .iter()
        .filter(|c| c.links.iter().any(|l| l.rel == Rel::Execute))
        .count();
    let evidence = vec![
        format!("crawled {} resources within {MAX_HOPS} hops of {}", crawl.len(), ctx.entry),
        format!("{links} embedded links, {processes} process resources with an execute link"),
    ];
    let verdict = match (links > 0, processes > 0) {
        (_, true) => Verdict::Yes,
        (true, false) => Verdict::Partial,
        (false, false) => Verdict::No,
    };
    Ok((verdict, evidence))
}

async fn probe_status_codes(ctx: &Context) -> ProbeResult {
    let (method, url, resp) = match ctx.style {
        EntryStyle::RawWps => {
            let url = ctx.with_query("service=WPS");
            let resp = ctx.get(&url, &[]).await?;
            (Method::GET, url, resp)
        }
        _ => {
            let Some(url) = ctx.execute_links().await?.into_iter().next() else {
                return Ok((Verdict::No, vec!["capability absent: no execute link to submit to".into()]));
            };
            let resp = ctx
                .send(
                    Method::POST,
                    &url,
                    &[("Content-Type", "application/json"), ("Accept", JSON)],
                    Some(br#"{"inputs":{}}"#.to_vec()),
                )
                .await?;
            if resp.status.is_success() {
                if let Some(created) = resp.header(header::LOCATION).and_then(|l| url.join(l).ok()) {
                    let _ = ctx.send(Method::DELETE, &created, &[], None).await;
                }
            }
            (Method::POST, url, resp)
        }
    };
    let mut evidence = vec![resp.summary(&method, url.as_str())];
    let exception_body = resp.is_wps_exception()
        || serde_json::from_slice::<serde_json::Value>(&resp.body)
            .is_ok_and(|v| v["data"]["code"].is_string());
    evidence.push(format!(
        "exception body {}",
        if exception_body { "present" } else { "absent" }
    ));
    let verdict = if resp.status.is_client_error() {
        Verdict::Yes
    } else if resp.status.is_success() && exception_body {
        Verdict::No
    } else {
        Verdict::Partial
    };
    Ok((verdict, evidence))
}

/// Inputs for a KVP Execute built only from bounding boxes and literals.
fn synthesize_inputs(process: &ProcessDescription) -> Option<Vec<(String, DataValue)>> {
    let mut inputs = Vec::new();
    for input in process.inputs.iter().filter(|i| i.min_occurs > 0) {
        let value = match &input.kind {
            DataKind::BoundingBox => DataValue::BoundingBox(BoundingBox {
                minx: 0.0,
                miny: 0.0,
                maxx: 1.0,
                maxy: 1.0,
                crs: "EPSG:4326".into(),
            }),
            DataKind::Literal { datatype } => match datatype {
                LiteralType::String => DataValue::literal("a", *datatype),
                _ => DataValue::literal("1", *datatype),
            },
            DataKind::Complex { .. } => return None,
        };
        for _ in 0..input.min_occurs {
            inputs.push((input.identifier.clone(), value.clone()));
        }
    }
    Some(inputs)
}

async fn probe_safety(ctx: &Context) -> ProbeResult {
    match ctx.style {
        EntryStyle::RawWps => {
            let (_, caps) = raw_capabilities(ctx).await?;
            let Some(caps) = caps else {
                return Ok((Verdict::No, vec!["capability absent: no capabilities document".into()]));
            };
            let ids: Vec<String> = caps.processes.iter().map(|p| p.identifier.clone()).collect();
            let describe = kvp::encode_kvp(&OperationRequest::DescribeProcess { identifiers: ids })
                .map_err(|e| e.to_string())?;
            let descs = ctx.get(&ctx.with_query(&describe), &[]).await?;
            let descs = xml::parse_process_descriptions(&descs.body).unwrap_or_default();
            let Some((process, inputs)) = descs.iter().find_map(|p| synthesize_inputs(p).map(|i| (p, i))) else {
                return Ok((
                    Verdict::Partial,
                    vec!["no process takes only literal or bounding-box inputs; execute over GET not attempted".into()],
                ));
            };
            let query = kvp::encode_kvp(&OperationRequest::Execute(ExecuteRequest {
                process_id: process.identifier.clone(),
                inputs,
                response_form: ResponseForm::ByValue,
            }))
            .map_err(|e| e.to_string())?;
            let url = ctx.with_query(&query);
            let resp = ctx.get(&url, &[]).await?;
            let executed = resp.status.is_success()
                && xml::root_name(&resp.body).as_deref() == Some("ExecuteResponse");
            let evidence = vec![
                resp.summary(&Method::GET, url.as_str()),
                format!(
                    "execute semantics over GET {}",
                    if executed { "accepted" } else { "refused" }
                ),
            ];
            Ok((if executed { Verdict::No } else { Verdict::Partial }, evidence))
        }
        _ => {
            let crawl = ctx.crawl().await?;
            let view = crawl
                .iter()
                .flat_map(|c| c.links.iter().map(move |l| (c, l)))
                .find(|(_, l)| {
                    l.rel == Rel::Collection
                        && (l.title.as_deref().is_some_and(|t| t.contains("job")) || l.href.trim_end_matches('/').ends_with("/jobs"))
                })
                .and_then(|(c, l)| c.url.join(&l.href).ok())
                .unwrap_or_else(|| ctx.entry.clone());
            let state = |r: Fetched| (r.status.as_u16(), digest(&r.body));
            let before = state(ctx.get(&view, &[("Accept", JSON)]).await?);
            let execute = ctx.execute_links().await?;
            let mut evidence = vec![format!("state view {view}: {} sha256 {}", before.0, &before.1[..16])];
            let mut created = false;
            for _ in 0..STORM_ROUNDS {
                for url in crawl.iter().map(|c| &c.url).chain(execute.iter()) {
                    created |= ctx.get(url, &[]).await?.status == StatusCode::CREATED;
                }
            }
            evidence.push(format!(
                "{} GETs over {} crawled URIs and {} execute links",
                STORM_ROUNDS * (crawl.len() + execute.len()),
                crawl.len(),
                execute.len()
            ));
            let after = state(ctx.get(&view, &[("Accept", JSON)]).await?);
            evidence.push(format!("state view after: {} sha256 {}", after.0, &after.1[..16]));
            let verdict = if before == after && !created {
                Verdict::Yes
            } else {
                evidence.push("GET changed observable state".into());
                Verdict::No
            };
            Ok((verdict, evidence))
        }
    }
}
