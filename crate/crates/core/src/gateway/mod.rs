//! The RESTful mediator: resource-oriented HTTP in front, WPS behind.

mod backend;
mod catalog;
mod inputs;
mod store;

pub use backend::{BackendError, HttpBackend, WpsBackend};
pub use catalog::{refresh_catalog, BackendUnavailable, Catalog, CatalogCache, CatalogView};
pub use inputs::{parse_job_request, validate_inputs, validate_outputs, value_to_json, JobRequest};
pub use store::{new_job_id, Job, JobStore, StoreError, Transition};

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, SystemTime};

use async_trait::async_trait;
use bytes::Bytes;
use http::header::{self, HeaderName, HeaderValue};
use http::{Method, Request, Response, StatusCode};
use serde_json::{json, Value};
use thiserror::Error;

use crate::resource::{
    links_for, negotiate, render, route, similar_processes, uri_for, JobStatus, Rel, Representation,
    ResourceBody, ResourceId, StateSummary, TypedLink, REPRESENTATION_TYPES,
};
use crate::semantics::{
    evaluate_conditional, format_http_date, map_exception, method_guard, problem_body, CachePolicy,
    Conditional, MethodCheck, StatusMapping, DEFAULT_RETRY_AFTER_SECS,
};
use crate::server::{HttpHandler, Reply};
use crate::wps::{
    kvp, xml, ComplexContent, DataValue, ExceptionCode, ExceptionReport, ExecuteOutcome, ExecuteRequest,
    ProcessDescription, ResponseForm,
};

pub const DEFAULT_CACHE_TTL: Duration = Duration::from_secs(300);
const BACKEND_TIMEOUT: Duration = Duration::from_secs(30);
const STALE_WARNING: &str = "110 - \"Response is Stale\"";

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub port: u16,
    /// Absolute URI clients use to reach the gateway; every link starts with it.
    pub base_uri: String,
    pub backend: String,
    pub cache_ttl: Duration,
    pub retry_after_secs: u64,
    pub journal: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("base URI `{0}` is not an absolute http(s) URI")]
    RelativeBaseUri(String),
    #[error("backend `{0}` is not an absolute http(s) URI")]
    RelativeBackend(String),
    #[error("cache TTL must be positive")]
    ZeroTtl,
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn is_absolute_http(uri: &str) -> bool {
    uri.parse::<http::Uri>().is_ok_and(|u| {
        matches!(u.scheme_str(), Some("http" | "https")) && u.host().is_some_and(|h| !h.is_empty())
    })
}

impl GatewayConfig {
    pub fn new(base_uri: impl Into<String>, backend: impl Into<String>) -> Self {
        GatewayConfig {
            port: 0,
            base_uri: base_uri.into(),
            backend: backend.into(),
            cache_ttl: DEFAULT_CACHE_TTL,
            retry_after_secs: DEFAULT_RETRY_AFTER_SECS,
            journal: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !is_absolute_http(&self.base_uri) {
            return Err(ConfigError::RelativeBaseUri(self.base_uri.clone()));
        }
        if !is_absolute_http(&self.backend) {
            return Err(ConfigError::RelativeBackend(self.backend.clone()));
        }
        if self.cache_ttl.is_zero() {
            return Err(ConfigError::ZeroTtl);
        }
        Ok(())
    }
}

pub struct Gateway {
    base: String,
    backend: Arc<dyn WpsBackend>,
    catalog: CatalogCache,
    store: JobStore,
    mapping: StatusMapping,
    started: SystemTime,
}

/// A resource state ready to be negotiated and rendered.
struct View {
    body: ResourceBody,
    links: Vec<TypedLink>,
    last_modified: SystemTime,
    /// A media type and body served verbatim ahead of the envelope formats.
    native: Option<(String, Bytes)>,
    stale: bool,
}

fn problem_report(code: &str, locator: Option<&str>, text: impl Into<String>) -> ExceptionReport {
    ExceptionReport::single(ExceptionCode::Other(code.into()), locator, text)
}

fn parent(id: &ResourceId) -> ResourceId {
    match id {
        ResourceId::Entry | ResourceId::ProcessCollection | ResourceId::JobCollection { process: None } => {
            ResourceId::Entry
        }
        ResourceId::Process(_) => ResourceId::ProcessCollection,
        ResourceId::JobCollection { process: Some(p) } => ResourceId::Process(p.clone()),
        ResourceId::Job(_) => ResourceId::JobCollection { process: None },
        ResourceId::JobResult(j) => ResourceId::Job(j.clone()),
    }
}

fn truncate_secs(t: SystemTime) -> SystemTime {
    let secs = t
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    SystemTime::UNIX_EPOCH + Duration::from_secs(secs)
}

fn process_json(p: &ProcessDescription) -> Value {
    json!({
        "identifier": p.identifier,
        "title": p.title,
        "abstract": p.abstract_text,
        "keywords": p.taxonomy_tags,
        "inputs": p.inputs,
        "outputs": p.outputs,
    })
}

fn job_json(job: &Job) -> Value {
    json!({
        "id": job.id,
        "process": job.process_id,
        "status": job.status,
        "created": job.created_at.to_rfc3339(),
        "updated": job.updated_at.to_rfc3339(),
        "inputs": job.inputs.iter().map(|(id, v)| json!({"identifier": id, "value": value_to_json(v)})).collect::<Vec<_>>(),
        "exception": job.exception.as_ref().map(|r| r.entries.iter().map(|e| json!({
            "code": e.code, "locator": e.locator, "text": e.text,
        })).collect::<Vec<_>>()),
    })
}

/// The single output's own media type and bytes, when it has one.
fn native_output(outputs: &[(String, DataValue)]) -> Option<(String, Bytes)> {
    match outputs {
        [(_, DataValue::Literal { text, .. })] => Some(("text/plain".into(), Bytes::from(text.clone()))),
        [(_, DataValue::Complex {
            media_type,
            content: ComplexContent::Inline(body),
        })] => Some((media_type.clone(), Bytes::from(body.clone()))),
        [(_, DataValue::Complex {
            media_type,
            content: ComplexContent::Reference(href),
        })] => crate::mock::decode_data_uri(href).map(|b| (media_type.clone(), Bytes::from(b))),
        _ => None,
    }
}

impl Gateway {
    pub fn new(base_uri: impl Into<String>, backend: Arc<dyn WpsBackend>, store: JobStore) -> Gateway {
        Gateway {
            base: base_uri.into().trim_end_matches('/').to_string(),
            backend,
            catalog: CatalogCache::new(DEFAULT_CACHE_TTL),
            store,
            mapping: StatusMapping::default(),
            started: truncate_secs(SystemTime::now()),
        }
    }

    pub fn from_config(config: &GatewayConfig) -> Result<Gateway, ConfigError> {
        config.validate()?;
        let store = match &config.journal {
            Some(path) => JobStore::with_journal(path)?,
            None => JobStore::in_memory(),
        };
        let backend = Arc::new(HttpBackend::new(config.backend.clone(), BACKEND_TIMEOUT));
        Ok(Gateway::new(config.base_uri.clone(), backend, store)
            .with_cache_ttl(config.cache_ttl)
            .with_retry_after(config.retry_after_secs))
    }

    pub fn with_cache_ttl(mut self, ttl: Duration) -> Gateway {
        self.catalog = CatalogCache::new(ttl);
        self
    }

    pub fn with_retry_after(mut self, secs: u64) -> Gateway {
        self.mapping = StatusMapping::new(secs);
        self
    }

    pub fn base_uri(&self) -> &str {
        &self.base
    }

    pub fn store(&self) -> &JobStore {
        &self.store
    }

    pub async fn respond(&self, req: &Request<Bytes>) -> Response<Bytes> {
        if req.uri().query().is_some_and(kvp::has_operation_key) {
            let report = ExceptionReport::single(
                ExceptionCode::InvalidParameterValue,
                Some("request"),
                "operations are selected by URI and HTTP method, not by a `request` parameter",
            );
            return self.problem(req, StatusCode::BAD_REQUEST, &report, None, &[]);
        }
        let id = match route(req.uri().path()) {
            Ok(id) => id,
            Err(e) => return self.not_found(req, None, e.to_string()),
        };
        if let MethodCheck::NotAllowed(allowed) = method_guard(&id, req.method()) {
            let report = problem_report(
                "MethodNotAllowed",
                Some("method"),
                format!("{} is not allowed on {}", req.method(), id.path()),
            );
            let allow = MethodCheck::allow_header(&allowed);
            return self.problem(
                req,
                StatusCode::METHOD_NOT_ALLOWED,
                &report,
                Some(&id),
                &[("Allow".into(), allow)],
            );
        }
        match *req.method() {
            Method::POST => self.create_job(req, &id).await,
            Method::DELETE => self.delete_job(req, &id),
            _ => self.get(req, &id).await,
        }
    }

    fn links(&self, id: &ResourceId, state: StateSummary<'_>) -> Vec<TypedLink> {
        links_for(id, state, &self.base)
    }

    fn not_found(&self, req: &Request<Bytes>, id: Option<&ResourceId>, text: String) -> Response<Bytes> {
        let report = problem_report("NotFound", None, text);
        self.problem(req, StatusCode::NOT_FOUND, &report, id, &[])
    }

    /// An error answer, negotiated like any representation but falling back
    /// to JSON rather than failing with 406.
    fn problem(
        &self,
        req: &Request<Bytes>,
        status: StatusCode,
        report: &ExceptionReport,
        id: Option<&ResourceId>,
        extra: &[(String, String)],
    ) -> Response<Bytes> {
        self.problem_with(req, status, problem_body(status, report), id, extra, vec![])
    }

    fn problem_with(
        &self,
        req: &Request<Bytes>,
        status: StatusCode,
        body: ResourceBody,
        id: Option<&ResourceId>,
        extra: &[(String, String)],
        more_links: Vec<TypedLink>,
    ) -> Response<Bytes> {
        let up = id.map(parent).unwrap_or(ResourceId::Entry);
        let mut links = vec![TypedLink::new(Rel::Up, uri_for(&up, &self.base))];
        links.extend(more_links);
        let media_type = negotiate(accept(req), &REPRESENTATION_TYPES)
            .copied()
            .unwrap_or(REPRESENTATION_TYPES[0]);
        let rep = render(&body, media_type, links, SystemTime::now());
        let mut resp = self.finish(status, &rep, CachePolicy::problem());
        for (name, value) in extra {
            set_header(&mut resp, name, value);
        }
        resp
    }

    fn similar_links(&self, process_id: &str, catalog: &[ProcessDescription]) -> Vec<TypedLink> {
        similar_processes(process_id, catalog)
            .into_iter()
            .map(|p| {
                TypedLink::new(Rel::Similar, uri_for(&ResourceId::Process(p.identifier.clone()), &self.base))
                    .titled(&p.title)
            })
            .collect()
    }

    fn finish(&self, status: StatusCode, rep: &Representation, policy: CachePolicy) -> Response<Bytes> {
        let mut resp = Response::new(rep.body.clone());
        *resp.status_mut() = status;
        set_header(&mut resp, "Content-Type", &rep.media_type);
        self.validators(&mut resp, rep, policy);
        set_header(&mut resp, "Vary", "Accept");
        let link_header = rep
            .links
            .iter()
            .map(TypedLink::to_header_value)
            .filter(|v| HeaderValue::from_str(v).is_ok())
            .collect::<Vec<_>>()
            .join(", ");
        if !link_header.is_empty() {
            set_header(&mut resp, "Link", &link_header);
        }
        resp
    }

    fn validators(&self, resp: &mut Response<Bytes>, rep: &Representation, policy: CachePolicy) {
        set_header(resp, "Cache-Control", policy.cache_control);
        if policy.validators.etag() {
            set_header(resp, "ETag", &rep.etag);
        }
        if policy.validators.last_modified() {
            set_header(resp, "Last-Modified", &format_http_date(rep.last_modified));
        }
    }

    async fn catalog(&self) -> Result<CatalogView, BackendUnavailable> {
        self.catalog.get(self.backend.as_ref()).await
    }

    fn unavailable(&self, req: &Request<Bytes>, id: &ResourceId, e: BackendUnavailable) -> Response<Bytes> {
        let report = problem_report("BackendUnavailable", None, e.to_string());
        let retry = ("Retry-After".to_string(), self.retry_after());
        self.problem(req, StatusCode::SERVICE_UNAVAILABLE, &report, Some(id), &[retry])
    }

    fn retry_after(&self) -> String {
        let (_, headers) = self.mapping.lookup(&ExceptionCode::ServerBusy);
        headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case("Retry-After"))
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| DEFAULT_RETRY_AFTER_SECS.to_string())
    }

    async fn view(&self, id: &ResourceId) -> Result<View, Result<String, BackendUnavailable>> {
        let fresh = |body, links, last_modified| View {
            body,
            links,
            last_modified,
            native: None,
            stale: false,
        };
        match id {
            ResourceId::Entry => Ok(fresh(
                ResourceBody::new(
                    "WPS REST gateway",
                    "Entry",
                    json!({
                        "title": "WPS REST gateway",
                        "description": "Resource-oriented access to the processes of a Web Processing Service",
                    }),
                ),
                self.links(id, StateSummary::Entry),
                self.started,
            )),
            ResourceId::ProcessCollection => {
                let view = self.catalog().await.map_err(Err)?;
                let processes = &view.catalog.processes;
                let data = json!({
                    "processes": processes.iter().map(|p| json!({
                        "identifier": p.identifier,
                        "title": p.title,
                        "href": uri_for(&ResourceId::Process(p.identifier.clone()), &self.base),
                    })).collect::<Vec<_>>(),
                });
                Ok(View {
                    stale: view.stale,
                    ..fresh(
                        ResourceBody::new("Processes", "Processes", data),
                        self.links(id, StateSummary::ProcessCollection { processes }),
                        truncate_secs(view.catalog.fetched_at),
                    )
                })
            }
            ResourceId::Process(pid) => {
                let view = self.catalog().await.map_err(Err)?;
                let catalog = &view.catalog.processes;
                let process = view
                    .catalog
                    .process(pid)
                    .ok_or_else(|| Ok(format!("no process `{pid}`")))?;
                let mut body = ResourceBody::new(process.title.clone(), "Process", process_json(process));
                if let Ok(doc) = xml::encode_process_description(process) {
                    body = body.with_xml(doc);
                }
                Ok(View {
                    stale: view.stale,
                    ..fresh(
                        body,
                        self.links(id, StateSummary::Process { process, catalog }),
                        truncate_secs(view.catalog.fetched_at),
                    )
                })
            }
            ResourceId::JobCollection { process } => {
                let mut stale = false;
                if let Some(pid) = process {
                    let view = self.catalog().await.map_err(Err)?;
                    stale = view.stale;
                    if view.catalog.process(pid).is_none() {
                        return Err(Ok(format!("no process `{pid}`")));
                    }
                }
                let jobs = self.store.list(process.as_deref());
                let ids: Vec<String> = jobs.iter().map(|j| j.id.clone()).collect();
                let data = json!({
                    "jobs": jobs.iter().map(|j| json!({
                        "id": j.id,
                        "process": j.process_id,
                        "status": j.status,
                        "href": uri_for(&ResourceId::Job(j.id.clone()), &self.base),
                    })).collect::<Vec<_>>(),
                });
                let last_modified = jobs
                    .iter()
                    .map(|j| truncate_secs(j.updated_at.into()))
                    .max()
                    .unwrap_or(self.started);
                Ok(View {
                    stale,
                    ..fresh(
                        ResourceBody::new("Jobs", "Jobs", data),
                        self.links(id, StateSummary::JobCollection { job_ids: &ids }),
                        last_modified,
                    )
                })
            }
            ResourceId::Job(jid) => {
                let job = self.store.get(jid).ok_or_else(|| Ok(format!("no job `{jid}`")))?;
                let catalog = self.catalog().await.ok();
                let processes = catalog.as_ref().map(|v| v.catalog.processes.as_slice()).unwrap_or(&[]);
                let links = self.links(
                    id,
                    StateSummary::Job {
                        status: job.status,
                        process_id: &job.process_id,
                        catalog: processes,
                    },
                );
                Ok(fresh(
                    ResourceBody::new(format!("Job {}", job.id), "Job", job_json(&job)),
                    links,
                    truncate_secs(job.updated_at.into()),
                ))
            }
            ResourceId::JobResult(jid) => {
                let job = self.store.get(jid).ok_or_else(|| Ok(format!("no job `{jid}`")))?;
                let Some(result) = job.result.as_ref().filter(|_| job.status == JobStatus::Succeeded) else {
                    return Err(Ok(format!("job `{jid}` has no result (status {})", job.status.as_str())));
                };
                let outputs: serde_json::Map<String, Value> = result
                    .outputs
                    .iter()
                    .map(|(k, v)| (k.clone(), value_to_json(v)))
                    .collect();
                let mut body = ResourceBody::new(
                    format!("Result of job {}", job.id),
                    "Result",
                    json!({"job": job.id, "process": job.process_id, "outputs": outputs}),
                );
                if let Ok(doc) = xml::encode_execute_response(result) {
                    body = body.with_xml(doc);
                }
                Ok(View {
                    native: native_output(&result.outputs),
                    ..fresh(
                        body,
                        self.links(id, StateSummary::JobResult { job_id: jid }),
                        truncate_secs(job.updated_at.into()),
                    )
                })
            }
        }
    }

    /// Chooses a media type among the view's offers and renders it.
    fn represent(&self, req: &Request<Bytes>, view: View) -> Result<Representation, Vec<String>> {
        let mut offered: Vec<String> = view.native.iter().map(|(t, _)| t.clone()).collect();
        offered.extend(REPRESENTATION_TYPES.iter().map(|t| t.to_string()));
        let Some(chosen) = negotiate(accept(req), &offered) else {
            return Err(offered);
        };
        Ok(match &view.native {
            Some((t, body)) if t == chosen => Representation {
                media_type: t.clone(),
                etag: crate::semantics::compute_etag(body),
                body: body.clone(),
                links: view.links,
                last_modified: view.last_modified,
            },
            _ => render(&view.body, chosen, view.links, view.last_modified),
        })
    }

    fn not_acceptable(&self, req: &Request<Bytes>, id: &ResourceId, offered: Vec<String>) -> Response<Bytes> {
        let report = problem_report(
            "NotAcceptable",
            Some("Accept"),
            format!("available media types: {}", offered.join(", ")),
        );
        self.problem(req, StatusCode::NOT_ACCEPTABLE, &report, Some(id), &[])
    }

    async fn get(&self, req: &Request<Bytes>, id: &ResourceId) -> Response<Bytes> {
        let view = match self.view(id).await {
            Ok(v) => v,
            Err(Ok(text)) => return self.not_found(req, Some(id), text),
            Err(Err(e)) => return self.unavailable(req, id, e),
        };
        let stale = view.stale;
        let rep = match self.represent(req, view) {
            Ok(rep) => rep,
            Err(offered) => return self.not_acceptable(req, id, offered),
        };
        let policy = CachePolicy::for_kind(id.kind());
        let header = |name: HeaderName| req.headers().get(name).and_then(|v| v.to_str().ok());
        let if_modified_since = header(header::IF_MODIFIED_SINCE).filter(|_| policy.validators.last_modified());
        let mut resp = match evaluate_conditional(
            header(header::IF_NONE_MATCH),
            if_modified_since,
            &rep.etag,
            rep.last_modified,
        ) {
            Conditional::NotModified => {
                let mut resp = Response::new(Bytes::new());
                *resp.status_mut() = StatusCode::NOT_MODIFIED;
                self.validators(&mut resp, &rep, policy);
                set_header(&mut resp, "Vary", "Accept");
                resp
            }
            Conditional::Full => self.finish(StatusCode::OK, &rep, policy),
        };
        if stale {
            set_header(&mut resp, "Warning", STALE_WARNING);
        }
        resp
    }

    async fn create_job(&self, req: &Request<Bytes>, id: &ResourceId) -> Response<Bytes> {
        let ResourceId::JobCollection { process: scoped } = id else {
            unreachable!("method guard admits POST on job collections only")
        };
        let request = match parse_job_request(req.body()) {
            Ok(r) => r,
            Err(report) => return self.mapped(req, &report, Some(id)),
        };
        let pid = match (scoped, &request.process) {
            (Some(s), Some(b)) if s != b => {
                let report = ExceptionReport::single(
                    ExceptionCode::InvalidParameterValue,
                    Some("process"),
                    format!("body names `{b}` but was posted to the jobs of `{s}`"),
                );
                return self.mapped(req, &report, Some(id));
            }
            (Some(s), _) => s.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => {
                let report = ExceptionReport::single(
                    ExceptionCode::MissingParameterValue,
                    Some("process"),
                    "jobs posted to the global collection must name a process",
                );
                return self.mapped(req, &report, Some(id));
            }
        };
        let view = match self.catalog().await {
            Ok(v) => v,
            Err(e) => return self.unavailable(req, id, e),
        };
        let Some(process) = view.catalog.process(&pid) else {
            return self.not_found(req, Some(id), format!("no process `{pid}`"));
        };
        let inputs = match validate_inputs(&request.inputs, process)
            .and_then(|i| validate_outputs(request.outputs.as_deref().unwrap_or(&[]), process).map(|_| i))
        {
            Ok(i) => i,
            Err(report) => return self.mapped(req, &report, Some(&ResourceId::JobCollection { process: Some(pid) })),
        };
        // Refuse before any side effect if the job could not be shown.
        let offered: Vec<String> = REPRESENTATION_TYPES.iter().map(|t| t.to_string()).collect();
        if negotiate(accept(req), &offered).is_none() {
            return self.not_acceptable(req, id, offered);
        }

        let job = Job::accepted(pid.clone(), inputs.clone());
        let jid = job.id.clone();
        if let Err(e) = self.store.insert(job) {
            return self.internal(req, id, e);
        }
        if let Err(e) = self.store.transition(&jid, Transition::Start) {
            return self.internal(req, id, e);
        }
        let exec = ExecuteRequest {
            process_id: pid.clone(),
            inputs,
            response_form: ResponseForm::ByValue,
        };
        let (transition, failure) = match self.backend.execute(&exec).await {
            Ok(ExecuteOutcome::Result(mut result)) => {
                if let Some(wanted) = &request.outputs {
                    result.outputs.retain(|(o, _)| wanted.contains(o));
                }
                (Transition::Succeed(result), None)
            }
            Ok(ExecuteOutcome::Exception(report)) | Err(BackendError::Exception(report)) => {
                let mapped = map_exception(&report, &self.mapping);
                (Transition::Fail(report), Some((mapped.status, mapped.headers)))
            }
            Err(e) => {
                let report = ExceptionReport::single(
                    ExceptionCode::NoApplicableCode,
                    None,
                    format!("backend failure: {e}"),
                );
                (Transition::Fail(report), Some((StatusCode::BAD_GATEWAY, vec![])))
            }
        };
        let job = match self.store.transition(&jid, transition) {
            Ok(job) => job,
            Err(StoreError::NotFound(_)) => {
                return self.not_found(req, Some(id), format!("job `{jid}` was deleted while running"))
            }
            Err(e) => return self.internal(req, id, e),
        };
        let job_id = ResourceId::Job(jid.clone());
        let location = uri_for(&job_id, &self.base);
        if let Some((status, headers)) = failure {
            let report = job.exception.clone().expect("failed jobs carry their exception");
            let mut links = vec![TypedLink::new(Rel::Monitor, location.clone())];
            links.extend(self.similar_links(&pid, &view.catalog.processes));
            return self.problem_with(
                req,
                status,
                problem_body(status, &report),
                Some(&ResourceId::JobCollection { process: Some(pid.clone()) }),
                &headers,
                links,
            );
        }
        let view = match self.view(&job_id).await {
            Ok(v) => v,
            Err(_) => return self.not_found(req, Some(id), format!("job `{jid}` was deleted while running")),
        };
        let rep = match self.represent(req, view) {
            Ok(rep) => rep,
            Err(offered) => return self.not_acceptable(req, id, offered),
        };
        let mut resp = self.finish(StatusCode::CREATED, &rep, CachePolicy::for_kind(job_id.kind()));
        set_header(&mut resp, "Location", &location);
        resp
    }

    fn delete_job(&self, req: &Request<Bytes>, id: &ResourceId) -> Response<Bytes> {
        let ResourceId::Job(jid) = id else {
            unreachable!("method guard admits DELETE on jobs only")
        };
        match self.store.delete(jid) {
            Ok(true) => {
                let mut resp = Response::new(Bytes::new());
                *resp.status_mut() = StatusCode::NO_CONTENT;
                let up = TypedLink::new(Rel::Up, uri_for(&parent(id), &self.base));
                set_header(&mut resp, "Link", &up.to_header_value());
                resp
            }
            Ok(false) => self.not_found(req, Some(id), format!("no job `{jid}`")),
            Err(e) => self.internal(req, id, e),
        }
    }

    fn mapped(&self, req: &Request<Bytes>, report: &ExceptionReport, id: Option<&ResourceId>) -> Response<Bytes> {
        let m = map_exception(report, &self.mapping);
        self.problem_with(req, m.status, m.body, id, &m.headers, vec![])
    }

    fn internal(&self, req: &Request<Bytes>, id: &ResourceId, e: StoreError) -> Response<Bytes> {
        tracing::error!("job store failure: {e}");
        let report = ExceptionReport::single(ExceptionCode::NoApplicableCode, None, e.to_string());
        self.problem(req, StatusCode::INTERNAL_SERVER_ERROR, &report, Some(id), &[])
    }
}

fn accept(req: &Request<Bytes>) -> Option<&str> {
    req.headers().get(header::ACCEPT).and_then(|v| v.to_str().ok())
}

fn set_header(resp: &mut Response<Bytes>, name: &str, value: &str) {
    if let (Ok(n), Ok(v)) = (HeaderName::try_from(name), HeaderValue::from_str(value)) {
        resp.headers_mut().insert(n, v);
    }
}

#[async_trait]
impl HttpHandler for Gateway {
    async fn handle(&self, req: Request<Bytes>) -> Reply {
        let resp = self.respond(&req).await;
        tracing::debug!("{} {} -> {}", req.method(), req.uri(), resp.status());
        Reply::Respond(resp)
    }
}

#[cfg(test)]
mod tests;
