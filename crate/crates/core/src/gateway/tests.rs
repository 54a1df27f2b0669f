use super::*;
use crate::mock::{FaultConfig, FaultMode, MockWps, AREA_PROCESS, INTERSECT_PROCESS};
use crate::resource::{extract_links, JSON};
use crate::server::{bind_local, spawn, ServerHandle};

const BASE: &str = "http://gw.test";

async fn mock(mode: FaultMode) -> ServerHandle {
    let mock = MockWps::new(FaultConfig::new(mode, Duration::ZERO).unwrap());
    spawn(bind_local().await.unwrap(), Arc::new(mock)).unwrap()
}

async fn gateway(mode: FaultMode) -> (Gateway, ServerHandle) {
    let backend = mock(mode).await;
    let http = HttpBackend::new(format!("{}/wps", backend.base_url()), Duration::from_secs(5));
    (Gateway::new(BASE, Arc::new(http), JobStore::in_memory()), backend)
}

fn request(method: Method, path: &str, headers: &[(&str, &str)], body: &str) -> Request<Bytes> {
    let mut b = Request::builder().method(method).uri(path);
    for (k, v) in headers {
        b = b.header(*k, *v);
    }
    b.body(Bytes::from(body.to_string())).unwrap()
}

fn get(path: &str) -> Request<Bytes> {
    request(Method::GET, path, &[], "")
}

fn header<'a>(resp: &'a Response<Bytes>, name: &str) -> Option<&'a str> {
    resp.headers().get(name).and_then(|v| v.to_str().ok())
}

fn json_body(resp: &Response<Bytes>) -> Value {
    serde_json::from_slice(resp.body()).unwrap()
}

const SQUARE_JOB: &str =
    r#"{"inputs":{"polygon":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}}"#;

fn area_jobs() -> String {
    format!("/processes/{AREA_PROCESS}/jobs")
}

#[tokio::test(flavor = "multi_thread")]
async fn area_job_end_to_end() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let resp = gw.respond(&request(Method::POST, &area_jobs(), &[], SQUARE_JOB)).await;
    assert_eq!(resp.status(), StatusCode::CREATED);
    let location = header(&resp, "Location").unwrap().to_string();
    assert!(location.starts_with("http://gw.test/jobs/"));
    assert_eq!(json_body(&resp)["data"]["status"], "succeeded");

    let path = location.strip_prefix(BASE).unwrap();
    let job = gw.respond(&get(path)).await;
    assert_eq!(job.status(), StatusCode::OK);
    let results = extract_links(JSON, job.body())
        .into_iter()
        .find(|l| l.rel == Rel::Results)
        .unwrap();
    let result = gw.respond(&get(results.href.strip_prefix(BASE).unwrap())).await;
    assert_eq!(result.status(), StatusCode::OK);
    assert_eq!(header(&result, "Content-Type"), Some("text/plain"));
    assert_eq!(result.body().as_ref(), b"1.0");

    let envelope = gw
        .respond(&request(Method::GET, results.href.strip_prefix(BASE).unwrap(), &[("Accept", JSON)], ""))
        .await;
    assert_eq!(json_body(&envelope)["data"]["outputs"]["area"]["value"], "1.0");
}

#[tokio::test(flavor = "multi_thread")]
async fn missing_polygon_is_400_and_creates_nothing() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let resp = gw.respond(&request(Method::POST, &area_jobs(), &[], r#"{"inputs":{}}"#)).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    assert_eq!(json_body(&resp)["data"]["code"], "MissingParameterValue");
    assert_eq!(header(&resp, "Cache-Control"), Some("no-store"));
    assert!(gw.store().is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn server_busy_maps_to_503_with_retry_after() {
    let (gw, _mock) = gateway(FaultMode::ServerBusy).await;
    let resp = gw.respond(&request(Method::POST, &area_jobs(), &[], SQUARE_JOB)).await;
    assert_eq!(resp.status(), StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(header(&resp, "Retry-After"), Some("30"));
    let jobs = gw.store().list(None);
    assert_eq!(jobs.len(), 1);
    assert_eq!(jobs[0].status, JobStatus::Failed);
    assert!(jobs[0].is_consistent());
}

#[tokio::test(flavor = "multi_thread")]
async fn dropped_backend_connection_is_502() {
    let (gw, _mock) = gateway(FaultMode::DropConnection).await;
    let resp = gw.respond(&request(Method::POST, &area_jobs(), &[], SQUARE_JOB)).await;
    assert_eq!(resp.status(), StatusCode::BAD_GATEWAY);
    assert_eq!(gw.store().list(None)[0].status, JobStatus::Failed);
}

#[tokio::test(flavor = "multi_thread")]
async fn degenerate_polygon_fails_the_job_with_400() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let body = r#"{"inputs":{"polygon":{"type":"Polygon","coordinates":[[[0,0],[1,1],[0,0]]]}}}"#;
    let resp = gw.respond(&request(Method::POST, &area_jobs(), &[], body)).await;
    let links = extract_links(JSON, resp.body());
    assert!(resp.status().is_client_error(), "{}", resp.status());
    assert!(links.iter().any(|l| l.rel == Rel::Monitor));
}

#[tokio::test(flavor = "multi_thread")]
async fn conditional_get_answers_304() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let first = gw.respond(&get("/processes")).await;
    assert_eq!(first.status(), StatusCode::OK);
    assert_eq!(header(&first, "Cache-Control"), Some("public, max-age=3600"));
    let etag = header(&first, "ETag").unwrap().to_string();
    let last_modified = header(&first, "Last-Modified").unwrap().to_string();
    let again = gw
        .respond(&request(Method::GET, "/processes", &[("If-None-Match", &etag)], ""))
        .await;
    assert_eq!(again.status(), StatusCode::NOT_MODIFIED);
    assert!(again.body().is_empty());
    assert_eq!(header(&again, "ETag"), Some(etag.as_str()));
    let by_date = gw
        .respond(&request(Method::GET, "/processes", &[("If-Modified-Since", &last_modified)], ""))
        .await;
    assert_eq!(by_date.status(), StatusCode::NOT_MODIFIED);
}

#[tokio::test(flavor = "multi_thread")]
async fn delete_twice_is_204_then_404() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let created = gw.respond(&request(Method::POST, &area_jobs(), &[], SQUARE_JOB)).await;
    let path = header(&created, "Location").unwrap().strip_prefix(BASE).unwrap().to_string();
    let first = gw.respond(&request(Method::DELETE, &path, &[], "")).await;
    assert_eq!(first.status(), StatusCode::NO_CONTENT);
    assert!(first.body().is_empty());
    let digest = gw.store().digest();
    let second = gw.respond(&request(Method::DELETE, &path, &[], "")).await;
    assert_eq!(second.status(), StatusCode::NOT_FOUND);
    assert_eq!(gw.store().digest(), digest);
}

#[tokio::test(flavor = "multi_thread")]
async fn disallowed_verbs_get_405_with_allow() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let cases = [
        (Method::DELETE, format!("/processes/{AREA_PROCESS}"), "GET"),
        (Method::PUT, "/jobs".to_string(), "GET, POST"),
        (Method::POST, "/jobs/abc".to_string(), "GET, DELETE"),
        (Method::POST, "/".to_string(), "GET"),
    ];
    for (method, path, allow) in cases {
        let resp = gw.respond(&request(method, &path, &[], "")).await;
        assert_eq!(resp.status(), StatusCode::METHOD_NOT_ALLOWED);
        assert_eq!(header(&resp, "Allow"), Some(allow));
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn negotiation() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let bogus = gw.respond(&request(Method::GET, "/", &[("Accept", "image/png")], "")).await;
    assert_eq!(bogus.status(), StatusCode::NOT_ACCEPTABLE);
    for t in REPRESENTATION_TYPES {
        let path = format!("/processes/{AREA_PROCESS}");
        let resp = gw.respond(&request(Method::GET, &path, &[("Accept", t)], "")).await;
        assert_eq!(header(&resp, "Content-Type"), Some(t));
        assert_eq!(header(&resp, "Vary"), Some("Accept"));
        assert!(extract_links(t, resp.body()).iter().any(|l| l.rel == Rel::Execute));
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn operation_tunneling_is_refused() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let resp = gw.respond(&get("/?service=WPS&request=GetCapabilities")).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let resp = gw.respond(&get("/processes?REQUEST=DescribeProcess")).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_resources_are_404() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    for path in ["/nope", "/processes/Nope", "/jobs/nope", "/jobs/nope/result", "/processes/Nope/jobs"] {
        assert_eq!(gw.respond(&get(path)).await.status(), StatusCode::NOT_FOUND, "{path}");
    }
    let resp = gw.respond(&request(Method::POST, "/processes/Nope/jobs", &[], "{}")).await;
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn global_job_collection_needs_a_process() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    let resp = gw.respond(&request(Method::POST, "/jobs", &[], r#"{"inputs":{}}"#)).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let body = format!(r#"{{"process":"{INTERSECT_PROCESS}","inputs":{{"a":[0,0,2,2],"b":[1,1,3,3]}}}}"#);
    let resp = gw.respond(&request(Method::POST, "/jobs", &[], &body)).await;
    assert_eq!(resp.status(), StatusCode::CREATED);
    let listing = gw.respond(&get(&format!("/processes/{INTERSECT_PROCESS}/jobs"))).await;
    assert_eq!(json_body(&listing)["data"]["jobs"].as_array().unwrap().len(), 1);
    let area_listing = gw.respond(&get(&area_jobs())).await;
    assert_eq!(json_body(&area_listing)["data"]["jobs"].as_array().unwrap().len(), 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn cold_catalog_with_backend_down_is_503() {
    let backend = mock(FaultMode::None).await;
    let url = format!("{}/wps", backend.base_url());
    backend.shutdown().await;
    let gw = Gateway::new(BASE, Arc::new(HttpBackend::new(url, Duration::from_secs(2))), JobStore::in_memory());
    let resp = gw.respond(&get("/processes")).await;
    assert_eq!(resp.status(), StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(gw.respond(&get("/")).await.status(), StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread")]
async fn gets_do_not_change_the_store() {
    let (gw, _mock) = gateway(FaultMode::None).await;
    gw.respond(&request(Method::POST, &area_jobs(), &[], SQUARE_JOB)).await;
    let digest = gw.store().digest();
    for path in ["/", "/processes", "/jobs", &area_jobs(), &format!("{}?inputs=x", area_jobs())] {
        gw.respond(&get(path)).await;
    }
    assert_eq!(gw.store().digest(), digest);
}

#[test]
fn config_validation() {
    assert!(GatewayConfig::new("http://h:1", "http://b/wps").validate().is_ok());
    assert!(GatewayConfig::new("/relative", "http://b/wps").validate().is_err());
    assert!(GatewayConfig::new("http://h", "b/wps").validate().is_err());
    let mut c = GatewayConfig::new("http://h", "http://b/wps");
    c.cache_ttl = Duration::ZERO;
    assert!(c.validate().is_err());
}
