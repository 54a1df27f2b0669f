//! A simulated WPS 1.0.0 service offering three topology processes.
//!
//! The backend deliberately behaves like a typical RPC-style WPS
//! deployment: one endpoint for every operation, HTTP 200 even when the body
//! is an exception report, no cache validators, and Execute accepted over
//! GET. Those are exactly the traits the auditor is expected to flag.

pub mod geometry;

use std::str::FromStr;
use std::time::Duration;

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use bytes::Bytes;
use http::{Method, Request, StatusCode};
use percent_encoding::percent_decode_str;
use thiserror::Error;

use crate::server::{response, HttpHandler, Reply};
use crate::wps::{
    kvp, xml, BoundingBox, ComplexContent, DataKind, DataValue, ExceptionCode,
    ExceptionReport, ExecuteRequest, ExecuteResult, InputDescriptor, LiteralType,
    OperationRequest, OutputDescriptor, ProcessBrief, ProcessDescription, ProtocolError,
    ResponseForm, ServiceCapabilities,
};
use geometry::{area, bounding_box, intersect, Polygon, Rect};

pub const AREA_PROCESS: &str = "org.n52.wps.server.algorithm.topology.Area";
pub const BBOX_PROCESS: &str = "org.n52.wps.server.algorithm.topology.BoundingBox";
pub const INTERSECT_PROCESS: &str = "org.n52.wps.server.algorithm.topology.Intersect";

pub const DEFAULT_ENDPOINT_PATH: &str = "/wps";
pub const DEFAULT_CRS: &str = "EPSG:4326";
pub const MAX_LATENCY: Duration = Duration::from_secs(60);

const XML_CONTENT_TYPE: &str = "text/xml; charset=UTF-8";
const FETCH_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultMode {
    #[default]
    None,
    /// Every Execute answers with a `ServerBusy` exception.
    ServerBusy,
    /// Every Execute has its connection closed before any response.
    DropConnection,
}

impl FromStr for FaultMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(FaultMode::None),
            "server-busy" => Ok(FaultMode::ServerBusy),
            "drop" => Ok(FaultMode::DropConnection),
            other => Err(format!(
                "unknown fault mode `{other}` (expected none, server-busy or drop)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaultConfig {
    pub mode: FaultMode,
    pub added_latency: Duration,
}

#[derive(Debug, Error)]
#[error("added latency {0:?} exceeds the {MAX_LATENCY:?} ceiling")]
pub struct LatencyTooHigh(pub Duration);

impl FaultConfig {
    pub fn new(mode: FaultMode, added_latency: Duration) -> Result<Self, LatencyTooHigh> {
        if added_latency > MAX_LATENCY {
            return Err(LatencyTooHigh(added_latency));
        }
        Ok(FaultConfig {
            mode,
            added_latency,
        })
    }
}

/// Descriptions of the three processes the mock offers.
pub fn topology_processes() -> Vec<ProcessDescription> {
    let polygon_input = InputDescriptor {
        identifier: "polygon".into(),
        kind: DataKind::Complex {
            formats: vec!["application/json".into()],
        },
        min_occurs: 1,
        max_occurs: 1,
    };
    let rect_input = |id: &str| InputDescriptor {
        identifier: id.into(),
        kind: DataKind::BoundingBox,
        min_occurs: 1,
        max_occurs: 1,
    };
    let tags = vec!["topology".to_string()];
    vec![
        ProcessDescription {
            identifier: AREA_PROCESS.into(),
            title: "Area".into(),
            abstract_text: Some("Planar area of a polygon (shoelace formula).".into()),
            taxonomy_tags: tags.clone(),
            inputs: vec![polygon_input.clone()],
            outputs: vec![OutputDescriptor {
                identifier: "area".into(),
                kind: DataKind::Literal {
                    datatype: LiteralType::Double,
                },
            }],
        },
        ProcessDescription {
            identifier: BBOX_PROCESS.into(),
            title: "Bounding box".into(),
            abstract_text: Some("Axis-aligned bounding box of a polygon.".into()),
            taxonomy_tags: tags.clone(),
            inputs: vec![polygon_input],
            outputs: vec![OutputDescriptor {
                identifier: "bbox".into(),
                kind: DataKind::BoundingBox,
            }],
        },
        ProcessDescription {
            identifier: INTERSECT_PROCESS.into(),
            title: "Intersect".into(),
            abstract_text: Some(
                "Intersection of two bounding boxes, as a GeoJSON polygon or an empty collection."
                    .into(),
            ),
            taxonomy_tags: tags,
            inputs: vec![rect_input("a"), rect_input("b")],
            outputs: vec![OutputDescriptor {
                identifier: "intersection".into(),
                kind: DataKind::Complex {
                    formats: vec!["application/json".into()],
                },
            }],
        },
    ]
}

/// Builds a `data:` URI holding `body`.
pub fn data_uri(media_type: &str, body: &[u8]) -> String {
    format!("data:{media_type};base64,{}", STANDARD.encode(body))
}

/// Decodes a `data:` URI into its payload; `None` if `href` is not one or is malformed.
pub fn decode_data_uri(href: &str) -> Option<Vec<u8>> {
    let rest = href.strip_prefix("data:")?;
    let (meta, payload) = rest.split_once(',')?;
    if meta.ends_with(";base64") {
        STANDARD.decode(payload).ok()
    } else {
        Some(percent_decode_str(payload).collect())
    }
}

pub struct MockWps {
    processes: Vec<ProcessDescription>,
    fault: FaultConfig,
    endpoint_path: String,
    client: reqwest::Client,
}

impl MockWps {
    pub fn new(fault: FaultConfig) -> Self {
        MockWps {
            processes: topology_processes(),
            fault,
            endpoint_path: DEFAULT_ENDPOINT_PATH.into(),
            client: reqwest::Client::builder()
                .timeout(FETCH_TIMEOUT)
                .build()
                .expect("default HTTP client builds"),
        }
    }

    pub fn endpoint_path(&self) -> &str {
        &self.endpoint_path
    }

    pub fn process(&self, identifier: &str) -> Option<&ProcessDescription> {
        self.processes.iter().find(|p| p.identifier == identifier)
    }

    fn capabilities(&self, endpoint: String) -> ServiceCapabilities {
        ServiceCapabilities {
            title: "Topology WPS".into(),
            provider: "wpsrest mock".into(),
            endpoint,
            processes: self
                .processes
                .iter()
                .map(|p| ProcessBrief {
                    identifier: p.identifier.clone(),
                    title: p.title.clone(),
                })
                .collect(),
        }
    }

    /// Answers one request. Errors are always exception reports with status 200.
    pub async fn handle_request(&self, req: &Request<Bytes>) -> Reply {
        if !self.fault.added_latency.is_zero() {
            tokio::time::sleep(self.fault.added_latency).await;
        }
        if req.uri().path() != self.endpoint_path {
            return response(StatusCode::NOT_FOUND, "text/plain", "no such endpoint").into();
        }
        let parsed = match *req.method() {
            Method::GET => kvp::parse_kvp(req.uri().query().unwrap_or("")),
            Method::POST => xml::parse_xml(req.body()),
            _ => {
                return exception(ExceptionReport::single(
                    ExceptionCode::Other("OperationNotSupported".into()),
                    Some("method"),
                    format!("HTTP method {} is not supported", req.method()),
                ))
            }
        };
        let request = match parsed {
            Ok(r) => r,
            Err(e) => return exception(protocol_exception(e)),
        };
        match request {
            OperationRequest::GetCapabilities { service } => {
                if !service.eq_ignore_ascii_case("WPS") {
                    return exception(ExceptionReport::single(
                        ExceptionCode::InvalidParameterValue,
                        Some("service"),
                        format!("unsupported service `{service}`"),
                    ));
                }
                let host = req
                    .headers()
                    .get(http::header::HOST)
                    .and_then(|h| h.to_str().ok())
                    .unwrap_or("localhost");
                let caps = self.capabilities(format!("http://{host}{}", self.endpoint_path));
                xml_reply(xml::encode_capabilities(&caps))
            }
            OperationRequest::DescribeProcess { identifiers } => {
                let mut found = Vec::new();
                for id in &identifiers {
                    match self.process(id) {
                        Some(p) => found.push(p.clone()),
                        None => return exception(unknown_process(id)),
                    }
                }
                xml_reply(xml::encode_process_descriptions(&found))
            }
            OperationRequest::Execute(exec) => match self.fault.mode {
                FaultMode::DropConnection => Reply::Drop,
                FaultMode::ServerBusy => exception(ExceptionReport::single(
                    ExceptionCode::ServerBusy,
                    None,
                    "the server is too busy to accept the request, try again later",
                )),
                FaultMode::None => match self.execute(&exec).await {
                    Ok(result) => xml_reply(xml::encode_execute_response(&result)),
                    Err(report) => exception(report),
                },
            },
        }
    }

    /// Runs a process. Either every declared output is produced or an
    /// exception report is returned.
    pub async fn execute(&self, exec: &ExecuteRequest) -> Result<ExecuteResult, ExceptionReport> {
        let process = self
            .process(&exec.process_id)
            .ok_or_else(|| unknown_process(&exec.process_id))?;
        check_inputs(process, &exec.inputs)?;
        let input = |id: &str| {
            exec.inputs
                .iter()
                .find(|(k, _)| k == id)
                .map(|(_, v)| v)
                .expect("presence checked against the descriptor")
        };
        let outputs: Vec<(String, DataValue)> = match process.identifier.as_str() {
            AREA_PROCESS => {
                let polygon = self.polygon_input("polygon", input("polygon")).await?;
                vec![(
                    "area".into(),
                    DataValue::literal(format!("{:?}", area(&polygon)), LiteralType::Double),
                )]
            }
            BBOX_PROCESS => {
                let polygon = self.polygon_input("polygon", input("polygon")).await?;
                let r = bounding_box(&polygon);
                vec![(
                    "bbox".into(),
                    DataValue::BoundingBox(BoundingBox {
                        minx: r.minx,
                        miny: r.miny,
                        maxx: r.maxx,
                        maxy: r.maxy,
                        crs: DEFAULT_CRS.into(),
                    }),
                )]
            }
            INTERSECT_PROCESS => {
                let (a, crs_a) = rect_input("a", input("a"))?;
                let (b, crs_b) = rect_input("b", input("b"))?;
                if crs_a != crs_b {
                    return Err(ExceptionReport::single(
                        ExceptionCode::InvalidParameterValue,
                        Some("b"),
                        format!("CRS mismatch: `{crs_a}` versus `{crs_b}`"),
                    ));
                }
                let geojson = match intersect(&a, &b) {
                    Some(r) => r.to_geojson(),
                    None => serde_json::json!({"type": "GeometryCollection", "geometries": []}),
                };
                vec![(
                    "intersection".into(),
                    DataValue::inline("application/json", geojson.to_string().into_bytes()),
                )]
            }
            other => return Err(unknown_process(other)),
        };
        let outputs = match exec.response_form {
            ResponseForm::ByValue => outputs,
            ResponseForm::ByReference => outputs
                .into_iter()
                .map(|(id, value)| (id, by_reference(value)))
                .collect(),
        };
        Ok(ExecuteResult {
            process_id: process.identifier.clone(),
            outputs,
        })
    }

    async fn polygon_input(&self, id: &str, value: &DataValue) -> Result<Polygon, ExceptionReport> {
        let DataValue::Complex { content, .. } = value else {
            return Err(invalid(id, "expected a complex GeoJSON value"));
        };
        let body = match content {
            ComplexContent::Inline(body) => body.clone(),
            ComplexContent::Reference(href) => self.fetch(id, href).await?,
        };
        Polygon::from_geojson_bytes(&body).map_err(|e| invalid(id, &e.to_string()))
    }

    async fn fetch(&self, id: &str, href: &str) -> Result<Vec<u8>, ExceptionReport> {
        if href.starts_with("data:") {
            return decode_data_uri(href).ok_or_else(|| invalid(id, "malformed data URI"));
        }
        if !(href.starts_with("http://") || href.starts_with("https://")) {
            return Err(invalid(id, "reference must be an http(s) or data URI"));
        }
        let resp = self
            .client
            .get(href)
            .send()
            .await
            .map_err(|e| invalid(id, &format!("cannot fetch reference: {e}")))?;
        if !resp.status().is_success() {
            return Err(invalid(
                id,
                &format!("reference answered HTTP {}", resp.status()),
            ));
        }
        resp.bytes()
            .await
            .map(|b| b.to_vec())
            .map_err(|e| invalid(id, &format!("cannot read reference: {e}")))
    }
}

#[async_trait]
impl HttpHandler for MockWps {
    async fn handle(&self, req: Request<Bytes>) -> Reply {
        self.handle_request(&req).await
    }
}

fn check_inputs(
    process: &ProcessDescription,
    inputs: &[(String, DataValue)],
) -> Result<(), ExceptionReport> {
    if let Some((unknown, _)) = inputs.iter().find(|(id, _)| process.input(id).is_none()) {
        return Err(invalid(unknown, "process declares no such input"));
    }
    for desc in &process.inputs {
        let values: Vec<&DataValue> = inputs
            .iter()
            .filter(|(id, _)| *id == desc.identifier)
            .map(|(_, v)| v)
            .collect();
        if (values.len() as u32) < desc.min_occurs {
            return Err(ExceptionReport::single(
                ExceptionCode::MissingParameterValue,
                Some(&desc.identifier),
                format!("input `{}` is required", desc.identifier),
            ));
        }
        if values.len() as u32 > desc.max_occurs {
            return Err(invalid(&desc.identifier, "too many occurrences"));
        }
        for value in values {
            let fits = match (&desc.kind, value) {
                (DataKind::Literal { datatype }, DataValue::Literal { text, .. }) => {
                    datatype.accepts(text)
                }
                (DataKind::Complex { formats }, DataValue::Complex { media_type, .. }) => {
                    formats.iter().any(|f| f.eq_ignore_ascii_case(media_type))
                }
                (DataKind::BoundingBox, DataValue::BoundingBox(_)) => true,
                _ => false,
            };
            if !fits {
                return Err(invalid(&desc.identifier, "value does not match the declared type"));
            }
        }
    }
    Ok(())
}

fn rect_input(id: &str, value: &DataValue) -> Result<(Rect, String), ExceptionReport> {
    match value {
        DataValue::BoundingBox(b) => Rect::new(b.minx, b.miny, b.maxx, b.maxy)
            .map(|r| (r, b.crs.clone()))
            .ok_or_else(|| invalid(id, "inverted bounding box")),
        _ => Err(invalid(id, "expected a bounding box")),
    }
}

fn by_reference(value: DataValue) -> DataValue {
    match value {
        DataValue::Literal { text, .. } => {
            DataValue::reference("text/plain", data_uri("text/plain", text.as_bytes()))
        }
        DataValue::Complex {
            media_type,
            content: ComplexContent::Inline(body),
        } => {
            let href = data_uri(&media_type, &body);
            DataValue::reference(media_type, href)
        }
        DataValue::BoundingBox(b) => {
            let body = serde_json::json!({
                "bbox": [b.minx, b.miny, b.maxx, b.maxy],
                "crs": b.crs,
            })
            .to_string();
            DataValue::reference("application/json", data_uri("application/json", body.as_bytes()))
        }
        reference => reference,
    }
}

fn invalid(locator: &str, text: &str) -> ExceptionReport {
    ExceptionReport::single(ExceptionCode::InvalidParameterValue, Some(locator), text)
}

fn unknown_process(id: &str) -> ExceptionReport {
    invalid("identifier", &format!("no process named `{id}`"))
}

fn protocol_exception(e: ProtocolError) -> ExceptionReport {
    match e {
        ProtocolError::MissingParameter(name) => ExceptionReport::single(
            ExceptionCode::MissingParameterValue,
            Some(&name),
            format!("parameter `{name}` is required"),
        ),
        ProtocolError::UnknownOperation(op) => ExceptionReport::single(
            ExceptionCode::Other("OperationNotSupported".into()),
            Some("request"),
            format!("operation `{op}` is not supported"),
        ),
        ProtocolError::InvalidParameter { name, reason } => {
            invalid(&name, &reason)
        }
        other => ExceptionReport::single(ExceptionCode::NoApplicableCode, None, other.to_string()),
    }
}

fn xml_reply(doc: Result<Vec<u8>, ProtocolError>) -> Reply {
    match doc {
        Ok(bytes) => response(StatusCode::OK, XML_CONTENT_TYPE, bytes).into(),
        Err(e) => exception(ExceptionReport::single(
            ExceptionCode::NoApplicableCode,
            None,
            e.to_string(),
        )),
    }
}

/// Exception reports ride on HTTP 200, as the backend's clients expect.
fn exception(report: ExceptionReport) -> Reply {
    let body = xml::encode_exception_report(&report)
        .expect("reports built here always carry an entry");
    response(StatusCode::OK, XML_CONTENT_TYPE, body).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wps::ExecuteOutcome;

    const UNIT_SQUARE: &str =
        r#"{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}"#;

    fn get(query: &str) -> Request<Bytes> {
        Request::get(format!("http://localhost/wps?{query}"))
            .header("host", "localhost")
            .body(Bytes::new())
            .unwrap()
    }

    fn post(body: Vec<u8>) -> Request<Bytes> {
        Request::post("http://localhost/wps")
            .body(Bytes::from(body))
            .unwrap()
    }

    async fn body_of(mock: &MockWps, req: Request<Bytes>) -> (StatusCode, Bytes) {
        match mock.handle_request(&req).await {
            Reply::Respond(r) => {
                assert!(r.headers().get("etag").is_none());
                assert!(r.headers().get("last-modified").is_none());
                assert!(r.headers().get("cache-control").is_none());
                (r.status(), r.into_body())
            }
            Reply::Drop => panic!("connection dropped"),
        }
    }

    fn area_request(form: ResponseForm) -> Vec<u8> {
        xml::encode_xml(&OperationRequest::Execute(ExecuteRequest {
            process_id: AREA_PROCESS.into(),
            inputs: vec![(
                "polygon".into(),
                DataValue::inline("application/json", UNIT_SQUARE.as_bytes().to_vec()),
            )],
            response_form: form,
        }))
        .unwrap()
    }

    #[tokio::test]
    async fn capabilities_list_three_processes() {
        let mock = MockWps::new(FaultConfig::default());
        let (status, body) = body_of(&mock, get("request=getcapabilities&service=wps")).await;
        assert_eq!(status, StatusCode::OK);
        let caps = xml::parse_capabilities(&body).unwrap();
        assert_eq!(caps.processes.len(), 3);
        assert_eq!(caps.endpoint, "http://localhost/wps");
    }

    #[tokio::test]
    async fn missing_request_is_exception_with_200() {
        let mock = MockWps::new(FaultConfig::default());
        let (status, body) = body_of(&mock, get("service=WPS")).await;
        assert_eq!(status, StatusCode::OK);
        let report = xml::parse_exception_report(&body).unwrap();
        assert_eq!(report.entries[0].code, ExceptionCode::MissingParameterValue);
    }

    #[tokio::test]
    async fn area_of_unit_square_over_post() {
        let mock = MockWps::new(FaultConfig::default());
        let (status, body) = body_of(&mock, post(area_request(ResponseForm::ByValue))).await;
        assert_eq!(status, StatusCode::OK);
        let ExecuteOutcome::Result(result) = xml::parse_execute_response(&body).unwrap() else {
            panic!("expected a result");
        };
        assert_eq!(
            result.output("area"),
            Some(&DataValue::literal("1.0", LiteralType::Double))
        );
    }

    #[tokio::test]
    async fn repeated_execution_is_byte_identical() {
        let mock = MockWps::new(FaultConfig::default());
        let (_, first) = body_of(&mock, post(area_request(ResponseForm::ByReference))).await;
        let (_, second) = body_of(&mock, post(area_request(ResponseForm::ByReference))).await;
        assert_eq!(first, second);
        let ExecuteOutcome::Result(result) = xml::parse_execute_response(&first).unwrap() else {
            panic!("expected a result");
        };
        let Some(DataValue::Complex { content: ComplexContent::Reference(href), .. }) =
            result.output("area")
        else {
            panic!("expected a reference output");
        };
        assert_eq!(decode_data_uri(href).unwrap(), b"1.0");
    }

    #[tokio::test]
    async fn execute_over_get_is_accepted() {
        let mock = MockWps::new(FaultConfig::default());
        let query = format!(
            "service=WPS&request=Execute&identifier={INTERSECT_PROCESS}\
             &datainputs=a=0,0,2,2@crs=EPSG%3A4326;b=1,1,3,3@crs=EPSG%3A4326"
        );
        let (_, body) = body_of(&mock, get(&query)).await;
        let ExecuteOutcome::Result(result) = xml::parse_execute_response(&body).unwrap() else {
            panic!("expected a result");
        };
        let Some(DataValue::Complex { content: ComplexContent::Inline(json), .. }) =
            result.output("intersection")
        else {
            panic!("expected inline GeoJSON");
        };
        let polygon = Polygon::from_geojson_bytes(json).unwrap();
        assert_eq!(bounding_box(&polygon), Rect::new(1., 1., 2., 2.).unwrap());
    }

    #[tokio::test]
    async fn missing_intersect_operand() {
        let mock = MockWps::new(FaultConfig::default());
        let query = format!(
            "service=WPS&request=Execute&identifier={INTERSECT_PROCESS}&datainputs=a=0,0,2,2@crs=EPSG%3A4326"
        );
        let (_, body) = body_of(&mock, get(&query)).await;
        let report = xml::parse_exception_report(&body).unwrap();
        assert_eq!(report.entries[0].code, ExceptionCode::MissingParameterValue);
        assert_eq!(report.entries[0].locator.as_deref(), Some("b"));
    }

    #[tokio::test]
    async fn server_busy_fault() {
        let mock = MockWps::new(FaultConfig::new(FaultMode::ServerBusy, Duration::ZERO).unwrap());
        let (status, body) = body_of(&mock, post(area_request(ResponseForm::ByValue))).await;
        assert_eq!(status, StatusCode::OK);
        let report = xml::parse_exception_report(&body).unwrap();
        assert_eq!(report.entries[0].code, ExceptionCode::ServerBusy);
        // catalog operations keep working
        let (_, caps) = body_of(&mock, get("service=WPS&request=GetCapabilities")).await;
        assert!(xml::parse_capabilities(&caps).is_ok());
    }

    #[tokio::test]
    async fn drop_fault_closes_connection_on_execute() {
        let mock =
            MockWps::new(FaultConfig::new(FaultMode::DropConnection, Duration::ZERO).unwrap());
        let req = post(area_request(ResponseForm::ByValue));
        assert!(matches!(mock.handle_request(&req).await, Reply::Drop));
    }

    #[test]
    fn latency_is_capped() {
        assert!(FaultConfig::new(FaultMode::None, Duration::from_secs(61)).is_err());
        assert_eq!("server-busy".parse::<FaultMode>(), Ok(FaultMode::ServerBusy));
    }

    #[test]
    fn data_uri_round_trip() {
        let href = data_uri("application/json", b"{\"a\":1}");
        assert_eq!(decode_data_uri(&href).unwrap(), b"{\"a\":1}");
        assert_eq!(decode_data_uri("data:,hello%20there").unwrap(), b"hello there");
    }

    #[test]
    fn every_process_is_tagged_topology() {
        for p in topology_processes() {
            assert!(p.taxonomy_tags.iter().any(|t| t == "topology"));
            p.validate().unwrap();
        }
    }
}
