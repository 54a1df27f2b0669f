#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;
use wpsrest_core::gateway::{Gateway, GatewayConfig};
use wpsrest_core::mock::{FaultConfig, FaultMode, MockWps};
use wpsrest_core::server::{bind_local, spawn, ServerHandle};
use wpsrest_core::wps::*;

pub async fn spawn_mock(mode: FaultMode) -> ServerHandle {
    let mock = MockWps::new(FaultConfig::new(mode, Duration::ZERO).unwrap());
    spawn(bind_local().await.unwrap(), Arc::new(mock)).unwrap()
}

pub struct RunningGateway {
    pub server: ServerHandle,
    pub gateway: Arc<Gateway>,
    pub base: String,
}

pub async fn spawn_gateway(mock: &ServerHandle, journal: Option<std::path::PathBuf>) -> RunningGateway {
    let listener = bind_local().await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let mut config = GatewayConfig::new(base.clone(), format!("{}/wps", mock.base_url()));
    config.journal = journal;
    let gateway = Arc::new(Gateway::from_config(&config).unwrap());
    let server = spawn(listener, gateway.clone()).unwrap();
    RunningGateway { server, gateway, base }
}

pub fn client() -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(Duration::from_secs(10))
        .build()
        .unwrap()
}

pub const SQUARE_JOB: &str =
    r#"{"inputs":{"polygon":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}}"#;

// Random model instances. Strings mix XML and KVP metacharacters with
// non-ASCII text so every escaping layer is exercised.

pub fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9 &<>\"'=;@,%+/?#._:äé你-]{0,15}"
}

pub fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 &<>\"'=;@,%+/._:äé你\\t\\n-]{0,24}"
}

pub fn media_type() -> impl Strategy<Value = String> {
    "[a-z]{1,8}/[a-z0-9.+-]{1,12}"
}

pub fn href() -> impl Strategy<Value = String> {
    "https?://[a-z]{1,8}(\\.[a-z]{2,3})?/[a-zA-Z0-9/._~?=&%-]{0,20}"
}

pub fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1.0e6..1.0e6f64,
        any::<f64>().prop_filter("finite", |f| f.is_finite()),
        Just(0.0),
        Just(-0.0),
    ]
}

pub fn bbox() -> impl Strategy<Value = BoundingBox> {
    (coord(), coord(), coord(), coord(), "EPSG:[0-9]{4,5}").prop_map(|(a, b, c, d, crs)| BoundingBox {
        minx: a.min(c),
        miny: b.min(d),
        maxx: a.max(c),
        maxy: b.max(d),
        crs,
    })
}

pub fn literal_type() -> impl Strategy<Value = LiteralType> {
    prop::sample::select(vec![LiteralType::Double, LiteralType::Integer, LiteralType::String])
}

/// Values every binding can carry.
pub fn kvp_value() -> impl Strategy<Value = DataValue> {
    prop_oneof![
        (text(), literal_type()).prop_map(|(t, d)| DataValue::literal(t, d)),
        (media_type(), href()).prop_map(|(m, h)| DataValue::reference(m, h)),
        bbox().prop_map(DataValue::BoundingBox),
    ]
}

pub fn any_value() -> impl Strategy<Value = DataValue> {
    prop_oneof![
        kvp_value(),
        (media_type(), prop::collection::vec(any::<u8>(), 0..64)).prop_map(|(m, b)| DataValue::inline(m, b)),
        (media_type(), text()).prop_map(|(m, t)| DataValue::inline(m, t.into_bytes())),
    ]
}

fn execute(value: BoxedStrategy<DataValue>) -> impl Strategy<Value = ExecuteRequest> {
    (
        ident(),
        prop::collection::vec((ident(), value), 0..4),
        prop::sample::select(vec![ResponseForm::ByValue, ResponseForm::ByReference]),
    )
        .prop_map(|(process_id, inputs, response_form)| ExecuteRequest {
            process_id,
            inputs,
            response_form,
        })
}

fn request(value: BoxedStrategy<DataValue>) -> impl Strategy<Value = OperationRequest> {
    prop_oneof![
        Just(OperationRequest::GetCapabilities { service: "WPS".into() }),
        prop::collection::vec(ident(), 1..4).prop_map(|identifiers| OperationRequest::DescribeProcess { identifiers }),
        execute(value).prop_map(OperationRequest::Execute),
    ]
}

pub fn kvp_request() -> impl Strategy<Value = OperationRequest> {
    request(kvp_value().boxed())
}

pub fn xml_request() -> impl Strategy<Value = OperationRequest> {
    request(any_value().boxed())
}

fn distinct<T: Clone>(items: Vec<T>, key: impl Fn(&T) -> String) -> Vec<T> {
    let mut seen = std::collections::HashSet::new();
    items.into_iter().filter(|i| seen.insert(key(i))).collect()
}

pub fn capabilities() -> impl Strategy<Value = ServiceCapabilities> {
    (
        text(),
        text(),
        href(),
        prop::collection::vec((ident(), text()), 1..5),
    )
        .prop_map(|(title, provider, endpoint, procs)| ServiceCapabilities {
            title,
            provider,
            endpoint,
            processes: distinct(procs, |p| p.0.clone())
                .into_iter()
                .map(|(identifier, title)| ProcessBrief { identifier, title })
                .collect(),
        })
}

pub fn data_kind() -> impl Strategy<Value = DataKind> {
    prop_oneof![
        literal_type().prop_map(|datatype| DataKind::Literal { datatype }),
        prop::collection::vec(media_type(), 1..3).prop_map(|formats| DataKind::Complex { formats }),
        Just(DataKind::BoundingBox),
    ]
}

pub fn process_description() -> impl Strategy<Value = ProcessDescription> {
    (
        ident(),
        text(),
        prop::option::of("[a-zA-Z0-9 &<>._äé你-]{1,24}"),
        prop::collection::vec(ident(), 0..3),
        prop::collection::vec((ident(), data_kind(), 0u32..3, 0u32..3), 0..4),
        prop::collection::vec((ident(), data_kind()), 1..3),
    )
        .prop_map(|(identifier, title, abstract_text, tags, inputs, outputs)| ProcessDescription {
            identifier,
            title,
            abstract_text,
            taxonomy_tags: tags,
            inputs: distinct(inputs, |i| i.0.clone())
                .into_iter()
                .map(|(identifier, kind, a, b)| InputDescriptor {
                    identifier,
                    kind,
                    min_occurs: a.min(b),
                    max_occurs: a.max(b).max(1),
                })
                .collect(),
            outputs: distinct(outputs, |o| o.0.clone())
                .into_iter()
                .map(|(identifier, kind)| OutputDescriptor { identifier, kind })
                .collect(),
        })
}

pub fn execute_result() -> impl Strategy<Value = ExecuteResult> {
    (ident(), prop::collection::vec((ident(), any_value()), 1..4))
        .prop_map(|(process_id, outputs)| ExecuteResult { process_id, outputs })
}

pub fn exception_code() -> impl Strategy<Value = ExceptionCode> {
    prop_oneof![
        Just(ExceptionCode::MissingParameterValue),
        Just(ExceptionCode::InvalidParameterValue),
        Just(ExceptionCode::ServerBusy),
        Just(ExceptionCode::NoApplicableCode),
        "Vendor[A-Za-z]{1,10}".prop_map(ExceptionCode::Other),
    ]
}

pub fn exception_report() -> impl Strategy<Value = ExceptionReport> {
    prop::collection::vec(
        (exception_code(), prop::option::of(ident()), prop::option::of("[a-zA-Z0-9 &<>._äé你-]{1,24}")),
        1..3,
    )
    .prop_map(|entries| ExceptionReport {
        entries: entries
            .into_iter()
            .map(|(code, locator, text)| ExceptionEntry { code, locator, text })
            .collect(),
    })
}

use proptest::test_runner::{Config, TestCaseError, TestRunner};
use wpsrest_core::wps::{kvp, xml};

pub const ROUND_TRIP_CASES: u32 = 1000;

fn run<S: Strategy>(strategy: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: ROUND_TRIP_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, f).map_err(|e| e.to_string())
}

/// parse(encode(m)) == m for every document kind, `ROUND_TRIP_CASES` each.
pub fn codec_round_trips() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        (
            "KVP request",
            run(kvp_request(), |m| {
                let back = kvp::parse_kvp(&kvp::encode_kvp(&m).unwrap());
                prop_assert_eq!(back, Ok(m));
                Ok(())
            }),
        ),
        (
            "XML request",
            run(xml_request(), |m| {
                let back = xml::parse_xml(&xml::encode_xml(&m).unwrap());
                prop_assert_eq!(back, Ok(m));
                Ok(())
            }),
        ),
        (
            "capabilities",
            run(capabilities(), |m| {
                let back = xml::parse_capabilities(&xml::encode_capabilities(&m).unwrap());
                prop_assert_eq!(back, Ok(m));
                Ok(())
            }),
        ),
        (
            "process descriptions",
            run(prop::collection::vec(process_description(), 1..3), |m| {
                let back = xml::parse_process_descriptions(&xml::encode_process_descriptions(&m).unwrap());
                prop_assert_eq!(back, Ok(m));
                Ok(())
            }),
        ),
        (
            "execute response",
            run(execute_result(), |m| {
                let back = xml::parse_execute_response(&xml::encode_execute_response(&m).unwrap());
                prop_assert_eq!(back, Ok(ExecuteOutcome::Result(m)));
                Ok(())
            }),
        ),
        (
            "exception report",
            run(exception_report(), |m| {
                let doc = xml::encode_exception_report(&m).unwrap();
                prop_assert_eq!(xml::parse_exception_report(&doc), Ok(m.clone()));
                prop_assert_eq!(xml::parse_execute_response(&doc), Ok(ExecuteOutcome::Exception(m)));
                Ok(())
            }),
        ),
    ]
}

const FRAGMENTS: &[&str] = &[
    "<", ">", "</", "/>", "<?xml version=\"1.0\"?>", "<Execute", "<Capabilities", "<ProcessDescriptions",
    "<ExceptionReport", "<ExecuteResponse", "<Output>", "<Data>", "<LiteralData dataType=\"double\">",
    "<ComplexData encoding=\"base64\">", "<BoundingBoxData>", "<LowerCorner>", "1 2", "&amp;", "&#x0;",
    "&bogus;", "<![CDATA[", "]]>", "xmlns=\"x\"", "=", "&", "?", "service=WPS", "request=Execute",
    "datainputs=", "identifier=", "@", ";", "%", "%ZZ", "{", "}", "[", "]", "\"", ",", "null",
    "\"type\":\"Polygon\"", "\"coordinates\"", "1e309", "-0", "NaN", "|", "\n", "/processes/", "/jobs/",
    "q=", "*/*", "text/html", "<a rel=\"self\" href=\"", "\"links\":[",
];

/// Feeds `count` generated byte strings to every parser and reports panics.
pub fn fuzz_parsers(count: usize, seed: u64) -> Result<usize, String> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use wpsrest_core::resource::{extract_links, parse_accept, route};

    let seeds: Vec<Vec<u8>> = vec![
        xml::encode_capabilities(&ServiceCapabilities {
            title: "t".into(),
            provider: "p".into(),
            endpoint: "http://h/wps".into(),
            processes: vec![ProcessBrief {
                identifier: "A".into(),
                title: "a".into(),
            }],
        })
        .unwrap(),
        xml::encode_process_descriptions(&wpsrest_core::mock::topology_processes()).unwrap(),
        xml::encode_exception_report(&ExceptionReport::single(ExceptionCode::ServerBusy, Some("x"), "busy")).unwrap(),
        SQUARE_JOB.as_bytes().to_vec(),
        b"service=WPS&request=Execute&identifier=A&datainputs=a=1@datatype=double;b=0,0,1,1@crs=EPSG:4326".to_vec(),
    ];
    let mut rng = StdRng::seed_from_u64(seed);
    let mut calls = 0;
    for i in 0..count {
        let input: Vec<u8> = match i % 3 {
            0 => (0..rng.random_range(0..256)).map(|_| rng.random()).collect(),
            1 => {
                let mut doc = seeds[rng.random_range(0..seeds.len())].clone();
                for _ in 0..rng.random_range(1..8) {
                    let at = rng.random_range(0..=doc.len());
                    match rng.random_range(0..3) {
                        0 if at < doc.len() => doc[at] = rng.random(),
                        1 if at < doc.len() => {
                            doc.remove(at);
                        }
                        _ => doc.insert(at, rng.random()),
                    }
                }
                doc.truncate(rng.random_range(0..=doc.len()));
                doc
            }
            _ => (0..rng.random_range(0..24))
                .flat_map(|_| FRAGMENTS[rng.random_range(0..FRAGMENTS.len())].bytes())
                .collect(),
        };
        let text = String::from_utf8_lossy(&input).into_owned();
        let outcome = std::panic::catch_unwind(|| {
            let _ = kvp::parse_kvp(&text);
            let _ = xml::parse_xml(&input);
            let _ = xml::parse_capabilities(&input);
            let _ = xml::parse_process_descriptions(&input);
            let _ = xml::parse_execute_response(&input);
            let _ = xml::parse_exception_report(&input);
            let _ = route(&text);
            let _ = parse_accept(&text);
            for t in ["application/json", "application/xml", "text/html"] {
                let _ = extract_links(t, &input);
            }
            let _ = wpsrest_core::gateway::parse_job_request(&input);
            let _ = wpsrest_core::mock::geometry::Polygon::from_geojson_bytes(&input);
            let _ = wpsrest_core::auditor::parse_table(&text);
        });
        if outcome.is_err() {
            return Err(format!("parser panicked on input #{i}: {:?}", String::from_utf8_lossy(&input)));
        }
        calls += 16;
    }
    Ok(calls)
}
