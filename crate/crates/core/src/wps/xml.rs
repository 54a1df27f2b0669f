//! XML/POST binding and the WPS response documents.
//!
//! Every document is emitted in the single [`WPS_NAMESPACE`] without
//! prefixes. Parsers match local names only, so prefixed documents from
//! other servers are accepted as well.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::xml_tree::{parse_document, Element};
use super::{
    BoundingBox, ComplexContent, DataKind, DataValue, ExceptionCode, ExceptionEntry,
    ExceptionReport, ExecuteOutcome, ExecuteRequest, ExecuteResult, InputDescriptor,
    LiteralType, OperationRequest, OutputDescriptor, ProcessBrief, ProcessDescription,
    ProtocolError, ResponseForm, ServiceCapabilities, WPS_NAMESPACE,
};

const VERSION: &str = "1.0.0";

fn schema(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::SchemaViolation(msg.into())
}

// ---------------------------------------------------------------------------
// requests

pub fn encode_xml(req: &OperationRequest) -> Result<Vec<u8>, ProtocolError> {
    req.validate()?;
    let root = match req {
        OperationRequest::GetCapabilities { service } => {
            Element::new("GetCapabilities").attr("service", service.as_str())
        }
        OperationRequest::DescribeProcess { identifiers } => Element::new("DescribeProcess")
            .attr("service", "WPS")
            .attr("version", VERSION)
            .children_from(identifiers.iter().map(|id| Element::leaf("Identifier", id))),
        OperationRequest::Execute(exec) => {
            let mut root = Element::new("Execute")
                .attr("service", "WPS")
                .attr("version", VERSION)
                .child(Element::leaf("Identifier", &exec.process_id));
            if !exec.inputs.is_empty() {
                root = root.child(Element::new("DataInputs").children_from(
                    exec.inputs.iter().map(|(id, value)| {
                        Element::new("Input")
                            .child(Element::leaf("Identifier", id))
                            .child(encode_value(value))
                    }),
                ));
            }
            let mode = match exec.response_form {
                ResponseForm::ByValue => "value",
                ResponseForm::ByReference => "reference",
            };
            root.child(Element::new("ResponseForm").attr("mode", mode))
        }
    };
    Ok(root.to_document(WPS_NAMESPACE))
}

pub fn parse_xml(bytes: &[u8]) -> Result<OperationRequest, ProtocolError> {
    let root = parse_document(bytes)?;
    match root.name.as_str() {
        "GetCapabilities" => Ok(OperationRequest::GetCapabilities {
            service: root.get_attr("service").unwrap_or("WPS").to_string(),
        }),
        "DescribeProcess" => {
            let identifiers: Vec<String> = root
                .find_all("Identifier")
                .map(Element::text_content)
                .collect();
            if identifiers.is_empty() || identifiers.iter().any(|i| i.trim().is_empty()) {
                return Err(ProtocolError::MissingParameter("Identifier".into()));
            }
            Ok(OperationRequest::DescribeProcess { identifiers })
        }
        "Execute" => {
            let process_id = root
                .find("Identifier")
                .map(Element::text_content)
                .filter(|id| !id.trim().is_empty())
                .ok_or_else(|| ProtocolError::MissingParameter("Identifier".into()))?;
            let inputs = match root.find("DataInputs") {
                Some(data_inputs) => data_inputs
                    .find_all("Input")
                    .map(|input| {
                        let id = input.child_text("Identifier")?;
                        if id.trim().is_empty() {
                            return Err(schema("input with blank identifier"));
                        }
                        Ok((id, decode_value(input)?))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => Vec::new(),
            };
            let response_form = match root
                .find("ResponseForm")
                .and_then(|rf| rf.get_attr("mode"))
            {
                Some("reference") => ResponseForm::ByReference,
                _ => ResponseForm::ByValue,
            };
            Ok(OperationRequest::Execute(ExecuteRequest {
                process_id,
                inputs,
                response_form,
            }))
        }
        other => Err(ProtocolError::UnknownOperation(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// data values

/// Text bodies stay readable; anything the XML text model would not preserve
/// byte-for-byte goes out as base64.
fn xml_safe_text(body: &[u8]) -> Option<&str> {
    let text = std::str::from_utf8(body).ok()?;
    let safe = text
        .chars()
        .all(|c| c == '\t' || c == '\n' || (!c.is_control() && c != '\u{FFFE}' && c != '\u{FFFF}'));
    safe.then_some(text)
}

fn encode_bbox(b: &BoundingBox) -> Element {
    Element::new("BoundingBoxData")
        .attr("crs", b.crs.as_str())
        .attr("dimensions", "2")
        .child(Element::leaf("LowerCorner", format!("{} {}", b.minx, b.miny)))
        .child(Element::leaf("UpperCorner", format!("{} {}", b.maxx, b.maxy)))
}

fn encode_value(value: &DataValue) -> Element {
    match value {
        DataValue::Literal { text, datatype } => Element::new("Data").child(
            Element::leaf("LiteralData", text.as_str()).attr("dataType", datatype.as_str()),
        ),
        DataValue::BoundingBox(b) => Element::new("Data").child(encode_bbox(b)),
        DataValue::Complex {
            media_type,
            content: ComplexContent::Reference(href),
        } => Element::new("Reference")
            .attr("href", href.as_str())
            .attr("mimeType", media_type.as_str()),
        DataValue::Complex {
            media_type,
            content: ComplexContent::Inline(body),
        } => {
            let complex = Element::new("ComplexData").attr("mimeType", media_type.as_str());
            let complex = match xml_safe_text(body) {
                Some(text) if !text.is_empty() => complex.text(text),
                Some(_) => complex,
                None => complex
                    .attr("encoding", "base64")
                    .text(STANDARD.encode(body)),
            };
            Element::new("Data").child(complex)
        }
    }
}

fn parse_pair(raw: &str, what: &str) -> Result<(f64, f64), ProtocolError> {
    let nums = raw
        .split_whitespace()
        .map(|n| n.parse::<f64>().map_err(|_| schema(format!("bad number `{n}` in {what}"))))
        .collect::<Result<Vec<_>, _>>()?;
    match nums[..] {
        [x, y] => Ok((x, y)),
        _ => Err(schema(format!("{what} needs two coordinates"))),
    }
}

fn decode_bbox(e: &Element) -> Result<BoundingBox, ProtocolError> {
    let (minx, miny) = parse_pair(&e.child_text("LowerCorner")?, "LowerCorner")?;
    let (maxx, maxy) = parse_pair(&e.child_text("UpperCorner")?, "UpperCorner")?;
    let bbox = BoundingBox {
        minx,
        miny,
        maxx,
        maxy,
        crs: e.get_attr("crs").unwrap_or_default().to_string(),
    };
    bbox.validate().map_err(|e| schema(e.to_string()))?;
    Ok(bbox)
}

/// Reads the value carried by an `Input` or `Output` element.
fn decode_value(holder: &Element) -> Result<DataValue, ProtocolError> {
    if let Some(reference) = holder.find("Reference") {
        let href = reference.require_attr("href")?;
        let media_type = reference
            .get_attr("mimeType")
            .unwrap_or("application/octet-stream");
        return Ok(DataValue::reference(media_type, href));
    }
    let data = holder
        .find("Data")
        .ok_or_else(|| schema(format!("<{}> carries neither Data nor Reference", holder.name)))?;
    if let Some(literal) = data.find("LiteralData") {
        let datatype = match literal.get_attr("dataType") {
            Some(dt) => LiteralType::parse(dt)
                .ok_or_else(|| schema(format!("unsupported literal datatype `{dt}`")))?,
            None => LiteralType::String,
        };
        return Ok(DataValue::literal(literal.text_content(), datatype));
    }
    if let Some(bbox) = data.find("BoundingBoxData") {
        return Ok(DataValue::BoundingBox(decode_bbox(bbox)?));
    }
    if let Some(complex) = data.find("ComplexData") {
        let media_type = complex.require_attr("mimeType")?;
        let text = complex.text_content();
        let body = match complex.get_attr("encoding") {
            Some(enc) if enc.eq_ignore_ascii_case("base64") => STANDARD
                .decode(text.trim())
                .map_err(|e| schema(format!("bad base64 body: {e}")))?,
            _ => text.into_bytes(),
        };
        return Ok(DataValue::inline(media_type, body));
    }
    Err(schema("<Data> carries no recognised value"))
}

// ---------------------------------------------------------------------------
// capabilities

pub fn encode_capabilities(caps: &ServiceCapabilities) -> Result<Vec<u8>, ProtocolError> {
    caps.validate()?;
    let operation = |name: &str| {
        Element::new("Operation").attr("name", name).child(
            Element::new("DCP").child(
                Element::new("HTTP")
                    .child(Element::new("Get").attr("href", caps.endpoint.as_str()))
                    .child(Element::new("Post").attr("href", caps.endpoint.as_str())),
            ),
        )
    };
    let root = Element::new("Capabilities")
        .attr("service", "WPS")
        .attr("version", VERSION)
        .child(Element::new("ServiceIdentification").child(Element::leaf("Title", &caps.title)))
        .child(
            Element::new("ServiceProvider")
                .child(Element::leaf("ProviderName", &caps.provider)),
        )
        .child(
            Element::new("OperationsMetadata")
                .child(operation("GetCapabilities"))
                .child(operation("DescribeProcess"))
                .child(operation("Execute")),
        )
        .child(
            Element::new("ProcessOfferings").children_from(caps.processes.iter().map(|p| {
                Element::new("Process")
                    .child(Element::leaf("Identifier", &p.identifier))
                    .child(Element::leaf("Title", &p.title))
            })),
        );
    Ok(root.to_document(WPS_NAMESPACE))
}

pub fn parse_capabilities(bytes: &[u8]) -> Result<ServiceCapabilities, ProtocolError> {
    let root = parse_document(bytes)?;
    if root.name != "Capabilities" {
        return Err(schema(format!("expected <Capabilities>, found <{}>", root.name)));
    }
    let title = root.require("ServiceIdentification")?.child_text("Title")?;
    let provider = root.require("ServiceProvider")?.child_text("ProviderName")?;
    let endpoint = root
        .require("OperationsMetadata")?
        .descendant("Get")
        .and_then(|get| get.get_attr("href"))
        .ok_or_else(|| schema("capabilities advertise no GET endpoint"))?
        .to_string();
    let processes = root
        .require("ProcessOfferings")?
        .find_all("Process")
        .map(|p| {
            Ok(ProcessBrief {
                identifier: p.child_text("Identifier")?,
                title: p.find("Title").map(Element::text_content).unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let caps = ServiceCapabilities {
        title,
        provider,
        endpoint,
        processes,
    };
    caps.validate().map_err(|e| schema(e.to_string()))?;
    Ok(caps)
}

// ---------------------------------------------------------------------------
// process descriptions

fn encode_kind(kind: &DataKind, output: bool) -> Element {
    let name = |input: &str, out: &str| if output { out.to_string() } else { input.to_string() };
    match kind {
        DataKind::Literal { datatype } => Element::new(&name("LiteralData", "LiteralOutput"))
            .child(Element::leaf("DataType", datatype.as_str())),
        DataKind::Complex { formats } => Element::new(&name("ComplexData", "ComplexOutput"))
            .child(Element::new("Supported").children_from(formats.iter().map(|f| {
                Element::new("Format").child(Element::leaf("MimeType", f))
            }))),
        DataKind::BoundingBox => Element::new(&name("BoundingBoxData", "BoundingBoxOutput")),
    }
}

fn decode_kind(holder: &Element) -> Result<DataKind, ProtocolError> {
    for e in holder.elements() {
        match e.name.as_str() {
            "LiteralData" | "LiteralOutput" => {
                let raw = match e.find("DataType") {
                    Some(dt) => dt
                        .get_attr("reference")
                        .map(str::to_string)
                        .unwrap_or_else(|| dt.text_content()),
                    None => "string".into(),
                };
                let datatype = LiteralType::parse(&raw)
                    .ok_or_else(|| schema(format!("unsupported literal datatype `{raw}`")))?;
                return Ok(DataKind::Literal { datatype });
            }
            "ComplexData" | "ComplexOutput" => {
                let formats = e
                    .find("Supported")
                    .map(|s| {
                        s.find_all("Format")
                            .map(|f| f.child_text("MimeType"))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?
                    .unwrap_or_default();
                return Ok(DataKind::Complex { formats });
            }
            "BoundingBoxData" | "BoundingBoxOutput" => return Ok(DataKind::BoundingBox),
            _ => {}
        }
    }
    Err(schema(format!("<{}> declares no data kind", holder.name)))
}

fn parse_occurs(e: &Element, key: &str) -> Result<u32, ProtocolError> {
    match e.get_attr(key) {
        None => Ok(1),
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| schema(format!("bad {key} `{raw}`"))),
    }
}

fn describe_element(desc: &ProcessDescription) -> Element {
    let mut e = Element::new("ProcessDescription")
        .child(Element::leaf("Identifier", &desc.identifier))
        .child(Element::leaf("Title", &desc.title));
    if let Some(text) = &desc.abstract_text {
        e = e.child(Element::leaf("Abstract", text));
    }
    e = e.children_from(
        desc.taxonomy_tags
            .iter()
            .map(|tag| Element::new("Metadata").attr("title", tag.as_str())),
    );
    if !desc.inputs.is_empty() {
        e = e.child(Element::new("DataInputs").children_from(desc.inputs.iter().map(|i| {
            Element::new("Input")
                .attr("minOccurs", i.min_occurs.to_string())
                .attr("maxOccurs", i.max_occurs.to_string())
                .child(Element::leaf("Identifier", &i.identifier))
                .child(encode_kind(&i.kind, false))
        })));
    }
    e.child(Element::new("ProcessOutputs").children_from(desc.outputs.iter().map(|o| {
        Element::new("Output")
            .child(Element::leaf("Identifier", &o.identifier))
            .child(encode_kind(&o.kind, true))
    })))
}

fn decode_description(e: &Element) -> Result<ProcessDescription, ProtocolError> {
    let inputs = match e.find("DataInputs") {
        Some(di) => di
            .find_all("Input")
            .map(|i| {
                Ok(InputDescriptor {
                    identifier: i.child_text("Identifier")?,
                    kind: decode_kind(i)?,
                    min_occurs: parse_occurs(i, "minOccurs")?,
                    max_occurs: parse_occurs(i, "maxOccurs")?,
                })
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?,
        None => Vec::new(),
    };
    let outputs = e
        .require("ProcessOutputs")?
        .find_all("Output")
        .map(|o| {
            Ok(OutputDescriptor {
                identifier: o.child_text("Identifier")?,
                kind: decode_kind(o)?,
            })
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let desc = ProcessDescription {
        identifier: e.child_text("Identifier")?,
        title: e.find("Title").map(Element::text_content).unwrap_or_default(),
        abstract_text: e.find("Abstract").map(Element::text_content),
        taxonomy_tags: e
            .find_all("Metadata")
            .filter_map(|m| m.get_attr("title").map(str::to_string))
            .collect(),
        inputs,
        outputs,
    };
    desc.validate().map_err(|e| schema(e.to_string()))?;
    Ok(desc)
}

pub fn encode_process_descriptions(
    descs: &[ProcessDescription],
) -> Result<Vec<u8>, ProtocolError> {
    descs.iter().try_for_each(ProcessDescription::validate)?;
    let root = Element::new("ProcessDescriptions")
        .attr("service", "WPS")
        .attr("version", VERSION)
        .children_from(descs.iter().map(describe_element));
    Ok(root.to_document(WPS_NAMESPACE))
}

pub fn encode_process_description(desc: &ProcessDescription) -> Result<Vec<u8>, ProtocolError> {
    encode_process_descriptions(std::slice::from_ref(desc))
}

pub fn parse_process_descriptions(bytes: &[u8]) -> Result<Vec<ProcessDescription>, ProtocolError> {
    let root = parse_document(bytes)?;
    match root.name.as_str() {
        "ProcessDescriptions" => root
            .find_all("ProcessDescription")
            .map(decode_description)
            .collect(),
        "ProcessDescription" => Ok(vec![decode_description(&root)?]),
        other => Err(schema(format!(
            "expected <ProcessDescriptions>, found <{other}>"
        ))),
    }
}

/// Parses a document expected to describe exactly one process.
pub fn parse_process_description(bytes: &[u8]) -> Result<ProcessDescription, ProtocolError> {
    let mut descs = parse_process_descriptions(bytes)?;
    match descs.len() {
        1 => Ok(descs.remove(0)),
        n => Err(schema(format!("expected one process description, found {n}"))),
    }
}

// ---------------------------------------------------------------------------
// execute responses and exceptions

pub fn encode_execute_response(result: &ExecuteResult) -> Result<Vec<u8>, ProtocolError> {
    result.validate()?;
    let root = Element::new("ExecuteResponse")
        .attr("service", "WPS")
        .attr("version", VERSION)
        .child(Element::new("Process").child(Element::leaf("Identifier", &result.process_id)))
        .child(
            Element::new("Status")
                .child(Element::leaf("ProcessSucceeded", "Process completed")),
        )
        .child(
            Element::new("ProcessOutputs").children_from(result.outputs.iter().map(
                |(id, value)| {
                    Element::new("Output")
                        .child(Element::leaf("Identifier", id))
                        .child(encode_value(value))
                },
            )),
        );
    Ok(root.to_document(WPS_NAMESPACE))
}

fn exception_report_element(report: &ExceptionReport) -> Element {
    Element::new("ExceptionReport")
        .attr("version", VERSION)
        .children_from(report.entries.iter().map(|entry| {
            let mut e = Element::new("Exception").attr("exceptionCode", entry.code.as_str());
            if let Some(locator) = &entry.locator {
                e = e.attr("locator", locator.as_str());
            }
            if let Some(text) = &entry.text {
                e = e.child(Element::leaf("ExceptionText", text));
            }
            e
        }))
}

pub fn encode_exception_report(report: &ExceptionReport) -> Result<Vec<u8>, ProtocolError> {
    report.validate()?;
    Ok(exception_report_element(report).to_document(WPS_NAMESPACE))
}

fn decode_exception_report(e: &Element) -> Result<ExceptionReport, ProtocolError> {
    let entries = e
        .find_all("Exception")
        .map(|x| {
            Ok(ExceptionEntry {
                code: ExceptionCode::parse(x.require_attr("exceptionCode")?),
                locator: x.get_attr("locator").map(str::to_string),
                text: x.find("ExceptionText").map(Element::text_content),
            })
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let report = ExceptionReport { entries };
    report.validate().map_err(|e| schema(e.to_string()))?;
    Ok(report)
}

pub fn parse_exception_report(bytes: &[u8]) -> Result<ExceptionReport, ProtocolError> {
    let root = parse_document(bytes)?;
    let report = root
        .descendant("ExceptionReport")
        .ok_or_else(|| schema(format!("expected <ExceptionReport>, found <{}>", root.name)))?;
    decode_exception_report(report)
}

/// Classifies an Execute response: any embedded exception report wins.
pub fn parse_execute_response(bytes: &[u8]) -> Result<ExecuteOutcome, ProtocolError> {
    let root = parse_document(bytes)?;
    if let Some(report) = root.descendant("ExceptionReport") {
        return decode_exception_report(report).map(ExecuteOutcome::Exception);
    }
    if root.name != "ExecuteResponse" {
        return Err(schema(format!(
            "expected <ExecuteResponse>, found <{}>",
            root.name
        )));
    }
    let process_id = root.require("Process")?.child_text("Identifier")?;
    let outputs = root
        .require("ProcessOutputs")?
        .find_all("Output")
        .map(|o| Ok((o.child_text("Identifier")?, decode_value(o)?)))
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let result = ExecuteResult {
        process_id,
        outputs,
    };
    result.validate().map_err(|e| schema(e.to_string()))?;
    Ok(ExecuteOutcome::Result(result))
}

/// Root element local name of a document, if it parses at all.
pub fn root_name(bytes: &[u8]) -> Option<String> {
    parse_document(bytes).ok().map(|root| root.name)
}
