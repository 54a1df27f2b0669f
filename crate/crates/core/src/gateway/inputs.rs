use base64::Engine;
use serde_json::{json, Map, Value};

use crate::mock::DEFAULT_CRS;
use crate::wps::{
    BoundingBox, ComplexContent, DataKind, DataValue, ExceptionCode, ExceptionReport, InputDescriptor,
    ProcessDescription,
};

/// A parsed job submission: `{"inputs": {...}, "outputs": [...]}`, plus
/// `"process"` when posted to the unscoped job collection.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRequest {
    pub process: Option<String>,
    pub inputs: Map<String, Value>,
    pub outputs: Option<Vec<String>>,
}

fn invalid(locator: &str, reason: impl Into<String>) -> ExceptionReport {
    ExceptionReport::single(ExceptionCode::InvalidParameterValue, Some(locator), reason)
}

fn missing(locator: &str) -> ExceptionReport {
    ExceptionReport::single(
        ExceptionCode::MissingParameterValue,
        Some(locator),
        format!("input `{locator}` is required"),
    )
}

pub fn parse_job_request(body: &[u8]) -> Result<JobRequest, ExceptionReport> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| invalid("body", format!("job request is not JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(invalid("body", "job request must be a JSON object"));
    };
    let process = match obj.remove("process") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(invalid("process", "must be a process identifier string")),
    };
    let inputs = match obj.remove("inputs") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m,
        Some(_) => return Err(invalid("inputs", "must be an object keyed by input identifier")),
    };
    let outputs = match obj.remove("outputs") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => Some(
            items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    _ => Err(invalid("outputs", "must list output identifiers")),
                })
                .collect::<Result<_, _>>()?,
        ),
        Some(_) => return Err(invalid("outputs", "must list output identifiers")),
    };
    if let Some(key) = obj.keys().next() {
        return Err(invalid(key, format!("unknown job request member `{key}`")));
    }
    Ok(JobRequest {
        process,
        inputs,
        outputs,
    })
}

fn occurrences<'a>(kind: &DataKind, value: &'a Value) -> Vec<&'a Value> {
    match (kind, value) {
        (DataKind::BoundingBox, Value::Array(items)) if items.iter().all(Value::is_number) => vec![value],
        (_, Value::Array(items)) => items.iter().collect(),
        _ => vec![value],
    }
}

fn convert(desc: &InputDescriptor, value: &Value) -> Result<DataValue, ExceptionReport> {
    let id = desc.identifier.as_str();
    match &desc.kind {
        DataKind::Literal { datatype } => {
            let text = match value {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                _ => return Err(invalid(id, "literal inputs take a JSON scalar")),
            };
            if !datatype.accepts(&text) {
                return Err(invalid(id, format!("`{text}` is not a valid {datatype}")));
            }
            Ok(DataValue::literal(text, *datatype))
        }
        DataKind::BoundingBox => {
            let (corners, crs) = match value {
                Value::Array(_) => (value, DEFAULT_CRS.to_string()),
                Value::Object(o) => (
                    o.get("bbox").unwrap_or(&Value::Null),
                    match o.get("crs") {
                        None => DEFAULT_CRS.to_string(),
                        Some(Value::String(s)) => s.clone(),
                        Some(_) => return Err(invalid(id, "crs must be a string")),
                    },
                ),
                _ => return Err(invalid(id, "bounding boxes are [minx, miny, maxx, maxy]")),
            };
            let nums: Option<Vec<f64>> = corners
                .as_array()
                .map(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
                .unwrap_or(None);
            let Some([minx, miny, maxx, maxy]) = nums.as_deref().and_then(|n| <[f64; 4]>::try_from(n).ok())
            else {
                return Err(invalid(id, "bounding boxes are [minx, miny, maxx, maxy]"));
            };
            let bbox = BoundingBox {
                minx,
                miny,
                maxx,
                maxy,
                crs,
            };
            bbox.validate().map_err(|e| invalid(id, e.to_string()))?;
            Ok(DataValue::BoundingBox(bbox))
        }
        DataKind::Complex { formats } => {
            let supported = |t: &str| formats.iter().any(|f| f.eq_ignore_ascii_case(t));
            if let Some(Value::String(href)) = value.get("href") {
                let media_type = match value.get("mediaType") {
                    Some(Value::String(t)) => t.clone(),
                    None => formats[0].clone(),
                    Some(_) => return Err(invalid(id, "mediaType must be a string")),
                };
                if !supported(&media_type) {
                    return Err(invalid(id, format!("format `{media_type}` is not supported")));
                }
                if href.trim().is_empty() {
                    return Err(invalid(id, "href is empty"));
                }
                return Ok(DataValue::reference(media_type, href.clone()));
            }
            match value {
                Value::String(s) => Ok(DataValue::inline(formats[0].clone(), s.clone().into_bytes())),
                _ if supported("application/json") => {
                    Ok(DataValue::inline("application/json", value.to_string().into_bytes()))
                }
                _ => Err(invalid(id, "embedded JSON is not an accepted format for this input")),
            }
        }
    }
}

/// Checks a submission against the process's input descriptors and turns it
/// into WPS values, in descriptor order.
pub fn validate_inputs(
    submitted: &Map<String, Value>,
    process: &ProcessDescription,
) -> Result<Vec<(String, DataValue)>, ExceptionReport> {
    if let Some(unknown) = submitted.keys().find(|k| process.input(k).is_none()) {
        return Err(invalid(
            unknown,
            format!("process `{}` has no input `{unknown}`", process.identifier),
        ));
    }
    let mut normalized = Vec::new();
    for desc in &process.inputs {
        let values = match submitted.get(&desc.identifier) {
            None | Some(Value::Null) => vec![],
            Some(v) => occurrences(&desc.kind, v),
        };
        let count = values.len() as u32;
        if count < desc.min_occurs {
            return Err(missing(&desc.identifier));
        }
        if count > desc.max_occurs {
            return Err(invalid(
                &desc.identifier,
                format!("at most {} value(s) allowed, got {count}", desc.max_occurs),
            ));
        }
        for v in values {
            normalized.push((desc.identifier.clone(), convert(desc, v)?));
        }
    }
    Ok(normalized)
}

pub fn validate_outputs(requested: &[String], process: &ProcessDescription) -> Result<(), ExceptionReport> {
    match requested.iter().find(|o| process.output(o).is_none()) {
        Some(o) => Err(invalid("outputs", format!("process has no output `{o}`"))),
        None => Ok(()),
    }
}

/// JSON view of a WPS value, the inverse of the submission format where one exists.
pub fn value_to_json(value: &DataValue) -> Value {
    match value {
        DataValue::Literal { text, datatype } => json!({"value": text, "dataType": datatype}),
        DataValue::BoundingBox(b) => json!({"bbox": [b.minx, b.miny, b.maxx, b.maxy], "crs": b.crs}),
        DataValue::Complex {
            media_type,
            content: ComplexContent::Reference(href),
        } => json!({"href": href, "mediaType": media_type}),
        DataValue::Complex {
            media_type,
            content: ComplexContent::Inline(body),
        } => {
            let embedded = media_type
                .eq_ignore_ascii_case("application/json")
                .then(|| serde_json::from_slice::<Value>(body).ok())
                .flatten();
            match (embedded, std::str::from_utf8(body)) {
                (Some(v), _) => json!({"value": v, "mediaType": media_type}),
                (None, Ok(s)) => json!({"value": s, "mediaType": media_type}),
                (None, Err(_)) => json!({
                    "value": base64::engine::general_purpose::STANDARD.encode(body),
                    "encoding": "base64",
                    "mediaType": media_type,
                }),
            }
        }
    }
}
