//! Key-value-pair binding ("URI tunneling").
//!
//! Keys are emitted as `service`, `request`, then the remaining keys in
//! alphabetical order. Parsing matches keys and the `service`/`request`
//! values case-insensitively.
//!
//! Execute inputs follow the WPS `DataInputs` layout:
//! `datainputs=id=value@attr=v;id2=...`. Every component is percent-encoded
//! on its own, so the `;`, `@`, `=` and `,` separators stay unambiguous.

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::{
    BoundingBox, ComplexContent, DataValue, ExecuteRequest, LiteralType, OperationRequest,
    ProtocolError, ResponseForm,
};

/// Everything outside RFC 3986 unreserved characters gets escaped.
const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

fn enc(raw: &str) -> String {
    utf8_percent_encode(raw, COMPONENT).to_string()
}

fn dec(raw: &str, key: &str) -> Result<String, ProtocolError> {
    percent_decode_str(&raw.replace('+', " "))
        .decode_utf8()
        .map(|s| s.into_owned())
        .map_err(|_| ProtocolError::InvalidParameter {
            name: key.to_string(),
            reason: "value is not valid UTF-8".into(),
        })
}

pub fn encode_kvp(req: &OperationRequest) -> Result<String, ProtocolError> {
    req.validate()?;
    let mut pairs: Vec<(&str, String)> = Vec::new();
    match req {
        OperationRequest::GetCapabilities { service } => {
            pairs.push(("service", enc(service)));
            pairs.push(("request", "GetCapabilities".into()));
        }
        OperationRequest::DescribeProcess { identifiers } => {
            pairs.push(("service", "WPS".into()));
            pairs.push(("request", "DescribeProcess".into()));
            let ids: Vec<String> = identifiers.iter().map(|id| enc(id)).collect();
            pairs.push(("identifier", ids.join(",")));
        }
        OperationRequest::Execute(exec) => {
            pairs.push(("service", "WPS".into()));
            pairs.push(("request", "Execute".into()));
            let mut rest: Vec<(&str, String)> = Vec::new();
            if !exec.inputs.is_empty() {
                let items = exec
                    .inputs
                    .iter()
                    .map(|(id, value)| encode_data_input(id, value))
                    .collect::<Result<Vec<_>, _>>()?;
                rest.push(("datainputs", items.join(";")));
            }
            rest.push(("identifier", enc(&exec.process_id)));
            rest.push((
                "responseform",
                match exec.response_form {
                    ResponseForm::ByValue => "value",
                    ResponseForm::ByReference => "reference",
                }
                .into(),
            ));
            rest.sort_by(|a, b| a.0.cmp(b.0));
            pairs.extend(rest);
        }
    }
    Ok(pairs
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("&"))
}

fn encode_data_input(id: &str, value: &DataValue) -> Result<String, ProtocolError> {
    let body = match value {
        DataValue::Literal { text, datatype } => {
            format!("{}@datatype={}", enc(text), datatype.as_str())
        }
        DataValue::BoundingBox(b) => format!(
            "{},{},{},{}@crs={}",
            b.minx,
            b.miny,
            b.maxx,
            b.maxy,
            enc(&b.crs)
        ),
        DataValue::Complex {
            media_type,
            content: ComplexContent::Reference(href),
        } => format!("@href={}@mimetype={}", enc(href), enc(media_type)),
        DataValue::Complex {
            content: ComplexContent::Inline(_),
            ..
        } => {
            return Err(ProtocolError::UnencodableRequest(format!(
                "input `{id}` embeds a complex value; only literals, bounding boxes and references fit in a URI"
            )))
        }
    };
    Ok(format!("{}={}", enc(id), body))
}

/// Splits a raw query string into (lower-cased key, raw value) pairs.
fn split_query(query: &str) -> Vec<(String, &str)> {
    query
        .trim_start_matches('?')
        .split('&')
        .filter(|p| !p.is_empty())
        .map(|pair| match pair.split_once('=') {
            Some((k, v)) => (k.to_ascii_lowercase(), v),
            None => (pair.to_ascii_lowercase(), ""),
        })
        .collect()
}

/// Whether a query string carries a WPS `request` key, in any casing.
pub fn has_operation_key(query: &str) -> bool {
    split_query(query).iter().any(|(k, _)| k == "request")
}

pub fn parse_kvp(query: &str) -> Result<OperationRequest, ProtocolError> {
    let pairs = split_query(query);
    let raw = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
    let required = |key: &str| raw(key).ok_or_else(|| ProtocolError::MissingParameter(key.into()));

    let operation = dec(required("request")?, "request")?;
    match operation.to_ascii_lowercase().as_str() {
        "getcapabilities" => {
            let service = dec(required("service")?, "service")?;
            Ok(OperationRequest::GetCapabilities { service })
        }
        "describeprocess" => {
            let raw_ids = required("identifier")?;
            let identifiers = raw_ids
                .split(',')
                .map(|id| dec(id, "identifier"))
                .collect::<Result<Vec<_>, _>>()?;
            if identifiers.iter().any(|id| id.trim().is_empty()) {
                return Err(ProtocolError::MissingParameter("identifier".into()));
            }
            Ok(OperationRequest::DescribeProcess { identifiers })
        }
        "execute" => {
            let process_id = dec(required("identifier")?, "identifier")?;
            if process_id.trim().is_empty() {
                return Err(ProtocolError::MissingParameter("identifier".into()));
            }
            let inputs = match raw("datainputs") {
                Some(v) if !v.is_empty() => v
                    .split(';')
                    .filter(|item| !item.is_empty())
                    .map(parse_data_input)
                    .collect::<Result<Vec<_>, _>>()?,
                _ => Vec::new(),
            };
            let response_form = match raw("responseform").map(|v| v.to_ascii_lowercase()) {
                None => ResponseForm::ByValue,
                Some(v) if v == "value" || v == "responsedocument" => ResponseForm::ByValue,
                Some(v) if v == "reference" => ResponseForm::ByReference,
                Some(v) => {
                    return Err(ProtocolError::InvalidParameter {
                        name: "responseform".into(),
                        reason: format!("unsupported value `{v}`"),
                    })
                }
            };
            Ok(OperationRequest::Execute(ExecuteRequest {
                process_id,
                inputs,
                response_form,
            }))
        }
        _ => Err(ProtocolError::UnknownOperation(operation)),
    }
}

fn parse_data_input(item: &str) -> Result<(String, DataValue), ProtocolError> {
    let (raw_id, rest) = item
        .split_once('=')
        .ok_or_else(|| ProtocolError::InvalidParameter {
            name: "datainputs".into(),
            reason: format!("entry `{item}` lacks `=`"),
        })?;
    let id = dec(raw_id, "datainputs")?;
    if id.trim().is_empty() {
        return Err(ProtocolError::InvalidParameter {
            name: "datainputs".into(),
            reason: "blank input identifier".into(),
        });
    }
    let mut parts = rest.split('@');
    let raw_value = parts.next().unwrap_or("");
    let mut attrs = Vec::new();
    for attr in parts {
        let (k, v) = attr.split_once('=').unwrap_or((attr, ""));
        // `xlink:href` and friends: keep the local part only
        let k = k.rsplit(':').next().unwrap_or(k).to_ascii_lowercase();
        attrs.push((k, dec(v, &id)?));
    }
    let attr = |name: &str| attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.clone());
    let invalid = |reason: String| ProtocolError::InvalidParameter {
        name: id.clone(),
        reason,
    };

    let value = if let Some(href) = attr("href") {
        let media_type = attr("mimetype").unwrap_or_else(|| "application/octet-stream".into());
        DataValue::reference(media_type, href)
    } else if let Some(crs) = attr("crs") {
        let coords = raw_value
            .split(',')
            .map(|c| dec(c, &id).and_then(|c| c.trim().parse::<f64>().map_err(|e| invalid(e.to_string()))))
            .collect::<Result<Vec<_>, _>>()?;
        let [minx, miny, maxx, maxy] = coords[..] else {
            return Err(invalid(format!("bounding box needs 4 coordinates, got {}", coords.len())));
        };
        let bbox = BoundingBox {
            minx,
            miny,
            maxx,
            maxy,
            crs,
        };
        bbox.validate().map_err(|e| invalid(e.to_string()))?;
        DataValue::BoundingBox(bbox)
    } else {
        let datatype = match attr("datatype") {
            Some(dt) => LiteralType::parse(&dt)
                .ok_or_else(|| invalid(format!("unsupported datatype `{dt}`")))?,
            None => LiteralType::String,
        };
        DataValue::literal(dec(raw_value, &id)?, datatype)
    };
    Ok((id, value))
}
