use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// One of the three WPS 1.0.0 operations a user agent can initiate.
#[derive(Debug, Clone, PartialEq)]
pub enum OperationRequest {
    GetCapabilities { service: String },
    DescribeProcess { identifiers: Vec<String> },
    Execute(ExecuteRequest),
}

impl OperationRequest {
    pub fn operation_name(&self) -> &'static str {
        match self {
            OperationRequest::GetCapabilities { .. } => "GetCapabilities",
            OperationRequest::DescribeProcess { .. } => "DescribeProcess",
            OperationRequest::Execute(_) => "Execute",
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            OperationRequest::GetCapabilities { service } => non_blank("service", service),
            OperationRequest::DescribeProcess { identifiers } => {
                if identifiers.is_empty() {
                    return Err(invalid("DescribeProcess needs at least one identifier"));
                }
                identifiers.iter().try_for_each(|id| non_blank("identifier", id))
            }
            OperationRequest::Execute(exec) => exec.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecuteRequest {
    pub process_id: String,
    /// Identifiers may repeat; the occurrence bound lives in the process description.
    pub inputs: Vec<(String, DataValue)>,
    pub response_form: ResponseForm,
}

impl ExecuteRequest {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        non_blank("process identifier", &self.process_id)?;
        for (id, value) in &self.inputs {
            non_blank("input identifier", id)?;
            value.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseForm {
    #[default]
    ByValue,
    ByReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralType {
    Double,
    Integer,
    String,
}

impl LiteralType {
    pub fn as_str(self) -> &'static str {
        match self {
            LiteralType::Double => "double",
            LiteralType::Integer => "integer",
            LiteralType::String => "string",
        }
    }

    /// Accepts the bare names as well as schema-qualified forms such as `xs:double`.
    pub fn parse(raw: &str) -> Option<Self> {
        let local = raw.rsplit([':', '#']).next().unwrap_or(raw).trim();
        match local.to_ascii_lowercase().as_str() {
            "double" | "float" | "decimal" => Some(LiteralType::Double),
            "integer" | "int" | "long" => Some(LiteralType::Integer),
            "string" => Some(LiteralType::String),
            _ => None,
        }
    }

    /// Whether `text` is a lexically valid value of this datatype.
    pub fn accepts(self, text: &str) -> bool {
        match self {
            LiteralType::Double => text.trim().parse::<f64>().is_ok_and(f64::is_finite),
            LiteralType::Integer => text.trim().parse::<i64>().is_ok(),
            LiteralType::String => true,
        }
    }
}

impl fmt::Display for LiteralType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataValue {
    Literal {
        text: String,
        datatype: LiteralType,
    },
    Complex {
        media_type: String,
        #[serde(flatten)]
        content: ComplexContent,
    },
    BoundingBox(BoundingBox),
}

impl DataValue {
    pub fn literal(text: impl Into<String>, datatype: LiteralType) -> Self {
        DataValue::Literal {
            text: text.into(),
            datatype,
        }
    }

    pub fn inline(media_type: impl Into<String>, body: impl Into<Vec<u8>>) -> Self {
        DataValue::Complex {
            media_type: media_type.into(),
            content: ComplexContent::Inline(body.into()),
        }
    }

    pub fn reference(media_type: impl Into<String>, href: impl Into<String>) -> Self {
        DataValue::Complex {
            media_type: media_type.into(),
            content: ComplexContent::Reference(href.into()),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            DataValue::Literal { .. } => Ok(()),
            DataValue::Complex {
                media_type,
                content,
            } => {
                non_blank("media type", media_type)?;
                match content {
                    ComplexContent::Reference(href) => non_blank("href", href),
                    ComplexContent::Inline(_) => Ok(()),
                }
            }
            DataValue::BoundingBox(bbox) => bbox.validate(),
        }
    }
}

/// A complex value travels either embedded in the message or as a URI to fetch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexContent {
    Inline(#[serde(with = "base64_bytes")] Vec<u8>),
    Reference(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub minx: f64,
    pub miny: f64,
    pub maxx: f64,
    pub maxy: f64,
    pub crs: String,
}

impl BoundingBox {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let coords = [self.minx, self.miny, self.maxx, self.maxy];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("bounding box coordinates must be finite"));
        }
        if self.minx > self.maxx || self.miny > self.maxy {
            return Err(invalid("bounding box lower corner exceeds upper corner"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessBrief {
    pub identifier: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceCapabilities {
    pub title: String,
    pub provider: String,
    pub endpoint: String,
    pub processes: Vec<ProcessBrief>,
}

impl ServiceCapabilities {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.processes.is_empty() {
            return Err(invalid("capabilities must offer at least one process"));
        }
        let mut seen = std::collections::HashSet::new();
        for brief in &self.processes {
            non_blank("process identifier", &brief.identifier)?;
            if !seen.insert(brief.identifier.as_str()) {
                return Err(invalid(format!(
                    "duplicate process identifier `{}`",
                    brief.identifier
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataKind {
    Literal { datatype: LiteralType },
    Complex { formats: Vec<String> },
    BoundingBox,
}

impl DataKind {
    fn validate(&self, owner: &str) -> Result<(), ProtocolError> {
        match self {
            DataKind::Complex { formats } if formats.is_empty() => Err(invalid(format!(
                "complex descriptor `{owner}` lists no supported format"
            ))),
            DataKind::Complex { formats } => {
                formats.iter().try_for_each(|f| non_blank("format", f))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub identifier: String,
    #[serde(flatten)]
    pub kind: DataKind,
    pub min_occurs: u32,
    pub max_occurs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDescriptor {
    pub identifier: String,
    #[serde(flatten)]
    pub kind: DataKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDescription {
    pub identifier: String,
    pub title: String,
    pub abstract_text: Option<String>,
    pub taxonomy_tags: Vec<String>,
    pub inputs: Vec<InputDescriptor>,
    pub outputs: Vec<OutputDescriptor>,
}

impl ProcessDescription {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        non_blank("process identifier", &self.identifier)?;
        if self.outputs.is_empty() {
            return Err(invalid(format!(
                "process `{}` declares no outputs",
                self.identifier
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for input in &self.inputs {
            non_blank("input identifier", &input.identifier)?;
            if !seen.insert(input.identifier.as_str()) {
                return Err(invalid(format!(
                    "duplicate input identifier `{}`",
                    input.identifier
                )));
            }
            if input.min_occurs > input.max_occurs {
                return Err(invalid(format!(
                    "input `{}` has minOccurs above maxOccurs",
                    input.identifier
                )));
            }
            input.kind.validate(&input.identifier)?;
        }
        for output in &self.outputs {
            non_blank("output identifier", &output.identifier)?;
            output.kind.validate(&output.identifier)?;
        }
        Ok(())
    }

    pub fn input(&self, identifier: &str) -> Option<&InputDescriptor> {
        self.inputs.iter().find(|i| i.identifier == identifier)
    }

    pub fn output(&self, identifier: &str) -> Option<&OutputDescriptor> {
        self.outputs.iter().find(|o| o.identifier == identifier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecuteResult {
    pub process_id: String,
    pub outputs: Vec<(String, DataValue)>,
}

impl ExecuteResult {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        non_blank("process identifier", &self.process_id)?;
        if self.outputs.is_empty() {
            return Err(invalid("execute result carries no outputs"));
        }
        for (id, value) in &self.outputs {
            non_blank("output identifier", id)?;
            value.validate()?;
        }
        Ok(())
    }

    pub fn output(&self, identifier: &str) -> Option<&DataValue> {
        self.outputs
            .iter()
            .find(|(id, _)| id == identifier)
            .map(|(_, v)| v)
    }
}

/// Exception codes named by WPS 1.0.0. Anything else is carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExceptionCode {
    MissingParameterValue,
    InvalidParameterValue,
    ServerBusy,
    NoApplicableCode,
    Other(String),
}

impl ExceptionCode {
    pub fn parse(raw: &str) -> Self {
        match raw {
            "MissingParameterValue" => ExceptionCode::MissingParameterValue,
            "InvalidParameterValue" => ExceptionCode::InvalidParameterValue,
            "ServerBusy" => ExceptionCode::ServerBusy,
            "NoApplicableCode" => ExceptionCode::NoApplicableCode,
            other => ExceptionCode::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ExceptionCode::MissingParameterValue => "MissingParameterValue",
            ExceptionCode::InvalidParameterValue => "InvalidParameterValue",
            ExceptionCode::ServerBusy => "ServerBusy",
            ExceptionCode::NoApplicableCode => "NoApplicableCode",
            ExceptionCode::Other(code) => code,
        }
    }
}

impl fmt::Display for ExceptionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ExceptionCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ExceptionCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(ExceptionCode::parse(&raw))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionEntry {
    pub code: ExceptionCode,
    pub locator: Option<String>,
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionReport {
    pub entries: Vec<ExceptionEntry>,
}

impl ExceptionReport {
    pub fn single(code: ExceptionCode, locator: Option<&str>, text: impl Into<String>) -> Self {
        ExceptionReport {
            entries: vec![ExceptionEntry {
                code,
                locator: locator.map(str::to_string),
                text: Some(text.into()),
            }],
        }
    }

    /// The entry whose code governs how the report is surfaced.
    pub fn primary(&self) -> Option<&ExceptionEntry> {
        self.entries.first()
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.entries.is_empty() {
            return Err(invalid("exception report has no entries"));
        }
        self.entries
            .iter()
            .try_for_each(|e| non_blank("exception code", e.code.as_str()))
    }
}

/// Either outcome of an Execute call; the client only learns which after parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecuteOutcome {
    Result(ExecuteResult),
    Exception(ExceptionReport),
}

fn non_blank(what: &str, value: &str) -> Result<(), ProtocolError> {
    if value.trim().is_empty() {
        Err(invalid(format!("{what} must not be blank")))
    } else {
        Ok(())
    }
}

fn invalid(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::InvalidModel(msg.into())
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let raw = String::deserialize(d)?;
        STANDARD.decode(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_type_accepts_schema_prefixes() {
        assert_eq!(LiteralType::parse("xs:double"), Some(LiteralType::Double));
        assert_eq!(LiteralType::parse("integer"), Some(LiteralType::Integer));
        assert_eq!(LiteralType::parse("boolean"), None);
    }

    #[test]
    fn double_datatype_rejects_words() {
        assert!(LiteralType::Double.accepts("1.5"));
        assert!(!LiteralType::Double.accepts("abc"));
        assert!(!LiteralType::Integer.accepts("1.5"));
    }

    #[test]
    fn unknown_exception_codes_pass_through() {
        let code = ExceptionCode::parse("WeirdVendorCode");
        assert_eq!(code, ExceptionCode::Other("WeirdVendorCode".into()));
        assert_eq!(code.as_str(), "WeirdVendorCode");
        assert_eq!(
            ExceptionCode::parse("ServerBusy"),
            ExceptionCode::ServerBusy
        );
    }

    #[test]
    fn empty_exception_report_is_invalid() {
        assert!(ExceptionReport { entries: vec![] }.validate().is_err());
    }

    #[test]
    fn inverted_bbox_is_invalid() {
        let bbox = BoundingBox {
            minx: 2.0,
            miny: 0.0,
            maxx: 1.0,
            maxy: 1.0,
            crs: "EPSG:4326".into(),
        };
        assert!(bbox.validate().is_err());
    }

    #[test]
    fn process_description_requires_an_output_and_distinct_inputs() {
        let input = InputDescriptor {
            identifier: "a".into(),
            kind: DataKind::BoundingBox,
            min_occurs: 1,
            max_occurs: 1,
        };
        let mut desc = ProcessDescription {
            identifier: "p".into(),
            title: "P".into(),
            abstract_text: None,
            taxonomy_tags: vec![],
            inputs: vec![input.clone(), input],
            outputs: vec![],
        };
        assert!(desc.validate().is_err());
        desc.outputs.push(OutputDescriptor {
            identifier: "o".into(),
            kind: DataKind::Literal {
                datatype: LiteralType::Double,
            },
        });
        assert!(desc.validate().is_err());
        desc.inputs.pop();
        assert!(desc.validate().is_ok());
    }

    #[test]
    fn data_value_serde_keeps_inline_bytes() {
        let value = DataValue::inline("application/octet-stream", vec![0u8, 255, 7]);
        let json = serde_json::to_string(&value).unwrap();
        assert_eq!(serde_json::from_str::<DataValue>(&json).unwrap(), value);
    }
}
