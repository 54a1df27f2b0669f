//! WPS 1.0.0 message model and its two HTTP bindings.
//!
//! Requests travel either as key-value pairs in the query string ([`kvp`]) or
//! as an XML document in a POST body ([`xml`]). Response documents
//! (capabilities, process descriptions, execute responses and exception
//! reports) only have an XML form.

pub mod kvp;
mod model;
pub mod xml;
mod xml_tree;

pub use model::*;
pub(crate) use xml_tree::{parse_document as xml_tree_parse, Element as XmlElement};

use thiserror::Error;

/// Namespace emitted on every WPS document. Parsers ignore namespaces and
/// match on local names.
pub const WPS_NAMESPACE: &str = "http://www.opengis.net/wps/1.0.0";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("request cannot be expressed as key-value pairs: {0}")]
    UnencodableRequest(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid value for parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
