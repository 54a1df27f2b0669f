use std::time::SystemTime;

use bytes::Bytes;
use serde::Serialize;
use serde_json::Value;

use super::TypedLink;
use crate::semantics::compute_etag;
use crate::wps::{xml_tree_parse, XmlElement, WPS_NAMESPACE};

pub const JSON: &str = "application/json";
pub const XML: &str = "application/xml";
pub const HTML: &str = "text/html";

/// Representation formats in server preference order.
pub const REPRESENTATION_TYPES: [&str; 3] = [JSON, XML, HTML];

const ATOM_NAMESPACE: &str = "http://www.w3.org/2005/Atom";
const RESOURCE_NAMESPACE: &str = "urn:wpsrest:resource";

/// The domain content behind a resource, before it is given a media type.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceBody {
    pub title: String,
    /// Root element name for XML renderings built from `data`.
    pub root: String,
    pub data: Value,
    /// A native XML document (a WPS document) to use instead of converting `data`.
    pub xml: Option<Vec<u8>>,
}

impl ResourceBody {
    pub fn new(title: impl Into<String>, root: impl Into<String>, data: Value) -> Self {
        ResourceBody {
            title: title.into(),
            root: root.into(),
            data,
            xml: None,
        }
    }

    pub fn with_xml(mut self, doc: Vec<u8>) -> Self {
        self.xml = Some(doc);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub media_type: String,
    pub body: Bytes,
    pub links: Vec<TypedLink>,
    pub etag: String,
    pub last_modified: SystemTime,
}

#[derive(Serialize)]
struct Envelope<'a> {
    data: &'a Value,
    links: &'a [TypedLink],
}

/// Renders `object` in `media_type`, embedding `links` in the body. Types
/// outside [`REPRESENTATION_TYPES`] render as JSON.
pub fn render(
    object: &ResourceBody,
    media_type: &str,
    links: Vec<TypedLink>,
    last_modified: SystemTime,
) -> Representation {
    let (media_type, body) = match media_type {
        XML => (XML, render_xml(object, &links)),
        HTML => (HTML, render_html(object, &links)),
        _ => (JSON, render_json(object, &links)),
    };
    Representation {
        media_type: media_type.to_string(),
        etag: compute_etag(&body),
        body: Bytes::from(body),
        links,
        last_modified,
    }
}

fn render_json(object: &ResourceBody, links: &[TypedLink]) -> Vec<u8> {
    serde_json::to_vec(&Envelope {
        data: &object.data,
        links,
    })
    .expect("JSON values always serialize")
}

fn link_element(link: &TypedLink) -> XmlElement {
    let mut e = XmlElement::new("link")
        .attr("xmlns", ATOM_NAMESPACE)
        .attr("rel", link.rel.as_str())
        .attr("href", link.href.as_str());
    if let Some(t) = &link.media_type {
        e = e.attr("type", t.as_str());
    }
    if let Some(t) = &link.title {
        e = e.attr("title", t.as_str());
    }
    e
}

fn is_xml_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !s.to_ascii_lowercase().starts_with("xml")
}

fn json_to_xml(name: &str, value: &Value) -> XmlElement {
    let mut e = if is_xml_name(name) {
        XmlElement::new(name)
    } else {
        XmlElement::new("field").attr("name", name)
    };
    match value {
        Value::Null => {}
        Value::Bool(b) => e = e.text(b.to_string()),
        Value::Number(n) => e = e.text(n.to_string()),
        Value::String(s) => e = e.text(s.as_str()),
        Value::Array(items) => e = e.children_from(items.iter().map(|v| json_to_xml("item", v))),
        Value::Object(map) => e = e.children_from(map.iter().map(|(k, v)| json_to_xml(k, v))),
    }
    e
}

fn render_xml(object: &ResourceBody, links: &[TypedLink]) -> Vec<u8> {
    let native = object.xml.as_deref().and_then(|doc| xml_tree_parse(doc).ok());
    let (root, namespace) = match native {
        Some(root) => (root, WPS_NAMESPACE),
        None => (json_to_xml(&object.root, &object.data), RESOURCE_NAMESPACE),
    };
    root.children_from(links.iter().map(link_element))
        .to_document(namespace)
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn render_html(object: &ResourceBody, links: &[TypedLink]) -> Vec<u8> {
    let title = escape_html(&object.title);
    let data = serde_json::to_string_pretty(&object.data).expect("JSON values always serialize");
    let mut page = format!(
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{title}</title></head>\n\
         <body>\n<h1>{title}</h1>\n<pre>{}</pre>\n<ul class=\"links\">\n",
        escape_html(&data)
    );
    for link in links {
        let mut attrs = format!(
            "rel=\"{}\" href=\"{}\"",
            link.rel,
            escape_html(&link.href)
        );
        if let Some(t) = &link.media_type {
            attrs.push_str(&format!(" type=\"{}\"", escape_html(t)));
        }
        if let Some(t) = &link.title {
            attrs.push_str(&format!(" title=\"{}\"", escape_html(t)));
        }
        let label = link.title.as_deref().unwrap_or(link.rel.as_str());
        page.push_str(&format!(
            "<li>{}: <a {attrs}>{}</a></li>\n",
            link.rel,
            escape_html(label)
        ));
    }
    page.push_str("</ul>\n</body>\n</html>\n");
    page.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::super::{extract_links, links_for, uri_for, Rel, ResourceId, StateSummary};
    use super::*;
    use crate::mock::{topology_processes, AREA_PROCESS};
    use crate::wps::xml::encode_process_description;
    use proptest::prelude::*;
    use serde_json::json;

    const BASE: &str = "http://gw";

    #[test]
    fn json_envelope_shape() {
        let links = vec![TypedLink::new(Rel::SelfLink, "http://gw/").typed(JSON)];
        let rep = render(
            &ResourceBody::new("Entry", "Entry", json!({"name": "x"})),
            JSON,
            links,
            SystemTime::UNIX_EPOCH,
        );
        assert_eq!(
            std::str::from_utf8(&rep.body).unwrap(),
            r#"{"data":{"name":"x"},"links":[{"rel":"self","href":"http://gw/","type":"application/json"}]}"#
        );
        assert_eq!(rep.etag, compute_etag(&rep.body));
    }

    #[test]
    fn process_json_contains_self_href() {
        let catalog = topology_processes();
        let id = ResourceId::Process(AREA_PROCESS.into());
        let links = links_for(
            &id,
            StateSummary::Process {
                process: &catalog[0],
                catalog: &catalog,
            },
            BASE,
        );
        let rep = render(
            &ResourceBody::new("Area", "Process", json!({"identifier": AREA_PROCESS})),
            JSON,
            links,
            SystemTime::UNIX_EPOCH,
        );
        let v: Value = serde_json::from_slice(&rep.body).unwrap();
        let self_href = uri_for(&id, BASE);
        assert!(v["links"]
            .as_array()
            .unwrap()
            .iter()
            .any(|l| l["rel"] == "self" && l["href"] == self_href.as_str()));
    }

    #[test]
    fn entry_html_has_collection_anchors() {
        let links = links_for(&ResourceId::Entry, StateSummary::Entry, BASE);
        let rep = render(
            &ResourceBody::new("Entry", "Entry", json!({})),
            HTML,
            links,
            SystemTime::UNIX_EPOCH,
        );
        let page = String::from_utf8(rep.body.to_vec()).unwrap();
        assert!(page.contains(r#"<a rel="collection" href="http://gw/processes""#));
        assert!(page.contains(r#"<a rel="collection" href="http://gw/jobs""#));
    }

    #[test]
    fn native_xml_document_keeps_its_shape() {
        let catalog = topology_processes();
        let doc = encode_process_description(&catalog[0]).unwrap();
        let links = vec![TypedLink::new(Rel::SelfLink, "http://gw/processes/x")];
        let rep = render(
            &ResourceBody::new("Area", "Process", json!({})).with_xml(doc),
            XML,
            links.clone(),
            SystemTime::UNIX_EPOCH,
        );
        let descs = crate::wps::xml::parse_process_descriptions(&rep.body).unwrap();
        assert_eq!(descs[0], catalog[0]);
        assert_eq!(extract_links(XML, &rep.body), links);
    }

    fn link() -> impl Strategy<Value = TypedLink> {
        (
            prop::sample::select(Rel::ALL.to_vec()),
            "http://[a-z]{1,8}/[a-zA-Z0-9/._~%&?=-]{0,20}",
            prop::option::of("[a-z]{1,8}/[a-z+.-]{1,10}"),
            prop::option::of("\\PC{0,12}"),
        )
            .prop_map(|(rel, href, media_type, title)| TypedLink {
                rel,
                href,
                media_type,
                title,
            })
    }

    fn json_value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Bool),
            any::<i32>().prop_map(|n| json!(n)),
            "\\PC{0,16}".prop_map(Value::String),
        ];
        leaf.prop_recursive(3, 16, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
                prop::collection::btree_map("[a-z ]{1,6}", inner, 0..4)
                    .prop_map(|m| Value::Object(m.into_iter().collect())),
            ]
        })
    }

    proptest! {
        #[test]
        fn links_survive_every_media_type(
            data in json_value(),
            links in prop::collection::vec(link(), 1..6),
            title in "\\PC{0,16}",
        ) {
            let object = ResourceBody::new(title, "Thing", data);
            for media_type in REPRESENTATION_TYPES {
                let rep = render(&object, media_type, links.clone(), SystemTime::UNIX_EPOCH);
                prop_assert_eq!(extract_links(media_type, &rep.body), links.clone());
            }
        }
    }
}
