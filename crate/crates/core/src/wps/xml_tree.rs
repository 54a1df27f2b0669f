//! Minimal element tree over quick-xml, keyed by local names.

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};

use super::ProtocolError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Element {
    /// Local name, prefix stripped.
    pub name: String,
    /// Attributes by local name, namespace declarations dropped.
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

impl Element {
    pub fn new(name: &str) -> Self {
        Element {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn attr(mut self, key: &str, value: impl Into<String>) -> Self {
        self.attrs.push((key.to_string(), value.into()));
        self
    }

    pub fn child(mut self, child: Element) -> Self {
        self.children.push(Node::Element(child));
        self
    }

    pub fn children_from(mut self, children: impl IntoIterator<Item = Element>) -> Self {
        self.children
            .extend(children.into_iter().map(Node::Element));
        self
    }

    pub fn text(mut self, text: impl Into<String>) -> Self {
        self.children.push(Node::Text(text.into()));
        self
    }

    pub fn leaf(name: &str, text: impl Into<String>) -> Self {
        Element::new(name).text(text)
    }

    pub fn get_attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require_attr(&self, key: &str) -> Result<&str, ProtocolError> {
        self.get_attr(key).ok_or_else(|| {
            ProtocolError::SchemaViolation(format!("<{}> lacks attribute `{key}`", self.name))
        })
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    pub fn find(&self, name: &str) -> Option<&Element> {
        self.elements().find(|e| e.name == name)
    }

    pub fn find_all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.elements().filter(move |e| e.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Element, ProtocolError> {
        self.find(name).ok_or_else(|| {
            ProtocolError::SchemaViolation(format!("<{}> lacks child <{name}>", self.name))
        })
    }

    /// Depth-first search including `self`.
    pub fn descendant(&self, name: &str) -> Option<&Element> {
        if self.name == name {
            return Some(self);
        }
        self.elements().find_map(|e| e.descendant(name))
    }

    /// Concatenated direct text content, untrimmed.
    pub fn text_content(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                Node::Text(t) => Some(t.as_str()),
                Node::Element(_) => None,
            })
            .collect()
    }

    pub fn child_text(&self, name: &str) -> Result<String, ProtocolError> {
        self.require(name).map(Element::text_content)
    }

    pub fn to_document(&self, namespace: &str) -> Vec<u8> {
        let mut writer = Writer::new(Vec::new());
        writer
            .write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
            .expect("writing to a Vec cannot fail");
        self.write(&mut writer, Some(namespace));
        writer.into_inner()
    }

    fn write(&self, writer: &mut Writer<Vec<u8>>, namespace: Option<&str>) {
        let mut start = BytesStart::new(self.name.as_str());
        if let Some(ns) = namespace {
            start.push_attribute(("xmlns", ns));
        }
        for (k, v) in &self.attrs {
            start.push_attribute((k.as_str(), v.as_str()));
        }
        let result = if self.children.is_empty() {
            writer.write_event(Event::Empty(start)).map(|_| ())
        } else {
            writer.write_event(Event::Start(start)).and_then(|_| {
                for child in &self.children {
                    match child {
                        Node::Element(e) => e.write(writer, None),
                        Node::Text(t) => writer.write_event(Event::Text(BytesText::from_escaped(
                            quick_xml::escape::partial_escape(t.as_str()),
                        )))?,
                    }
                }
                writer
                    .write_event(Event::End(BytesEnd::new(self.name.as_str())))
                    .map(|_| ())
            })
        };
        result.expect("writing to a Vec cannot fail");
    }
}

fn local(qname: &[u8]) -> String {
    let name = String::from_utf8_lossy(qname);
    match name.rsplit_once(':') {
        Some((_, local)) => local.to_string(),
        None => name.into_owned(),
    }
}

fn malformed(e: impl std::fmt::Display) -> ProtocolError {
    ProtocolError::MalformedDocument(e.to_string())
}

fn open(e: &BytesStart<'_>) -> Result<Element, ProtocolError> {
    let mut element = Element::new(&local(e.name().as_ref()));
    for attr in e.attributes() {
        let attr = attr.map_err(malformed)?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        if key == "xmlns" || key.starts_with("xmlns:") {
            continue;
        }
        let value = attr.unescape_value().map_err(malformed)?.into_owned();
        element.attrs.push((local(key.as_bytes()), value));
    }
    Ok(element)
}

fn push_text(stack: &mut [Element], text: &str) {
    if let Some(top) = stack.last_mut() {
        match top.children.last_mut() {
            Some(Node::Text(existing)) => existing.push_str(text),
            _ => top.children.push(Node::Text(text.to_string())),
        }
    }
}

/// Parses a complete document into its root element.
pub(crate) fn parse_document(bytes: &[u8]) -> Result<Element, ProtocolError> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("document is not UTF-8"))?;
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let event = reader.read_event().map_err(malformed)?;
        match event {
            Event::Start(e) => {
                if root.is_some() {
                    return Err(malformed("content after the root element"));
                }
                stack.push(open(&e)?);
            }
            Event::Empty(e) => {
                if root.is_some() {
                    return Err(malformed("content after the root element"));
                }
                let element = open(&e)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Node::Element(element)),
                    None => root = Some(element),
                }
            }
            Event::End(_) => {
                let element = stack.pop().ok_or_else(|| malformed("unbalanced end tag"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Node::Element(element)),
                    None => root = Some(element),
                }
            }
            Event::Text(t) => {
                let decoded = t.decode().map_err(malformed)?;
                if stack.is_empty() {
                    if !decoded.trim().is_empty() {
                        return Err(malformed("text outside the root element"));
                    }
                } else {
                    push_text(&mut stack, &decoded);
                }
            }
            Event::CData(t) => {
                let decoded = t.decode().map_err(malformed)?;
                if stack.is_empty() {
                    return Err(malformed("CDATA outside the root element"));
                }
                push_text(&mut stack, &decoded);
            }
            Event::GeneralRef(r) => {
                if stack.is_empty() {
                    return Err(malformed("entity reference outside the root element"));
                }
                let resolved = match r.resolve_char_ref().map_err(malformed)? {
                    Some(ch) => ch.to_string(),
                    None => {
                        let name = r.decode().map_err(malformed)?;
                        quick_xml::escape::resolve_predefined_entity(&name)
                            .ok_or_else(|| malformed(format!("unknown entity `&{name};`")))?
                            .to_string()
                    }
                };
                push_text(&mut stack, &resolved);
            }
            Event::Eof => break,
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) | Event::DocType(_) => {}
        }
    }
    if !stack.is_empty() {
        return Err(malformed("document ended inside an element"));
    }
    root.ok_or_else(|| malformed("document has no root element"))
}
