//! Minimal XML reading and writing.
//!
//! The engine stores everything as XML: schemas, fact documents, the
//! warehouse files, the join index, query and result files, mined rules and
//! descriptors. This module implements the element/attribute subset those
//! formats need, with a fully deterministic writer so that files produced
//! from equal values are byte-identical.
//!
//! Supported on input: one root element, nested elements, attributes with
//! single or double quotes, character data, the five named entities plus
//! numeric character references, comments, processing instructions and a
//! DOCTYPE line (all three are skipped). Not supported: namespaces, CDATA
//! sections and mixed-content round-tripping.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// An XML element: name, attributes in document order, child elements and
/// character data.
///
/// Character data from multiple segments (around child elements) is trimmed
/// per segment and joined with single spaces; the writer only emits `text`
/// for childless elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Element>,
    pub text: String,
}

impl Element {
    pub fn new(name: impl Into<String>) -> Self {
        Element {
            name: name.into(),
            attrs: Vec::new(),
            children: Vec::new(),
            text: String::new(),
        }
    }

    /// Builder-style attribute append.
    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((name.into(), value.into()));
        self
    }

    /// Builder-style child append.
    pub fn with_child(mut self, child: Element) -> Self {
        self.children.push(child);
        self
    }

    /// Builder-style text content.
    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    pub fn set_attr(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        match self.attrs.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => *v = value.into(),
            None => self.attrs.push((name, value.into())),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    /// Attribute value or an error naming the element, for format readers.
    pub fn require_attr(&self, name: &str) -> Result<&str, XmlError> {
        self.attr(name).ok_or_else(|| XmlError {
            offset: 0,
            message: format!("element '{}' is missing attribute '{}'", self.name, name),
        })
    }

    pub fn child(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> {
        self.children.iter().filter(move |c| c.name == name)
    }

    /// Serializes `self` as a complete document with an XML declaration, two
    /// space indentation and a trailing newline.
    pub fn to_document_string(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        self.write_into(&mut out, 0);
        out
    }

    fn write_into(&self, out: &mut String, depth: usize) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push('<');
        out.push_str(&self.name);
        for (name, value) in &self.attrs {
            out.push(' ');
            out.push_str(name);
            out.push_str("=\"");
            escape_into(value, true, out);
            out.push('"');
        }
        if !self.children.is_empty() {
            out.push_str(">\n");
            for child in &self.children {
                child.write_into(out, depth + 1);
            }
            for _ in 0..depth {
                out.push_str("  ");
            }
            out.push_str("</");
            out.push_str(&self.name);
            out.push_str(">\n");
        } else if !self.text.is_empty() {
            out.push('>');
            escape_into(&self.text, false, out);
            out.push_str("</");
            out.push_str(&self.name);
            out.push_str(">\n");
        } else {
            out.push_str("/>\n");
        }
    }
}

/// Parse failure with the byte offset where parsing stopped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XmlError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for XmlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xml error at byte {}: {}", self.offset, self.message)
    }
}

impl core::error::Error for XmlError {}

/// Parses a document and returns its root element.
pub fn parse(input: &str) -> Result<Element, XmlError> {
    let mut parser = Parser {
        bytes: input.as_bytes(),
        pos: 0,
    };
    parser.skip_prolog()?;
    let root = parser.parse_element()?;
    parser.skip_misc()?;
    if parser.pos != parser.bytes.len() {
        return Err(parser.error("content after the document root"));
    }
    Ok(root)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> XmlError {
        XmlError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn starts_with(&self, prefix: &str) -> bool {
        self.bytes[self.pos..].starts_with(prefix.as_bytes())
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    /// Skips the XML declaration, comments, PIs and a DOCTYPE ahead of the
    /// root element.
    fn skip_prolog(&mut self) -> Result<(), XmlError> {
        // Byte-order mark.
        if self.bytes[self.pos..].starts_with(&[0xEF, 0xBB, 0xBF]) {
            self.pos += 3;
        }
        loop {
            self.skip_whitespace();
            if self.starts_with("<?") {
                self.skip_until("?>")?;
            } else if self.starts_with("<!--") {
                self.skip_until("-->")?;
            } else if self.starts_with("<!DOCTYPE") {
                self.skip_doctype()?;
            } else {
                return Ok(());
            }
        }
    }

    /// Skips trailing comments and whitespace after the root element.
    fn skip_misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_whitespace();
            if self.starts_with("<!--") {
                self.skip_until("-->")?;
            } else if self.starts_with("<?") {
                self.skip_until("?>")?;
            } else {
                return Ok(());
            }
        }
    }

    fn skip_until(&mut self, end: &str) -> Result<(), XmlError> {
        match find_from(self.bytes, self.pos, end.as_bytes()) {
            Some(idx) => {
                self.pos = idx + end.len();
                Ok(())
            }
            None => Err(self.error(format!("unterminated construct, expected '{end}'"))),
        }
    }

    fn skip_doctype(&mut self) -> Result<(), XmlError> {
        // Tolerate an internal subset in brackets.
        let mut depth = 0usize;
        while let Some(b) = self.peek() {
            self.pos += 1;
            match b {
                b'[' => depth += 1,
                b']' => depth = depth.saturating_sub(1),
                b'>' if depth == 0 => return Ok(()),
                _ => {}
            }
        }
        Err(self.error("unterminated DOCTYPE"))
    }

    fn parse_name(&mut self) -> Result<String, XmlError> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            let ok = b.is_ascii_alphanumeric()
                || matches!(b, b'_' | b'-' | b'.' | b':')
                || b >= 0x80;
            if !ok {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected a name"));
        }
        let name = core::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| self.error("invalid UTF-8 in name"))?;
        if name.as_bytes()[0].is_ascii_digit() {
            return Err(self.error("names must not start with a digit"));
        }
        Ok(name.to_owned())
    }

    fn parse_element(&mut self) -> Result<Element, XmlError> {
        if self.peek() != Some(b'<') {
            return Err(self.error("expected '<'"));
        }
        self.pos += 1;
        let name = self.parse_name()?;
        let mut element = Element::new(name);

        loop {
            self.skip_whitespace();
            match self.peek() {
                Some(b'/') => {
                    self.pos += 1;
                    if self.peek() != Some(b'>') {
                        return Err(self.error("expected '>' after '/'"));
                    }
                    self.pos += 1;
                    return Ok(element);
                }
                Some(b'>') => {
                    self.pos += 1;
                    self.parse_content(&mut element)?;
                    return Ok(element);
                }
                Some(_) => {
                    let attr_name = self.parse_name()?;
                    self.skip_whitespace();
                    if self.peek() != Some(b'=') {
                        return Err(self.error("expected '=' after attribute name"));
                    }
                    self.pos += 1;
                    self.skip_whitespace();
                    let value = self.parse_quoted()?;
                    if element.attr(&attr_name).is_some() {
                        return Err(self.error(format!("duplicate attribute '{attr_name}'")));
                    }
                    element.attrs.push((attr_name, value));
                }
                None => return Err(self.error("unexpected end of input in tag")),
            }
        }
    }

    fn parse_quoted(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ (b'"' | b'\'')) => q,
            _ => return Err(self.error("expected a quoted attribute value")),
        };
        self.pos += 1;
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b == quote {
                let raw = core::str::from_utf8(&self.bytes[start..self.pos])
                    .map_err(|_| self.error("invalid UTF-8 in attribute value"))?;
                self.pos += 1;
                return unescape(raw).map_err(|msg| XmlError {
                    offset: start,
                    message: msg,
                });
            }
            if b == b'<' {
                return Err(self.error("'<' in attribute value"));
            }
            self.pos += 1;
        }
        Err(self.error("unterminated attribute value"))
    }

    fn parse_content(&mut self, element: &mut Element) -> Result<(), XmlError> {
        let mut segments: Vec<String> = Vec::new();
        loop {
            let start = self.pos;
            while let Some(b) = self.peek() {
                if b == b'<' {
                    break;
                }
                self.pos += 1;
            }
            if self.pos > start {
                let raw = core::str::from_utf8(&self.bytes[start..self.pos])
                    .map_err(|_| self.error("invalid UTF-8 in character data"))?;
                let unescaped = unescape(raw).map_err(|msg| XmlError {
                    offset: start,
                    message: msg,
                })?;
                let trimmed = unescaped.trim();
                if !trimmed.is_empty() {
                    segments.push(trimmed.to_owned());
                }
            }
            if self.peek().is_none() {
                return Err(self.error(format!("unclosed element '{}'", element.name)));
            }
            if self.starts_with("</") {
                self.pos += 2;
                let close = self.parse_name()?;
                if close != element.name {
                    return Err(self.error(format!(
                        "mismatched close tag: expected '</{}>', found '</{}>'",
                        element.name, close
                    )));
                }
                self.skip_whitespace();
                if self.peek() != Some(b'>') {
                    return Err(self.error("expected '>' in close tag"));
                }
                self.pos += 1;
                element.text = segments.join(" ");
                return Ok(());
            } else if self.starts_with("<!--") {
                self.skip_until("-->")?;
            } else if self.starts_with("<![CDATA[") {
                return Err(self.error("CDATA sections are not supported"));
            } else if self.starts_with("<?") {
                self.skip_until("?>")?;
            } else if self.starts_with("<!") {
                return Err(self.error("unsupported markup declaration in content"));
            } else {
                let child = self.parse_element()?;
                element.children.push(child);
            }
        }
    }
}

fn find_from(haystack: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || haystack.len() < needle.len() {
        return None;
    }
    (from..=haystack.len() - needle.len()).find(|&i| &haystack[i..i + needle.len()] == needle)
}

fn escape_into(value: &str, in_attr: bool, out: &mut String) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if in_attr => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
}

fn unescape(raw: &str) -> Result<String, String> {
    if !raw.contains('&') {
        return Ok(raw.to_owned());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(idx) = rest.find('&') {
        out.push_str(&rest[..idx]);
        rest = &rest[idx..];
        let end = rest
            .find(';')
            .ok_or_else(|| "unterminated entity reference".to_string())?;
        let entity = &rest[1..end];
        match entity {
            "amp" => out.push('&'),
            "lt" => out.push('<'),
            "gt" => out.push('>'),
            "quot" => out.push('"'),
            "apos" => out.push('\''),
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse::<u32>().ok()
                } else {
                    None
                };
                match code.and_then(char::from_u32) {
                    Some(c) => out.push(c),
                    None => return Err(format!("unknown entity '&{entity};'")),
                }
            }
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parses_nested_elements_and_attributes() {
        let doc = r#"<?xml version="1.0"?>
<root a="1" b="two">
  <child c='3'/>
  <child c="4">text</child>
</root>"#;
        let root = parse(doc).unwrap();
        assert_eq!(root.name, "root");
        assert_eq!(root.attr("a"), Some("1"));
        assert_eq!(root.attr("b"), Some("two"));
        assert_eq!(root.children.len(), 2);
        assert_eq!(root.children[1].text, "text");
        assert_eq!(root.children_named("child").count(), 2);
    }

    #[test]
    fn collapses_duplicate_text_whitespace() {
        let root = parse("<a>  hello   world \n</a>").unwrap();
        assert_eq!(root.text, "hello   world");
    }

    #[test]
    fn entities_round_trip() {
        let mut e = Element::new("e");
        e.attrs.push(("v".into(), "a<b>&\"c\'".into()));
        e.text = "x & y < z".into();
        let doc = e.to_document_string();
        let back = parse(&doc).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn numeric_character_references() {
        let root = parse("<a>&#65;&#x42;</a>").unwrap();
        assert_eq!(root.text, "AB");
    }

    #[test]
    fn rejects_mismatched_close_tag() {
        let err = parse("<a><b></a></b>").unwrap_err();
        assert!(err.message.contains("mismatched close tag"), "{err}");
    }

    #[test]
    fn rejects_trailing_content_and_cdata() {
        assert!(parse("<a/><b/>").is_err());
        assert!(parse("<a><![CDATA[x]]></a>").is_err());
        assert!(parse("<a attr=\"1\" attr=\"2\"/>").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn skips_comments_doctype_and_pis() {
        let doc = "<!-- head --><!DOCTYPE a [ <!ELEMENT a EMPTY> ]><?pi data?><a><!-- in --><b/></a><!-- tail -->";
        let root = parse(doc).unwrap();
        assert_eq!(root.children.len(), 1);
    }

    #[test]
    fn writer_layout_is_stable() {
        let e = Element::new("facts")
            .with_attr("n", "1")
            .with_child(Element::new("cell").with_attr("id", "c1"))
            .with_child(Element::new("note").with_text("hi"));
        let expected = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
                        <facts n=\"1\">\n  <cell id=\"c1\"/>\n  <note>hi</note>\n</facts>\n";
        assert_eq!(e.to_document_string(), expected);
    }

    #[test]
    fn set_attr_replaces_existing() {
        let mut e = Element::new("x").with_attr("k", "1");
        e.set_attr("k", "2");
        e.set_attr("l", "3");
        assert_eq!(e.attrs, vec![("k".into(), "2".into()), ("l".into(), "3".into())]);
    }
}
