//! Descriptor documents for heterogeneous source objects.
//!
//! The staging area ahead of the warehouse does not hold raw media; it holds
//! one XML descriptor per source object, carrying the automatically
//! derivable low-level characteristics (name, size, media kind, timestamps)
//! plus an open list of `specific` annotations for semantic properties that
//! no generic extractor can produce. Media-specific characteristics such as
//! durations or resolutions enter through the annotation file rather than
//! through decoders.
//!
//! Descriptor document:
//!
//! ```xml
//! <object id="docs/report.txt">
//!   <subdocument source="docs/report.txt" kind="text">
//!     <characteristic name="name" value="report.txt"/>
//!     <characteristic name="size" value="5120"/>
//!     <characteristic name="modified" value="1700000000"/>
//!   </subdocument>
//!   <specific name="language" value="fr"/>
//! </object>
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::xml::Element;

/// One piece of source data inside a complex object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subdocument {
    pub source: String,
    pub kind: String,
    pub characteristics: Vec<(String, String)>,
}

impl Subdocument {
    pub fn characteristic(&self, name: &str) -> Option<&str> {
        self.characteristics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

/// A described complex object: its subdocuments plus open semantic
/// annotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexObjectDescriptor {
    pub object_id: String,
    pub subdocuments: Vec<Subdocument>,
    pub specific: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DescriptorError {
    Malformed(String),
    Invalid(String),
}

impl fmt::Display for DescriptorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorError::Malformed(msg) => write!(f, "malformed descriptor: {msg}"),
            DescriptorError::Invalid(msg) => write!(f, "invalid descriptor: {msg}"),
        }
    }
}

impl core::error::Error for DescriptorError {}

/// Media kind derived from a file extension.
pub fn media_kind_for_extension(extension: &str) -> &'static str {
    match extension.to_ascii_lowercase().as_str() {
        "txt" | "md" | "xml" | "html" | "htm" | "csv" | "json" => "text",
        "png" | "jpg" | "jpeg" | "gif" | "bmp" | "svg" | "tiff" | "webp" => "image",
        "mp3" | "wav" | "ogg" | "flac" | "aac" => "sound",
        "mp4" | "avi" | "mkv" | "mov" | "webm" | "mpg" | "mpeg" => "video",
        "pdf" | "doc" | "docx" | "odt" | "rtf" => "document",
        _ => "other",
    }
}

impl ComplexObjectDescriptor {
    /// Checks the descriptor invariants: every subdocument carries at least
    /// name and size, and specific annotation names are unique.
    pub fn validate(&self) -> Result<(), DescriptorError> {
        for sub in &self.subdocuments {
            for required in ["name", "size"] {
                if sub.characteristic(required).is_none() {
                    return Err(DescriptorError::Invalid(format!(
                        "subdocument '{}' lacks the '{required}' characteristic",
                        sub.source
                    )));
                }
            }
        }
        let mut names: Vec<&str> = self.specific.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                return Err(DescriptorError::Invalid(format!(
                    "duplicate specific annotation '{}'",
                    pair[0]
                )));
            }
        }
        Ok(())
    }

    pub fn to_xml(&self) -> Element {
        let mut root = Element::new("object").with_attr("id", self.object_id.clone());
        for sub in &self.subdocuments {
            let mut s = Element::new("subdocument")
                .with_attr("source", sub.source.clone())
                .with_attr("kind", sub.kind.clone());
            for (name, value) in &sub.characteristics {
                s.children.push(
                    Element::new("characteristic")
                        .with_attr("name", name.clone())
                        .with_attr("value", value.clone()),
                );
            }
            root.children.push(s);
        }
        for (name, value) in &self.specific {
            root.children.push(
                Element::new("specific")
                    .with_attr("name", name.clone())
                    .with_attr("value", value.clone()),
            );
        }
        root
    }

    pub fn from_xml(doc: &Element) -> Result<ComplexObjectDescriptor, DescriptorError> {
        if doc.name != "object" {
            return Err(DescriptorError::Malformed(format!(
                "expected root element 'object', found '{}'",
                doc.name
            )));
        }
        let object_id = doc
            .attr("id")
            .ok_or_else(|| DescriptorError::Malformed("object without id".to_string()))?
            .to_string();
        let mut descriptor = ComplexObjectDescriptor {
            object_id,
            subdocuments: Vec::new(),
            specific: Vec::new(),
        };
        for child in &doc.children {
            match child.name.as_str() {
                "subdocument" => {
                    let mut sub = Subdocument {
                        source: attr_of(child, "source")?,
                        kind: attr_of(child, "kind")?,
                        characteristics: Vec::new(),
                    };
                    for c in child.children_named("characteristic") {
                        sub.characteristics.push((attr_of(c, "name")?, attr_of(c, "value")?));
                    }
                    descriptor.subdocuments.push(sub);
                }
                "specific" => descriptor
                    .specific
                    .push((attr_of(child, "name")?, attr_of(child, "value")?)),
                other => {
                    return Err(DescriptorError::Malformed(format!(
                        "unexpected element '{other}' in descriptor"
                    )))
                }
            }
        }
        descriptor.validate()?;
        Ok(descriptor)
    }
}

fn attr_of(e: &Element, name: &str) -> Result<String, DescriptorError> {
    e.attr(name)
        .map(String::from)
        .ok_or_else(|| DescriptorError::Malformed(format!("'{}' without '{name}'", e.name)))
}

/// Reads the annotation file: per-object `specific` pairs merged into the
/// generated descriptors.
///
/// ```xml
/// <annotations>
///   <object id="docs/report.txt">
///     <specific name="language" value="fr"/>
///   </object>
/// </annotations>
/// ```
pub fn parse_annotations(
    doc: &Element,
) -> Result<Vec<(String, Vec<(String, String)>)>, DescriptorError> {
    if doc.name != "annotations" {
        return Err(DescriptorError::Malformed(format!(
            "expected root element 'annotations', found '{}'",
            doc.name
        )));
    }
    let mut out = Vec::new();
    for object in &doc.children {
        if object.name != "object" {
            return Err(DescriptorError::Malformed(format!(
                "unexpected element '{}' in annotations",
                object.name
            )));
        }
        let id = attr_of(object, "id")?;
        let mut pairs = Vec::new();
        for s in object.children_named("specific") {
            pairs.push((attr_of(s, "name")?, attr_of(s, "value")?));
        }
        out.push((id, pairs));
    }
    Ok(out)
}
