//! The warehousing pipeline: gate input documents against the reference
//! model and emit the homogeneous collection of XML facts forming the cube.
//!
//! Every accepted document becomes one fact document per fact instance it
//! carries, instantiated in the schema's shape from the document's values.
//! A document that lacks mandatory content is rejected with the list of
//! missing paths; a document whose values do not fit the declared types is
//! recorded as malformed. Each candidate instance is accounted for exactly
//! once, so for one-fact-per-document input
//! `facts + rejections + malformed = documents`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::attree::{self, AttributeTree, FusionStatus, LabelPath};
use crate::decimal::Decimal;
use crate::mcm::{self, AttrType, Mcm, McmError};
use crate::xml::Element;

/// The cube: one logical schema and the fact documents that validate
/// against it.
///
/// Homogeneity means every fact carries at least the mandatory tree and at
/// most the schema tree; optional attributes may differ between facts.
#[derive(Clone, Debug)]
pub struct XmlCube {
    pub schema: Element,
    pub facts: Vec<Element>,
    pub rejected: Vec<Rejection>,
    pub malformed: Vec<Malformed>,
}

/// A candidate that failed the mandatory-content gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub document: String,
    pub missing: Vec<LabelPath>,
}

/// A candidate that could not be used: unparsable input or a value that
/// does not match its declared type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Malformed {
    pub document: String,
    pub reason: String,
}

/// One input document: an identifier plus its parsed root, or the reason it
/// could not be parsed.
pub type DocumentInput = (String, Result<Element, String>);

/// Runs the admission pipeline over a batch of documents.
///
/// Each document is compared to the model's mandatory tree by attribute-tree
/// fusion. Documents whose root is not the fact element are searched for
/// fact-shaped subtrees, each of which becomes its own candidate (identified
/// as `id#k`). Fact documents are emitted in input order.
pub fn build_cube(
    m: &Mcm,
    docs: impl IntoIterator<Item = DocumentInput>,
) -> Result<XmlCube, McmError> {
    let schema = if m.hierarchies.is_empty() {
        mcm::star_schema_of(m)?
    } else {
        mcm::snowflake_schema_of(m)?
    };
    let reference = mcm::minimal_content_tree(m)?;
    let mut cube = XmlCube {
        schema,
        facts: Vec::new(),
        rejected: Vec::new(),
        malformed: Vec::new(),
    };
    let fact_decl = cube
        .schema
        .child("element")
        .expect("schema_of always emits the fact declaration")
        .clone();

    for (id, parsed) in docs {
        let root = match parsed {
            Ok(root) => root,
            Err(reason) => {
                cube.malformed.push(Malformed { document: id, reason });
                continue;
            }
        };
        let candidates = fact_candidates(&root, &m.fact_name);
        let multiple = candidates.len() > 1;
        for (k, candidate) in candidates.into_iter().enumerate() {
            let candidate_id = if multiple {
                format!("{id}#{}", k + 1)
            } else {
                id.clone()
            };
            let outcome = reference.fuse(&attree::tree_from_document(candidate));
            match outcome.status {
                FusionStatus::Rejected => cube.rejected.push(Rejection {
                    document: candidate_id,
                    missing: outcome.missing,
                }),
                FusionStatus::Accepted => {
                    let merged = outcome.merged.expect("accepted fusion carries the merge");
                    let fact = instantiate_fact(&fact_decl, &merged, candidate);
                    match validate_fact_checked(&fact, &cube.schema) {
                        Ok(()) => cube.facts.push(fact),
                        Err(reason) => cube.malformed.push(Malformed {
                            document: candidate_id,
                            reason,
                        }),
                    }
                }
            }
        }
    }
    Ok(cube)
}

/// Maximal fact-shaped subtrees of a document, in document order.
///
/// A document rooted at the fact element is a single candidate. Otherwise
/// every outermost subtree whose root carries the fact name is one candidate
/// instance; a document with none is returned whole so its rejection lists
/// what is missing.
fn fact_candidates<'a>(doc: &'a Element, fact_name: &str) -> Vec<&'a Element> {
    if doc.name == fact_name {
        return alloc::vec![doc];
    }
    let mut found = Vec::new();
    collect_candidates(doc, fact_name, &mut found);
    if found.is_empty() {
        alloc::vec![doc]
    } else {
        found
    }
}

fn collect_candidates<'a>(node: &'a Element, fact_name: &str, out: &mut Vec<&'a Element>) {
    for child in &node.children {
        if child.name == fact_name {
            out.push(child);
        } else {
            collect_candidates(child, fact_name, out);
        }
    }
}

/// Builds the fact document: the schema shape restricted to the merged tree,
/// populated with the candidate's values.
///
/// A value may come from an XML attribute or from the text of an equally
/// named child element; the first occurrence in document order wins. Values
/// absent from the candidate stay absent in the fact.
fn instantiate_fact(decl: &Element, merged: &AttributeTree, candidate: &Element) -> Element {
    let path = LabelPath::root(decl.attr("name").unwrap_or_default());
    instantiate_element(decl, &path, merged, Some(candidate))
}

fn instantiate_element(
    decl: &Element,
    path: &LabelPath,
    merged: &AttributeTree,
    source: Option<&Element>,
) -> Element {
    let mut out = Element::new(decl.attr("name").unwrap_or_default());
    for child_decl in &decl.children {
        let name = child_decl.attr("name").unwrap_or_default();
        let child_path = path.child(name);
        if merged.find(&child_path).is_none() {
            continue;
        }
        match child_decl.name.as_str() {
            "attribute" => {
                if let Some(value) = source.and_then(|e| value_of(e, name)) {
                    out.attrs.push((name.to_string(), value));
                }
            }
            _ => {
                let child_source = source.and_then(|e| e.child(name));
                out.children
                    .push(instantiate_element(child_decl, &child_path, merged, child_source));
            }
        }
    }
    out
}

/// Looks a value up on an element: attribute first, then the text of an
/// equally named child element.
fn value_of(element: &Element, name: &str) -> Option<String> {
    if let Some(value) = element.attr(name) {
        return Some(value.to_string());
    }
    let child = element.child(name)?;
    if child.text.is_empty() {
        None
    } else {
        Some(child.text.clone())
    }
}

/// True when the document's structure matches the schema and every present
/// value parses as its declared type.
pub fn validate_fact(fact: &Element, schema: &Element) -> bool {
    validate_fact_checked(fact, schema).is_ok()
}

fn validate_fact_checked(fact: &Element, schema: &Element) -> Result<(), String> {
    let decl = schema
        .child("element")
        .ok_or_else(|| "schema declares no fact element".to_string())?;
    validate_element(fact, decl)
}

fn validate_element(element: &Element, decl: &Element) -> Result<(), String> {
    let decl_name = decl.attr("name").unwrap_or_default();
    if element.name != decl_name {
        return Err(format!(
            "element '{}' where '{decl_name}' was declared",
            element.name
        ));
    }
    if !element.text.is_empty() {
        return Err(format!("element '{}' carries stray text", element.name));
    }
    for (attr, value) in &element.attrs {
        let attr_decl = decl
            .children_named("attribute")
            .find(|d| d.attr("name") == Some(attr))
            .ok_or_else(|| format!("undeclared attribute '{attr}' on '{}'", element.name))?;
        let ty = attr_decl.attr("type").unwrap_or("string");
        if !value_matches_type(value, ty) {
            return Err(format!(
                "value '{value}' of '{}/@{attr}' is not a valid {ty}",
                element.name
            ));
        }
    }
    for child in &element.children {
        if decl
            .children_named("element")
            .all(|d| d.attr("name") != Some(&child.name))
        {
            return Err(format!(
                "undeclared element '{}' under '{}'",
                child.name, element.name
            ));
        }
        if element.children_named(&child.name).count() > 1 {
            return Err(format!(
                "element '{}' appears more than once under '{}'",
                child.name, element.name
            ));
        }
    }
    for child_decl in &decl.children {
        let name = child_decl.attr("name").unwrap_or_default();
        let required = child_decl.attr("use") == Some("required");
        match child_decl.name.as_str() {
            "attribute" => {
                if required && element.attr(name).is_none() {
                    return Err(format!(
                        "mandatory attribute '{name}' missing on '{}'",
                        element.name
                    ));
                }
            }
            _ => match element.child(name) {
                Some(child) => validate_element(child, child_decl)?,
                None if required => {
                    return Err(format!(
                        "mandatory element '{name}' missing under '{}'",
                        element.name
                    ))
                }
                None => {}
            },
        }
    }
    Ok(())
}

fn value_matches_type(value: &str, ty: &str) -> bool {
    match AttrType::parse(ty) {
        Some(AttrType::String) => true,
        Some(AttrType::Integer) => value.parse::<i64>().is_ok(),
        Some(AttrType::Decimal) => Decimal::parse(value).is_ok(),
        None => false,
    }
}

/// The machine-readable rejections report.
pub fn rejections_report(cube: &XmlCube) -> Element {
    let mut report = Element::new("rejections");
    for r in &cube.rejected {
        let mut doc = Element::new("document").with_attr("id", r.document.clone());
        for path in &r.missing {
            doc.children
                .push(Element::new("missing").with_attr("path", path.to_string()));
        }
        report.children.push(doc);
    }
    for m in &cube.malformed {
        report.children.push(
            Element::new("malformed")
                .with_attr("id", m.document.clone())
                .with_attr("reason", m.reason.clone()),
        );
    }
    report
}
