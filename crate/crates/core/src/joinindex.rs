//! The join-eliminating index: one document in which every cell carries its
//! dimension attributes inline.
//!
//! Answering an analytical query from the two-document store means joining
//! each cell's coordinates to the dimensions document. The index
//! denormalizes that join once: each index cell embeds, for every
//! coordinate, the member identifier and the member's full attribute list.
//! Evaluation over the index never touches the dimensions document, so the
//! member-lookup count of an indexed run is zero by construction.
//!
//! `Index.xml` layout:
//!
//! ```xml
//! <index provenance="64ffb4a5f7dd8f39">
//!   <cell>
//!     <dimension id="Time" node="8e47a1...">
//!       <attribute name="season" value="dry"/>
//!       <attribute name="year" value="1999"/>
//!     </dimension>
//!     <fact id="amount" value="10.50"/>
//!   </cell>
//! </index>
//! ```
//!
//! Dimensions appear in catalog order, attributes inside a dimension in name
//! order, facts in measure catalog order. The index is rebuilt from scratch
//! when the store changes; the provenance fingerprint detects staleness.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::hash;
use crate::query::{
    self, AggSpec, AnalyticalQuery, AttrRef, CellSource, Cmp, EvalStats, QueryError, ResultTable,
};
use crate::store::{MeasureValue, MemberId, XCubeStore};
use crate::xml::{self, Element};

/// One denormalized dimension inside an index cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexDimension {
    pub id: String,
    pub node: MemberId,
    pub attributes: Vec<(String, String)>,
}

/// One index cell: measures plus fully inlined dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexCell {
    pub dimensions: Vec<IndexDimension>,
    pub facts: Vec<(String, MeasureValue)>,
}

impl IndexCell {
    fn dimension(&self, id: &str) -> Option<&IndexDimension> {
        self.dimensions.iter().find(|d| d.id == id)
    }
}

/// The index document: all cells plus the provenance fingerprint of the
/// store it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexDocument {
    pub cells: Vec<IndexCell>,
    pub provenance: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexError {
    /// A cell coordinate without a member: the store is corrupt.
    DanglingCoordinate(String),
    /// The index was built from a different store state.
    StaleIndex,
    MalformedIndex(String),
    Query(QueryError),
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::DanglingCoordinate(msg) => write!(f, "dangling coordinate: {msg}"),
            IndexError::StaleIndex => {
                write!(f, "index provenance does not match the store; rebuild the index")
            }
            IndexError::MalformedIndex(msg) => write!(f, "malformed index document: {msg}"),
            IndexError::Query(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for IndexError {}

impl From<QueryError> for IndexError {
    fn from(e: QueryError) -> Self {
        IndexError::Query(e)
    }
}

/// Migrates the store into the index structure: one index cell per fact
/// cell, dimension attributes inlined.
pub fn build_index(store: &XCubeStore) -> Result<IndexDocument, IndexError> {
    let mut cells = Vec::with_capacity(store.cells.len());
    for cell in &store.cells {
        let mut dimensions = Vec::with_capacity(cell.coordinates.len());
        // Catalog order, regardless of the coordinate order in the cell.
        for def in &store.dimensions {
            let Some(node) = cell.coordinate(&def.name) else {
                continue;
            };
            let member = store.member(&def.name, node).ok_or_else(|| {
                IndexError::DanglingCoordinate(format!(
                    "cell references member '{node}' missing from dimension '{}'",
                    def.name
                ))
            })?;
            let mut attributes = member.attributes.clone();
            attributes.sort_by(|(a, _), (b, _)| a.cmp(b));
            dimensions.push(IndexDimension {
                id: def.name.clone(),
                node: node.clone(),
                attributes,
            });
        }
        if dimensions.len() != cell.coordinates.len() {
            return Err(IndexError::DanglingCoordinate(
                "cell carries a coordinate for an uncataloged dimension".to_string(),
            ));
        }
        cells.push(IndexCell {
            dimensions,
            facts: cell.measures.clone(),
        });
    }
    Ok(IndexDocument {
        cells,
        provenance: store.content_hash(),
    })
}

/// A query re-addressed to the inlined attribute paths of the index.
///
/// Selections, grouping and aggregation survive the rewrite unchanged in
/// number and content; only the addressing moves from member lookups to
/// in-cell paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexQuery {
    pub selections: Vec<IndexPredicate>,
    pub group_by: Vec<IndexAttr>,
    pub aggregates: Vec<AggSpec>,
}

/// In-cell address of a dimension attribute.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexAttr {
    pub dimension: String,
    pub attribute: String,
}

impl IndexAttr {
    /// The path expression the address stands for, for diagnostics.
    pub fn path_expression(&self) -> String {
        format!(
            "cell/dimension[@id='{}']/attribute[@name='{}']/@value",
            self.dimension, self.attribute
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexPredicate {
    pub attr: IndexAttr,
    pub cmp: Cmp,
    pub literal: String,
}

/// Re-addresses a query to the index, verifying every referenced attribute
/// against the store catalog.
pub fn rewrite_query(store: &XCubeStore, q: &AnalyticalQuery) -> Result<IndexQuery, IndexError> {
    let readdress = |attr: &AttrRef| -> Result<IndexAttr, IndexError> {
        store
            .dimension_def(&attr.dimension)
            .and_then(|d| d.attribute_type(&attr.attribute))
            .ok_or_else(|| IndexError::Query(QueryError::UnknownAttribute(attr.to_string())))?;
        Ok(IndexAttr {
            dimension: attr.dimension.clone(),
            attribute: attr.attribute.clone(),
        })
    };
    Ok(IndexQuery {
        selections: q
            .selections
            .iter()
            .map(|p| {
                Ok(IndexPredicate {
                    attr: readdress(&p.attr)?,
                    cmp: p.cmp,
                    literal: p.literal.clone(),
                })
            })
            .collect::<Result<_, IndexError>>()?,
        group_by: q.group_by.iter().map(readdress).collect::<Result<_, _>>()?,
        aggregates: q.aggregates.clone(),
    })
}

struct IndexSource<'a> {
    index: &'a IndexDocument,
}

impl<'a> CellSource for IndexSource<'a> {
    fn cell_count(&self) -> usize {
        self.index.cells.len()
    }

    fn attr_value(&self, cell: usize, attr: &AttrRef) -> Option<&str> {
        self.index.cells[cell]
            .dimension(&attr.dimension)?
            .attributes
            .iter()
            .find(|(n, _)| *n == attr.attribute)
            .map(|(_, v)| v.as_str())
    }

    fn measure_value(&self, cell: usize, measure: &str) -> Option<&MeasureValue> {
        self.index.cells[cell]
            .facts
            .iter()
            .find(|(n, _)| n == measure)
            .map(|(_, v)| v)
    }
}

/// An index validated against its store, ready to answer queries.
///
/// Opening the session performs the staleness check once; evaluation then
/// consults the store only for its catalogs (attribute types). The scan
/// reads inlined attributes, so the member-lookup count of every run is
/// zero.
pub struct IndexSession<'a> {
    store: &'a XCubeStore,
    index: &'a IndexDocument,
}

impl<'a> IndexSession<'a> {
    pub fn open(
        store: &'a XCubeStore,
        index: &'a IndexDocument,
    ) -> Result<IndexSession<'a>, IndexError> {
        if index.provenance != store.content_hash() {
            return Err(IndexError::StaleIndex);
        }
        Ok(IndexSession { store, index })
    }

    pub fn evaluate(&self, q: &AnalyticalQuery) -> Result<(ResultTable, EvalStats), IndexError> {
        // The rewrite both validates addressability and stands for the plan:
        // no clause below ever resolves a member.
        let _rewritten = rewrite_query(self.store, q)?;
        let source = IndexSource { index: self.index };
        let table = query::evaluate_over(self.store, &source, q)?;
        Ok((table, EvalStats { member_lookups: 0 }))
    }
}

/// One-shot convenience: open a session and evaluate a single query.
pub fn evaluate_indexed(
    store: &XCubeStore,
    index: &IndexDocument,
    q: &AnalyticalQuery,
) -> Result<(ResultTable, EvalStats), IndexError> {
    IndexSession::open(store, index)?.evaluate(q)
}

impl IndexDocument {
    /// Serializes to the `Index.xml` layout.
    pub fn to_document(&self) -> String {
        let mut root = Element::new("index").with_attr("provenance", hash::hex16(self.provenance));
        for cell in &self.cells {
            let mut c = Element::new("cell");
            for dim in &cell.dimensions {
                let mut d = Element::new("dimension")
                    .with_attr("id", dim.id.clone())
                    .with_attr("node", dim.node.as_str());
                for (name, value) in &dim.attributes {
                    d.children.push(
                        Element::new("attribute")
                            .with_attr("name", name.clone())
                            .with_attr("value", value.clone()),
                    );
                }
                c.children.push(d);
            }
            for (name, value) in &cell.facts {
                c.children.push(
                    Element::new("fact")
                        .with_attr("id", name.clone())
                        .with_attr("value", value.render()),
                );
            }
            root.children.push(c);
        }
        root.to_document_string()
    }

    /// Reads an `Index.xml` document, re-checking the cell invariants.
    ///
    /// Measure values are typed against the given store catalog.
    pub fn from_document(text: &str, store: &XCubeStore) -> Result<IndexDocument, IndexError> {
        let doc = xml::parse(text).map_err(|e| IndexError::MalformedIndex(e.to_string()))?;
        if doc.name != "index" {
            return Err(IndexError::MalformedIndex(format!(
                "expected root element 'index', found '{}'",
                doc.name
            )));
        }
        let provenance = doc
            .attr("provenance")
            .and_then(|p| u64::from_str_radix(p, 16).ok())
            .ok_or_else(|| IndexError::MalformedIndex("missing or bad provenance".to_string()))?;
        let mut cells = Vec::new();
        for cell in &doc.children {
            if cell.name != "cell" {
                return Err(IndexError::MalformedIndex(format!(
                    "unexpected element '{}' in index",
                    cell.name
                )));
            }
            let mut parsed = IndexCell {
                dimensions: Vec::new(),
                facts: Vec::new(),
            };
            for child in &cell.children {
                match child.name.as_str() {
                    "dimension" => {
                        let id = index_attr(child, "id")?;
                        if parsed.dimensions.iter().any(|d| d.id == id) {
                            return Err(IndexError::MalformedIndex(format!(
                                "cell carries dimension '{id}' twice"
                            )));
                        }
                        let mut attributes = Vec::new();
                        for a in child.children_named("attribute") {
                            attributes.push((index_attr(a, "name")?, index_attr(a, "value")?));
                        }
                        parsed.dimensions.push(IndexDimension {
                            id,
                            node: MemberId(index_attr(child, "node")?),
                            attributes,
                        });
                    }
                    "fact" => {
                        let id = index_attr(child, "id")?;
                        let raw = index_attr(child, "value")?;
                        let def = store.measure_def(&id).ok_or_else(|| {
                            IndexError::MalformedIndex(format!("undeclared measure '{id}'"))
                        })?;
                        let value = MeasureValue::parse(&raw, def.ty).ok_or_else(|| {
                            IndexError::MalformedIndex(format!(
                                "value '{raw}' is not a valid {} for '{id}'",
                                def.ty.as_str()
                            ))
                        })?;
                        parsed.facts.push((id, value));
                    }
                    other => {
                        return Err(IndexError::MalformedIndex(format!(
                            "unexpected element '{other}' in cell"
                        )))
                    }
                }
            }
            if parsed.facts.is_empty() {
                return Err(IndexError::MalformedIndex(
                    "index cell without facts".to_string(),
                ));
            }
            cells.push(parsed);
        }
        Ok(IndexDocument { cells, provenance })
    }
}

fn index_attr(e: &Element, name: &str) -> Result<String, IndexError> {
    e.attr(name)
        .map(String::from)
        .ok_or_else(|| IndexError::MalformedIndex(format!("'{}' without '{name}'", e.name)))
}
