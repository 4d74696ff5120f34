//! The physical warehouse: one dimensions document and one facts document.
//!
//! Dimension members live in `Dimensions.xml`, keyed by a deterministic
//! content hash of their attribute tuple so identical value combinations
//! share one member across builds. `Facts.xml` holds the cells: dimension
//! references (`@id`/`@node`) plus measure values. Answering a query from
//! this layout requires joining cells to members; eliminating that join is
//! the point of [`crate::joinindex`].
//!
//! Both documents serialize deterministically (catalog order, fixed
//! attribute order), so equal stores produce byte-identical files and the
//! files diff cleanly.
//!
//! `Dimensions.xml`:
//!
//! ```xml
//! <dimensions>
//!   <dimension id="Time">
//!     <def name="year" type="integer"/>
//!     <member node="64ffb4a5f7dd8f39">
//!       <attribute name="year" value="1999"/>
//!     </member>
//!   </dimension>
//!   <hierarchy levels="Day/Month/Year"/>
//! </dimensions>
//! ```
//!
//! `Facts.xml`:
//!
//! ```xml
//! <facts>
//!   <measure id="amount" type="decimal"/>
//!   <cell>
//!     <dimension id="Time" node="64ffb4a5f7dd8f39"/>
//!     <fact id="amount" value="10.50"/>
//!   </cell>
//! </facts>
//! ```

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::cube::XmlCube;
use crate::decimal::Decimal;
use crate::hash;
use crate::mcm::{AttrType, MeasureType};
use crate::xml::{self, Element};

/// Deterministic member identifier: hex FNV-1a over the attribute tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MemberId(pub String);

impl MemberId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A measure value, kept exact.
///
/// The derived ordering is representational (used for deterministic
/// collections); value comparisons go through the query layer's total
/// order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MeasureValue {
    Int(i64),
    Dec(Decimal),
}

impl MeasureValue {
    pub fn render(&self) -> String {
        match self {
            MeasureValue::Int(v) => v.to_string(),
            MeasureValue::Dec(d) => d.to_string(),
        }
    }

    pub fn parse(text: &str, ty: MeasureType) -> Option<MeasureValue> {
        match ty {
            MeasureType::Integer => text.parse::<i64>().ok().map(MeasureValue::Int),
            MeasureType::Decimal => Decimal::parse(text).ok().map(MeasureValue::Dec),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            MeasureValue::Int(v) => *v as f64,
            MeasureValue::Dec(d) => d.to_f64(),
        }
    }
}

/// One member of a dimension: an identifier plus its attribute values in
/// catalog order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionMember {
    pub dimension: String,
    pub node: MemberId,
    pub attributes: Vec<(String, String)>,
}

impl DimensionMember {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

/// One fact cell: coordinates into the dimension members plus measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactCell {
    pub coordinates: Vec<(String, MemberId)>,
    pub measures: Vec<(String, MeasureValue)>,
}

impl FactCell {
    pub fn coordinate(&self, dimension: &str) -> Option<&MemberId> {
        self.coordinates
            .iter()
            .find(|(d, _)| d == dimension)
            .map(|(_, m)| m)
    }

    pub fn measure(&self, name: &str) -> Option<&MeasureValue> {
        self.measures
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureDef {
    pub name: String,
    pub ty: MeasureType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionDef {
    pub name: String,
    pub attributes: Vec<(String, AttrType)>,
}

impl DimensionDef {
    pub fn attribute_type(&self, name: &str) -> Option<AttrType> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
    }
}

/// Levels of one dimension hierarchy as store dimensions, finest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyDef {
    pub levels: Vec<String>,
}

/// The in-memory warehouse. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct XCubeStore {
    pub measures: Vec<MeasureDef>,
    pub dimensions: Vec<DimensionDef>,
    pub hierarchies: Vec<HierarchyDef>,
    /// Grouped by dimension in catalog order, first-seen order within one
    /// dimension.
    pub members: Vec<DimensionMember>,
    pub cells: Vec<FactCell>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StoreError {
    /// A fact document does not fit the cube schema it came with.
    InconsistentFact(String),
    /// A store file violates the documented layout or its invariants.
    MalformedStore(String),
}

impl fmt::Display for StoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreError::InconsistentFact(msg) => write!(f, "inconsistent fact: {msg}"),
            StoreError::MalformedStore(msg) => write!(f, "malformed store file: {msg}"),
        }
    }
}

impl core::error::Error for StoreError {}

impl XCubeStore {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn measure_def(&self, name: &str) -> Option<&MeasureDef> {
        self.measures.iter().find(|m| m.name == name)
    }

    pub fn dimension_def(&self, name: &str) -> Option<&DimensionDef> {
        self.dimensions.iter().find(|d| d.name == name)
    }

    /// Linear member lookup; query evaluation builds its own keyed map so
    /// the join cost is paid per evaluation, not hidden here.
    pub fn member(&self, dimension: &str, node: &MemberId) -> Option<&DimensionMember> {
        self.members
            .iter()
            .find(|m| m.dimension == dimension && &m.node == node)
    }

    pub fn members_of<'a>(&'a self, dimension: &'a str) -> impl Iterator<Item = &'a DimensionMember> {
        self.members.iter().filter(move |m| m.dimension == dimension)
    }

    /// Distinct value count per (dimension, attribute), for size estimation.
    pub fn distinct_values(&self, dimension: &str, attribute: &str) -> u64 {
        let values: BTreeSet<&str> = self
            .members_of(dimension)
            .filter_map(|m| m.attribute(attribute))
            .collect();
        values.len() as u64
    }

    /// Content fingerprint over both serialized documents; the join index
    /// records it as provenance.
    pub fn content_hash(&self) -> u64 {
        let (dimensions, facts) = self.to_documents();
        hash::fnv1a_64_fields([dimensions.as_str(), facts.as_str()])
    }

    /// Serializes to the `(Dimensions.xml, Facts.xml)` document pair.
    pub fn to_documents(&self) -> (String, String) {
        let mut dims = Element::new("dimensions");
        for def in &self.dimensions {
            let mut dim = Element::new("dimension").with_attr("id", def.name.clone());
            for (attr, ty) in &def.attributes {
                dim.children.push(
                    Element::new("def")
                        .with_attr("name", attr.clone())
                        .with_attr("type", ty.as_str()),
                );
            }
            for member in self.members_of(&def.name) {
                let mut m = Element::new("member").with_attr("node", member.node.as_str());
                for (name, value) in &member.attributes {
                    m.children.push(
                        Element::new("attribute")
                            .with_attr("name", name.clone())
                            .with_attr("value", value.clone()),
                    );
                }
                dim.children.push(m);
            }
            dims.children.push(dim);
        }
        for h in &self.hierarchies {
            dims.children
                .push(Element::new("hierarchy").with_attr("levels", h.levels.join("/")));
        }

        let mut facts = Element::new("facts");
        for m in &self.measures {
            facts.children.push(
                Element::new("measure")
                    .with_attr("id", m.name.clone())
                    .with_attr("type", m.ty.as_str()),
            );
        }
        for cell in &self.cells {
            let mut c = Element::new("cell");
            for (dim, node) in &cell.coordinates {
                c.children.push(
                    Element::new("dimension")
                        .with_attr("id", dim.clone())
                        .with_attr("node", node.as_str()),
                );
            }
            for (name, value) in &cell.measures {
                c.children.push(
                    Element::new("fact")
                        .with_attr("id", name.clone())
                        .with_attr("value", value.render()),
                );
            }
            facts.children.push(c);
        }
        (dims.to_document_string(), facts.to_document_string())
    }

    /// Reads the document pair back, re-checking layout, types and
    /// referential integrity.
    pub fn from_documents(dimensions: &str, facts: &str) -> Result<XCubeStore, StoreError> {
        let dims_doc = xml::parse(dimensions)
            .map_err(|e| StoreError::MalformedStore(format!("dimensions document: {e}")))?;
        let facts_doc = xml::parse(facts)
            .map_err(|e| StoreError::MalformedStore(format!("facts document: {e}")))?;
        if dims_doc.name != "dimensions" || facts_doc.name != "facts" {
            return Err(StoreError::MalformedStore(
                "expected root elements 'dimensions' and 'facts'".to_string(),
            ));
        }

        let mut store = XCubeStore::default();
        let mut known: BTreeSet<(String, String)> = BTreeSet::new();
        for child in &dims_doc.children {
            match child.name.as_str() {
                "dimension" => {
                    let name = store_attr(child, "id")?;
                    let mut def = DimensionDef {
                        name: name.clone(),
                        attributes: Vec::new(),
                    };
                    for d in child.children_named("def") {
                        let ty = store_attr(d, "type")?;
                        def.attributes.push((
                            store_attr(d, "name")?,
                            AttrType::parse(&ty).ok_or_else(|| {
                                StoreError::MalformedStore(format!("unknown attribute type '{ty}'"))
                            })?,
                        ));
                    }
                    for m in child.children_named("member") {
                        let node = store_attr(m, "node")?;
                        let mut attributes = Vec::new();
                        for a in m.children_named("attribute") {
                            let attr_name = store_attr(a, "name")?;
                            let value = store_attr(a, "value")?;
                            let ty = def.attribute_type(&attr_name).ok_or_else(|| {
                                StoreError::MalformedStore(format!(
                                    "member attribute '{attr_name}' is not declared on dimension '{name}'"
                                ))
                            })?;
                            if !attr_value_ok(&value, ty) {
                                return Err(StoreError::MalformedStore(format!(
                                    "value '{value}' is not a valid {} for '{name}.{attr_name}'",
                                    ty.as_str()
                                )));
                            }
                            attributes.push((attr_name, value));
                        }
                        if !known.insert((name.clone(), node.clone())) {
                            return Err(StoreError::MalformedStore(format!(
                                "duplicate member '{node}' in dimension '{name}'"
                            )));
                        }
                        store.members.push(DimensionMember {
                            dimension: name.clone(),
                            node: MemberId(node),
                            attributes,
                        });
                    }
                    if store.dimensions.iter().any(|d| d.name == def.name) {
                        return Err(StoreError::MalformedStore(format!(
                            "duplicate dimension '{}'",
                            def.name
                        )));
                    }
                    store.dimensions.push(def);
                }
                "hierarchy" => {
                    let levels = store_attr(child, "levels")?;
                    store.hierarchies.push(HierarchyDef {
                        levels: levels.split('/').map(String::from).collect(),
                    });
                }
                other => {
                    return Err(StoreError::MalformedStore(format!(
                        "unexpected element '{other}' in dimensions document"
                    )))
                }
            }
        }
        for h in &store.hierarchies {
            for level in &h.levels {
                if store.dimension_def(level).is_none() {
                    return Err(StoreError::MalformedStore(format!(
                        "hierarchy level '{level}' is not a dimension"
                    )));
                }
            }
        }

        for child in &facts_doc.children {
            match child.name.as_str() {
                "measure" => {
                    let ty = store_attr(child, "type")?;
                    store.measures.push(MeasureDef {
                        name: store_attr(child, "id")?,
                        ty: MeasureType::parse(&ty).ok_or_else(|| {
                            StoreError::MalformedStore(format!("unknown measure type '{ty}'"))
                        })?,
                    });
                }
                "cell" => {
                    let mut cell = FactCell {
                        coordinates: Vec::new(),
                        measures: Vec::new(),
                    };
                    for d in child.children_named("dimension") {
                        let dim = store_attr(d, "id")?;
                        let node = store_attr(d, "node")?;
                        if !known.contains(&(dim.clone(), node.clone())) {
                            return Err(StoreError::MalformedStore(format!(
                                "cell references unknown member '{node}' of dimension '{dim}'"
                            )));
                        }
                        if cell.coordinates.iter().any(|(existing, _)| *existing == dim) {
                            return Err(StoreError::MalformedStore(format!(
                                "cell carries two coordinates for dimension '{dim}'"
                            )));
                        }
                        cell.coordinates.push((dim, MemberId(node)));
                    }
                    for m in child.children_named("fact") {
                        let name = store_attr(m, "id")?;
                        let value = store_attr(m, "value")?;
                        let def = store.measure_def(&name).ok_or_else(|| {
                            StoreError::MalformedStore(format!("undeclared measure '{name}'"))
                        })?;
                        let parsed = MeasureValue::parse(&value, def.ty).ok_or_else(|| {
                            StoreError::MalformedStore(format!(
                                "value '{value}' is not a valid {} for measure '{name}'",
                                def.ty.as_str()
                            ))
                        })?;
                        cell.measures.push((name, parsed));
                    }
                    if cell.coordinates.is_empty() || cell.measures.is_empty() {
                        return Err(StoreError::MalformedStore(
                            "cell without coordinates or without measures".to_string(),
                        ));
                    }
                    store.cells.push(cell);
                }
                other => {
                    return Err(StoreError::MalformedStore(format!(
                        "unexpected element '{other}' in facts document"
                    )))
                }
            }
        }
        Ok(store)
    }
}

fn store_attr(e: &Element, name: &str) -> Result<String, StoreError> {
    e.attr(name)
        .map(String::from)
        .ok_or_else(|| StoreError::MalformedStore(format!("'{}' without '{name}'", e.name)))
}

fn attr_value_ok(value: &str, ty: AttrType) -> bool {
    match ty {
        AttrType::String => true,
        AttrType::Integer => value.parse::<i64>().is_ok(),
        AttrType::Decimal => Decimal::parse(value).is_ok(),
    }
}

/// Loads a built cube into the store layout.
///
/// Every fact becomes one cell; distinct attribute combinations become
/// shared members with content-hash identifiers. Measure values survive
/// bit-exactly (integers) or in their serialized representation (decimals).
pub fn import_cube(cube: &XmlCube) -> Result<XCubeStore, StoreError> {
    let fact_decl = cube.schema.child("element").ok_or_else(|| {
        StoreError::InconsistentFact("cube schema declares no fact element".to_string())
    })?;

    let mut store = XCubeStore::default();
    for attr in fact_decl.children_named("attribute") {
        let ty = attr.attr("type").unwrap_or("decimal");
        store.measures.push(MeasureDef {
            name: attr.attr("name").unwrap_or_default().to_string(),
            ty: MeasureType::parse(ty).ok_or_else(|| {
                StoreError::InconsistentFact(format!("measure with non-numeric type '{ty}'"))
            })?,
        });
    }
    collect_dimension_defs(fact_decl, &mut store, &mut Vec::new());

    // Members grouped per dimension, first-seen order.
    let mut per_dim: BTreeMap<String, Vec<DimensionMember>> = BTreeMap::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for fact in &cube.facts {
        let mut cell = FactCell {
            coordinates: Vec::new(),
            measures: Vec::new(),
        };
        for m in &store.measures {
            if let Some(raw) = fact.attr(&m.name) {
                let value = MeasureValue::parse(raw, m.ty).ok_or_else(|| {
                    StoreError::InconsistentFact(format!(
                        "measure '{}' value '{raw}' does not parse as {}",
                        m.name,
                        m.ty.as_str()
                    ))
                })?;
                cell.measures.push((m.name.clone(), value));
            }
        }
        import_dimensions(fact, &store, &mut per_dim, &mut seen, &mut cell)?;
        if cell.coordinates.is_empty() {
            return Err(StoreError::InconsistentFact(
                "fact carries no dimension element; the store requires at least one coordinate"
                    .to_string(),
            ));
        }
        if cell.measures.is_empty() {
            return Err(StoreError::InconsistentFact(
                "fact carries no measure value".to_string(),
            ));
        }
        store.cells.push(cell);
    }
    for def in &store.dimensions {
        if let Some(members) = per_dim.remove(&def.name) {
            store.members.extend(members);
        }
    }
    Ok(store)
}

/// Walks the schema, registering every element declaration as one store
/// dimension and every nesting chain of length > 1 as a hierarchy.
fn collect_dimension_defs(decl: &Element, store: &mut XCubeStore, chain: &mut Vec<String>) {
    for element in decl.children_named("element") {
        let name = element.attr("name").unwrap_or_default().to_string();
        let attributes = element
            .children_named("attribute")
            .map(|a| {
                (
                    a.attr("name").unwrap_or_default().to_string(),
                    AttrType::parse(a.attr("type").unwrap_or("string")).unwrap_or(AttrType::String),
                )
            })
            .collect();
        store.dimensions.push(DimensionDef {
            name: name.clone(),
            attributes,
        });
        chain.push(name);
        let nested_before = store.dimensions.len();
        collect_dimension_defs(element, store, chain);
        let had_nested = store.dimensions.len() > nested_before;
        if !had_nested && chain.len() > 1 {
            store.hierarchies.push(HierarchyDef { levels: chain.clone() });
        }
        chain.pop();
    }
}

fn import_dimensions(
    element: &Element,
    store: &XCubeStore,
    per_dim: &mut BTreeMap<String, Vec<DimensionMember>>,
    seen: &mut BTreeSet<(String, String)>,
    cell: &mut FactCell,
) -> Result<(), StoreError> {
    for child in &element.children {
        let def = store.dimension_def(&child.name).ok_or_else(|| {
            StoreError::InconsistentFact(format!(
                "fact dimension '{}' does not match the cube schema",
                child.name
            ))
        })?;
        // Attribute tuple in catalog order; absent optional values stay out
        // of the tuple and of the hash.
        let mut attributes = Vec::new();
        for (attr, _) in &def.attributes {
            if let Some(value) = child.attr(attr) {
                attributes.push((attr.clone(), value.to_string()));
            }
        }
        let mut fields = alloc::vec![def.name.as_str()];
        for (n, v) in &attributes {
            fields.push(n.as_str());
            fields.push(v.as_str());
        }
        let node = MemberId(hash::hex16(hash::fnv1a_64_fields(fields)));
        if seen.insert((def.name.clone(), node.0.clone())) {
            per_dim.entry(def.name.clone()).or_default().push(DimensionMember {
                dimension: def.name.clone(),
                node: node.clone(),
                attributes,
            });
        }
        cell.coordinates.push((def.name.clone(), node));
        import_dimensions(child, store, per_dim, seen, cell)?;
    }
    Ok(())
}
