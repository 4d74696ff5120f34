//! Multidimensional conceptual model capture and logical schema generation.
//!
//! An [`Mcm`] states the analysis objectives: a fact with measures, flat
//! dimensions and/or dimension hierarchies, and a mandatory flag per item.
//! From it, [`star_schema_of`] and [`snowflake_schema_of`] emit the warehouse
//! logical schema document, and [`minimal_content_tree`] builds the mandatory
//! reference tree that gates document admission.
//!
//! Logical schema layout (the `schema` document):
//!
//! ```xml
//! <schema>
//!   <element name="Sales" use="required">
//!     <attribute name="amount" type="decimal" use="required"/>
//!     <element name="Time" use="required">
//!       <attribute name="year" type="integer" use="required"/>
//!     </element>
//!   </element>
//! </schema>
//! ```
//!
//! The fact is the root element, measures are attributes of the root, each
//! dimension is a child element carrying its attributes, and hierarchy
//! levels nest (finest level outermost). A dimension linked to the fact `k`
//! times appears as `k` role-suffixed elements (`Time_1`, `Time_2`), keeping
//! sibling labels unique.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::attree::{AttributeTree, NodeId, TreeError};
use crate::xml::Element;

/// Numeric type of a measure; aggregation stays closed under SUM and AVG.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureType {
    Integer,
    Decimal,
}

impl MeasureType {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureType::Integer => "integer",
            MeasureType::Decimal => "decimal",
        }
    }

    pub fn parse(text: &str) -> Option<MeasureType> {
        match text {
            "integer" => Some(MeasureType::Integer),
            "decimal" => Some(MeasureType::Decimal),
            _ => None,
        }
    }
}

/// Type of a dimension attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrType {
    String,
    Integer,
    Decimal,
}

impl AttrType {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttrType::String => "string",
            AttrType::Integer => "integer",
            AttrType::Decimal => "decimal",
        }
    }

    pub fn parse(text: &str) -> Option<AttrType> {
        match text {
            "string" => Some(AttrType::String),
            "integer" => Some(AttrType::Integer),
            "decimal" => Some(AttrType::Decimal),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    pub name: String,
    pub ty: MeasureType,
    pub mandatory: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimAttribute {
    pub name: String,
    pub ty: AttrType,
    pub mandatory: bool,
}

/// A dimension or one level of a hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct Dimension {
    pub name: String,
    pub attributes: Vec<DimAttribute>,
    /// How many times the dimension is linked to the fact set.
    pub multiplicity: u32,
    pub mandatory: bool,
}

impl Dimension {
    /// A dimension element must be present when it is declared mandatory or
    /// any of its attributes is.
    fn self_mandatory(&self) -> bool {
        self.mandatory || self.attributes.iter().any(|a| a.mandatory)
    }
}

/// Ordered dimension levels, finest first.
#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    pub levels: Vec<Dimension>,
}

/// The multidimensional conceptual model: the user's analysis objectives.
#[derive(Clone, Debug, PartialEq)]
pub struct Mcm {
    pub fact_name: String,
    pub measures: Vec<Measure>,
    pub dimensions: Vec<Dimension>,
    pub hierarchies: Vec<Hierarchy>,
}

/// Violations found by [`validate_mcm`]; empty means the model is usable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "model is valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum McmError {
    /// The model fails validation or the wrong schema family was requested.
    Invalid(ValidationReport),
    /// The configuration document cannot be interpreted.
    Config(String),
}

impl fmt::Display for McmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McmError::Invalid(report) => write!(f, "invalid model: {report}"),
            McmError::Config(msg) => write!(f, "bad model configuration: {msg}"),
        }
    }
}

impl core::error::Error for McmError {}

fn valid_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

/// Checks the model invariants and reports every violation found.
///
/// When no mandatory flags are set explicitly the configuration reader has
/// already defaulted every measure and attribute to mandatory, so an
/// all-optional model is always a deliberate (and rejected) choice.
pub fn validate_mcm(m: &Mcm) -> ValidationReport {
    let mut violations = Vec::new();
    let check_name = |kind: &str, name: &str, violations: &mut Vec<String>| {
        if !valid_name(name) {
            violations.push(format!("{kind} name '{name}' is not a valid XML name"));
        }
    };

    check_name("fact", &m.fact_name, &mut violations);
    if !m.measures.iter().any(|measure| measure.mandatory) {
        violations.push("no mandatory measure: at least one measure must be mandatory".to_string());
    }
    let mut measure_names = Vec::new();
    for measure in &m.measures {
        check_name("measure", &measure.name, &mut violations);
        if measure_names.contains(&measure.name.as_str()) {
            violations.push(format!("duplicate measure name '{}'", measure.name));
        }
        measure_names.push(&measure.name);
    }

    // Every dimension element placed under the fact root shares the label
    // namespace with the measures.
    let mut root_labels: Vec<String> = measure_names.iter().map(|s| s.to_string()).collect();
    let mut all_dimension_names: Vec<&str> = Vec::new();

    let check_dimension = |d: &Dimension, violations: &mut Vec<String>| {
        check_name("dimension", &d.name, violations);
        if d.multiplicity == 0 {
            violations.push(format!("dimension '{}' has multiplicity 0", d.name));
        }
        if d.attributes.is_empty() {
            violations.push(format!("dimension '{}' declares no attributes", d.name));
        }
        let mut attr_names: Vec<&str> = Vec::new();
        for a in &d.attributes {
            check_name("attribute", &a.name, violations);
            if attr_names.contains(&a.name.as_str()) {
                violations.push(format!(
                    "duplicate attribute name '{}' in dimension '{}'",
                    a.name, d.name
                ));
            }
            attr_names.push(&a.name);
        }
    };

    for d in &m.dimensions {
        check_dimension(d, &mut violations);
        if all_dimension_names.contains(&d.name.as_str()) {
            violations.push(format!("duplicate dimension name '{}'", d.name));
        }
        all_dimension_names.push(&d.name);
        for label in element_names(d) {
            if root_labels.contains(&label) {
                violations.push(format!("name clash under the fact root: '{label}'"));
            }
            root_labels.push(label);
        }
    }

    for h in &m.hierarchies {
        if h.levels.is_empty() {
            violations.push("hierarchy with no levels".to_string());
            continue;
        }
        let mut level_names: Vec<&str> = Vec::new();
        for (t, level) in h.levels.iter().enumerate() {
            check_dimension(level, &mut violations);
            if level_names.contains(&level.name.as_str()) {
                violations.push(format!(
                    "duplicate level name '{}' within one hierarchy",
                    level.name
                ));
            }
            level_names.push(&level.name);
            if all_dimension_names.contains(&level.name.as_str()) {
                violations.push(format!("duplicate dimension name '{}'", level.name));
            }
            all_dimension_names.push(&level.name);
            if t > 0 && level.multiplicity != 1 {
                violations.push(format!(
                    "level '{}' is not the finest of its hierarchy and cannot set a multiplicity",
                    level.name
                ));
            }
            // The next level nests inside this one, sharing the label
            // namespace with this level's attributes.
            if let Some(next) = h.levels.get(t + 1) {
                if level.attributes.iter().any(|a| a.name == next.name) {
                    violations.push(format!(
                        "level '{}' has an attribute named like its sub-level '{}'",
                        level.name, next.name
                    ));
                }
            }
        }
        for label in element_names(&h.levels[0]) {
            if root_labels.contains(&label) {
                violations.push(format!("name clash under the fact root: '{label}'"));
            }
            root_labels.push(label);
        }
    }

    ValidationReport { violations }
}

/// Role-suffixed element names a dimension contributes under the fact root.
fn element_names(d: &Dimension) -> Vec<String> {
    if d.multiplicity <= 1 {
        alloc::vec![d.name.clone()]
    } else {
        (1..=d.multiplicity)
            .map(|i| format!("{}_{i}", d.name))
            .collect()
    }
}

fn use_str(mandatory: bool) -> &'static str {
    if mandatory {
        "required"
    } else {
        "optional"
    }
}

fn require_valid(m: &Mcm) -> Result<(), McmError> {
    let report = validate_mcm(m);
    if report.is_valid() {
        Ok(())
    } else {
        Err(McmError::Invalid(report))
    }
}

/// Emits the star logical schema: fact root, measures as root attributes,
/// one child element per dimension link carrying the dimension attributes.
pub fn star_schema_of(m: &Mcm) -> Result<Element, McmError> {
    require_valid(m)?;
    if !m.hierarchies.is_empty() {
        return Err(McmError::Invalid(ValidationReport {
            violations: alloc::vec![
                "star schema requested for a model with hierarchies".to_string()
            ],
        }));
    }
    Ok(schema_document(m))
}

/// Emits the snowflake logical schema: star root plus one nested element
/// chain per hierarchy link, finest level outermost.
pub fn snowflake_schema_of(m: &Mcm) -> Result<Element, McmError> {
    require_valid(m)?;
    if m.hierarchies.is_empty() {
        return Err(McmError::Invalid(ValidationReport {
            violations: alloc::vec![
                "snowflake schema requested for a model without hierarchies".to_string()
            ],
        }));
    }
    Ok(schema_document(m))
}

fn schema_document(m: &Mcm) -> Element {
    let mut fact = Element::new("element")
        .with_attr("name", m.fact_name.clone())
        .with_attr("use", "required");
    for measure in &m.measures {
        fact.children.push(
            Element::new("attribute")
                .with_attr("name", measure.name.clone())
                .with_attr("type", measure.ty.as_str())
                .with_attr("use", use_str(measure.mandatory)),
        );
    }
    for d in &m.dimensions {
        for name in element_names(d) {
            fact.children.push(dimension_element(d, name, None));
        }
    }
    for h in &m.hierarchies {
        for name in element_names(&h.levels[0]) {
            fact.children.push(chain_element(&h.levels, 0, name));
        }
    }
    Element::new("schema").with_child(fact)
}

fn dimension_element(d: &Dimension, name: String, nested: Option<Element>) -> Element {
    let mandatory = d.self_mandatory()
        || nested
            .as_ref()
            .is_some_and(|e| e.attr("use") == Some("required"));
    let mut element = Element::new("element")
        .with_attr("name", name)
        .with_attr("use", use_str(mandatory));
    for a in &d.attributes {
        element.children.push(
            Element::new("attribute")
                .with_attr("name", a.name.clone())
                .with_attr("type", a.ty.as_str())
                .with_attr("use", use_str(a.mandatory)),
        );
    }
    if let Some(nested) = nested {
        element.children.push(nested);
    }
    element
}

fn chain_element(levels: &[Dimension], index: usize, name: String) -> Element {
    let level = &levels[index];
    let nested = levels
        .get(index + 1)
        .map(|next| chain_element(levels, index + 1, next.name.clone()));
    dimension_element(level, name, nested)
}

/// Builds the mandatory-content reference tree directly from the model.
///
/// This is a second construction route, independent of the schema document:
/// its shape and flags must equal `tree_from_schema(schema_of(m))`, which
/// the test suite checks structurally.
pub fn minimal_content_tree(m: &Mcm) -> Result<AttributeTree, McmError> {
    require_valid(m)?;
    let mut tree = AttributeTree::leaf(m.fact_name.clone(), true);
    let root = tree.root();
    for measure in &m.measures {
        tree.add_child(root, measure.name.clone(), measure.mandatory)
            .map_err(tree_bug)?;
    }
    for d in &m.dimensions {
        for name in element_names(d) {
            add_dimension_nodes(&mut tree, root, d, name, None).map_err(tree_bug)?;
        }
    }
    for h in &m.hierarchies {
        for name in element_names(&h.levels[0]) {
            add_chain_nodes(&mut tree, root, &h.levels, 0, name).map_err(tree_bug)?;
        }
    }
    Ok(tree)
}

fn tree_bug(err: TreeError) -> McmError {
    // Validation guarantees unique labels, so tree construction cannot fail
    // on a valid model.
    McmError::Config(format!("internal schema construction error: {err}"))
}

fn add_dimension_nodes(
    tree: &mut AttributeTree,
    parent: NodeId,
    d: &Dimension,
    name: String,
    chain_mandatory: Option<bool>,
) -> Result<NodeId, TreeError> {
    let mandatory = d.self_mandatory() || chain_mandatory.unwrap_or(false);
    let node = tree.add_child(parent, name, mandatory)?;
    for a in &d.attributes {
        tree.add_child(node, a.name.clone(), a.mandatory)?;
    }
    Ok(node)
}

fn add_chain_nodes(
    tree: &mut AttributeTree,
    parent: NodeId,
    levels: &[Dimension],
    index: usize,
    name: String,
) -> Result<(), TreeError> {
    // A level is mandatory when anything below it is: the nested element
    // cannot appear without its ancestors.
    let deeper_mandatory = levels[index + 1..].iter().any(Dimension::self_mandatory);
    let node = add_dimension_nodes(tree, parent, &levels[index], name, Some(deeper_mandatory))?;
    if let Some(next) = levels.get(index + 1) {
        add_chain_nodes(tree, node, levels, index + 1, next.name.clone())?;
    }
    Ok(())
}

impl Mcm {
    /// Reads the model configuration document.
    ///
    /// ```xml
    /// <mcm fact="Sales">
    ///   <measure name="amount" type="decimal"/>
    ///   <dimension name="Time" multiplicity="1">
    ///     <attribute name="year" type="integer" mandatory="false"/>
    ///   </dimension>
    ///   <hierarchy>
    ///     <level name="Day"><attribute name="date"/></level>
    ///     <level name="Month"><attribute name="month"/></level>
    ///   </hierarchy>
    /// </mcm>
    /// ```
    ///
    /// `mandatory` defaults to `"true"` on every item, `multiplicity` to 1
    /// and attribute `type` to `"string"`.
    pub fn from_xml(doc: &Element) -> Result<Mcm, McmError> {
        if doc.name != "mcm" {
            return Err(McmError::Config(format!(
                "expected root element 'mcm', found '{}'",
                doc.name
            )));
        }
        let fact_name = doc
            .attr("fact")
            .ok_or_else(|| McmError::Config("mcm element without 'fact' attribute".into()))?
            .to_string();
        let mut mcm = Mcm {
            fact_name,
            measures: Vec::new(),
            dimensions: Vec::new(),
            hierarchies: Vec::new(),
        };
        for child in &doc.children {
            match child.name.as_str() {
                "measure" => {
                    let ty = child
                        .attr("type")
                        .ok_or_else(|| McmError::Config("measure without 'type'".into()))?;
                    mcm.measures.push(Measure {
                        name: required_name(child)?,
                        ty: MeasureType::parse(ty).ok_or_else(|| {
                            McmError::Config(format!("unknown measure type '{ty}'"))
                        })?,
                        mandatory: parse_mandatory(child)?,
                    });
                }
                "dimension" => mcm.dimensions.push(parse_dimension(child)?),
                "hierarchy" => {
                    let levels = child
                        .children_named("level")
                        .map(parse_dimension)
                        .collect::<Result<Vec<_>, _>>()?;
                    mcm.hierarchies.push(Hierarchy { levels });
                }
                other => {
                    return Err(McmError::Config(format!(
                        "unexpected element '{other}' in mcm configuration"
                    )))
                }
            }
        }
        Ok(mcm)
    }
}

fn required_name(e: &Element) -> Result<String, McmError> {
    e.attr("name")
        .map(String::from)
        .ok_or_else(|| McmError::Config(format!("'{}' element without 'name'", e.name)))
}

fn parse_mandatory(e: &Element) -> Result<bool, McmError> {
    match e.attr("mandatory") {
        None | Some("true") => Ok(true),
        Some("false") => Ok(false),
        Some(other) => Err(McmError::Config(format!(
            "mandatory must be 'true' or 'false', found '{other}'"
        ))),
    }
}

fn parse_dimension(e: &Element) -> Result<Dimension, McmError> {
    let multiplicity = match e.attr("multiplicity") {
        None => 1,
        Some(text) => text
            .parse::<u32>()
            .map_err(|_| McmError::Config(format!("bad multiplicity '{text}'")))?,
    };
    let mut attributes = Vec::new();
    for attr in e.children_named("attribute") {
        let ty = match attr.attr("type") {
            None => AttrType::String,
            Some(text) => AttrType::parse(text)
                .ok_or_else(|| McmError::Config(format!("unknown attribute type '{text}'")))?,
        };
        attributes.push(DimAttribute {
            name: required_name(attr)?,
            ty,
            mandatory: parse_mandatory(attr)?,
        });
    }
    Ok(Dimension {
        name: required_name(e)?,
        attributes,
        multiplicity,
        // A dimension is mandatory by default only through its attributes;
        // an explicit flag forces the element itself.
        mandatory: e.attr("mandatory") == Some("true"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attree::{tree_from_schema, LabelPath};
    use crate::xml;
    use alloc::vec;

    fn measure(name: &str, mandatory: bool) -> Measure {
        Measure {
            name: name.into(),
            ty: MeasureType::Decimal,
            mandatory,
        }
    }

    fn dimension(name: &str, attrs: &[(&str, bool)]) -> Dimension {
        Dimension {
            name: name.into(),
            attributes: attrs
                .iter()
                .map(|(n, m)| DimAttribute {
                    name: (*n).into(),
                    ty: AttrType::String,
                    mandatory: *m,
                })
                .collect(),
            multiplicity: 1,
            mandatory: false,
        }
    }

    fn sales_mcm() -> Mcm {
        Mcm {
            fact_name: "Sales".into(),
            measures: vec![measure("amount", true)],
            dimensions: vec![dimension("Time", &[("year", true)])],
            hierarchies: vec![],
        }
    }

    #[test]
    fn valid_model_has_empty_report() {
        assert!(validate_mcm(&sales_mcm()).is_valid());
    }

    #[test]
    fn all_optional_measures_are_rejected() {
        let mut m = sales_mcm();
        m.measures = vec![measure("amount", false), measure("qty", false)];
        let report = validate_mcm(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("no mandatory measure")));
    }

    #[test]
    fn duplicate_dimension_names_are_listed() {
        let mut m = sales_mcm();
        m.dimensions.push(dimension("Time", &[("zone", true)]));
        let report = validate_mcm(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("duplicate dimension name 'Time'")));
    }

    #[test]
    fn star_schema_follows_the_definition() {
        let schema = star_schema_of(&sales_mcm()).unwrap();
        assert_eq!(schema.name, "schema");
        let fact = schema.child("element").unwrap();
        assert_eq!(fact.attr("name"), Some("Sales"));
        // Measures become attributes of the root element.
        let m = fact.child("attribute").unwrap();
        assert_eq!(m.attr("name"), Some("amount"));
        assert_eq!(m.attr("use"), Some("required"));
        // Dimensions become child elements carrying their attributes.
        let time = fact.child("element").unwrap();
        assert_eq!(time.attr("name"), Some("Time"));
        let year = time.child("attribute").unwrap();
        assert_eq!(year.attr("name"), Some("year"));
    }

    #[test]
    fn multiplicity_two_emits_two_role_elements() {
        let mut m = sales_mcm();
        m.dimensions[0].multiplicity = 2;
        let schema = star_schema_of(&m).unwrap();
        let fact = schema.child("element").unwrap();
        let names: Vec<_> = fact
            .children_named("element")
            .map(|e| e.attr("name").unwrap())
            .collect();
        assert_eq!(names, vec!["Time_1", "Time_2"]);
    }

    #[test]
    fn empty_dimension_list_keeps_measures_only() {
        let mut m = sales_mcm();
        m.dimensions.clear();
        let schema = star_schema_of(&m).unwrap();
        let fact = schema.child("element").unwrap();
        assert_eq!(fact.children_named("element").count(), 0);
        assert_eq!(fact.children_named("attribute").count(), 1);
    }

    #[test]
    fn star_refuses_hierarchies_and_vice_versa() {
        let mut m = sales_mcm();
        assert!(snowflake_schema_of(&m).is_err());
        m.hierarchies.push(Hierarchy {
            levels: vec![dimension("Day", &[("date", true)])],
        });
        assert!(star_schema_of(&m).is_err());
    }

    fn snowflake_mcm() -> Mcm {
        Mcm {
            fact_name: "Sales".into(),
            measures: vec![measure("amount", true)],
            dimensions: vec![],
            hierarchies: vec![Hierarchy {
                levels: vec![
                    dimension("Day", &[("date", true)]),
                    dimension("Month", &[("month", true)]),
                    dimension("Year", &[("year", true)]),
                ],
            }],
        }
    }

    #[test]
    fn hierarchy_levels_nest_finest_first() {
        let schema = snowflake_schema_of(&snowflake_mcm()).unwrap();
        let fact = schema.child("element").unwrap();
        let day = fact.child("element").unwrap();
        assert_eq!(day.attr("name"), Some("Day"));
        let month = day.child("element").unwrap();
        assert_eq!(month.attr("name"), Some("Month"));
        let year = month.child("element").unwrap();
        assert_eq!(year.attr("name"), Some("Year"));
        assert!(year.child("element").is_none());
    }

    #[test]
    fn single_level_hierarchy_equals_star_output() {
        let snow = snowflake_schema_of(&Mcm {
            hierarchies: vec![Hierarchy {
                levels: vec![dimension("Time", &[("year", true)])],
            }],
            dimensions: vec![],
            ..sales_mcm()
        })
        .unwrap();
        let star = star_schema_of(&sales_mcm()).unwrap();
        assert_eq!(snow, star);
        assert_eq!(snow.to_document_string(), star.to_document_string());
    }

    #[test]
    fn two_hierarchies_emit_sibling_chains() {
        let mut m = snowflake_mcm();
        m.hierarchies.push(Hierarchy {
            levels: vec![
                dimension("Store", &[("city", true)]),
                dimension("Region", &[("region", true)]),
            ],
        });
        let schema = snowflake_schema_of(&m).unwrap();
        let fact = schema.child("element").unwrap();
        let chains: Vec<_> = fact
            .children_named("element")
            .map(|e| e.attr("name").unwrap())
            .collect();
        assert_eq!(chains, vec!["Day", "Store"]);
    }

    #[test]
    fn minimal_content_tree_flags() {
        // All-mandatory model: every node mandatory.
        let tree = minimal_content_tree(&sales_mcm()).unwrap();
        assert!(tree.path_map().values().all(|&m| m));

        // One optional attribute: only that leaf is optional.
        let mut m = sales_mcm();
        m.dimensions[0] = dimension("Time", &[("year", true), ("season", false)]);
        let tree = minimal_content_tree(&m).unwrap();
        let map = tree.path_map();
        assert!(!map[&LabelPath::parse("Sales/Time/season")]);
        assert!(map
            .iter()
            .filter(|(p, _)| **p != LabelPath::parse("Sales/Time/season"))
            .all(|(_, &m)| m));
    }

    #[test]
    fn optional_level_below_mandatory_level_is_forced_mandatory() {
        let mut m = snowflake_mcm();
        // Make Day and Month fully optional but keep Year mandatory.
        m.hierarchies[0].levels[0] = dimension("Day", &[("date", false)]);
        m.hierarchies[0].levels[1] = dimension("Month", &[("month", false)]);
        let tree = minimal_content_tree(&m).unwrap();
        let map = tree.path_map();
        // Year is mandatory, so the chain above it must be present too.
        assert!(map[&LabelPath::parse("Sales/Day")]);
        assert!(map[&LabelPath::parse("Sales/Day/Month")]);
        assert!(!map[&LabelPath::parse("Sales/Day/date")]);
    }

    #[test]
    fn both_construction_routes_agree() {
        for m in [
            sales_mcm(),
            snowflake_mcm(),
            Mcm {
                dimensions: vec![
                    dimension("Product", &[("sku", true), ("cat", false)]),
                    Dimension {
                        multiplicity: 3,
                        ..dimension("Time", &[("year", true)])
                    },
                ],
                ..sales_mcm()
            },
        ] {
            let schema = if m.hierarchies.is_empty() {
                star_schema_of(&m).unwrap()
            } else {
                snowflake_schema_of(&m).unwrap()
            };
            let via_schema = tree_from_schema(&schema).unwrap();
            let direct = minimal_content_tree(&m).unwrap();
            assert!(
                direct.structural_eq(&via_schema),
                "construction routes disagree:\n{:?}\nvs\n{:?}",
                direct.path_map(),
                via_schema.path_map()
            );
        }
    }

    #[test]
    fn star_leaf_count_matches_formula() {
        let m = Mcm {
            fact_name: "F".into(),
            measures: vec![measure("m1", true), measure("m2", false)],
            dimensions: vec![
                Dimension {
                    multiplicity: 2,
                    ..dimension("D1", &[("a", true), ("b", false), ("c", true)])
                },
                dimension("D2", &[("x", true)]),
            ],
            hierarchies: vec![],
        };
        let tree = tree_from_schema(&star_schema_of(&m).unwrap()).unwrap();
        let leaves = tree
            .path_set()
            .iter()
            .filter(|p| {
                let node = tree.find(p).unwrap();
                tree.children(node).next().is_none()
            })
            .count();
        assert_eq!(leaves, 2 + 2 * 3 + 1);
    }

    #[test]
    fn config_parsing_defaults() {
        let doc = xml::parse(
            r#"<mcm fact="Sales">
                 <measure name="amount" type="decimal"/>
                 <measure name="qty" type="integer" mandatory="false"/>
                 <dimension name="Time">
                   <attribute name="year" type="integer"/>
                   <attribute name="season" mandatory="false"/>
                 </dimension>
                 <hierarchy>
                   <level name="Store"><attribute name="city"/></level>
                   <level name="Region"><attribute name="region"/></level>
                 </hierarchy>
               </mcm>"#,
        )
        .unwrap();
        let m = Mcm::from_xml(&doc).unwrap();
        assert_eq!(m.fact_name, "Sales");
        assert!(m.measures[0].mandatory);
        assert!(!m.measures[1].mandatory);
        assert_eq!(m.dimensions[0].multiplicity, 1);
        assert_eq!(m.dimensions[0].attributes[1].ty, AttrType::String);
        assert!(!m.dimensions[0].attributes[1].mandatory);
        assert_eq!(m.hierarchies[0].levels.len(), 2);
        assert!(validate_mcm(&m).is_valid());
    }

    #[test]
    fn config_errors() {
        for text in [
            "<notmcm/>",
            "<mcm/>",
            "<mcm fact=\"F\"><measure name=\"m\"/></mcm>",
            "<mcm fact=\"F\"><measure name=\"m\" type=\"float\"/></mcm>",
            "<mcm fact=\"F\"><widget/></mcm>",
            "<mcm fact=\"F\"><dimension name=\"D\" multiplicity=\"x\"/></mcm>",
        ] {
            let doc = xml::parse(text).unwrap();
            assert!(Mcm::from_xml(&doc).is_err(), "accepted: {text}");
        }
    }
}
