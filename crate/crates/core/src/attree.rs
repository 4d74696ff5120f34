//! Attribute trees and the pruning/grafting/fusion algebra.
//!
//! An attribute tree is a rooted, acyclic, weakly connected labeled graph
//! describing either a warehouse schema or the shape of a concrete document.
//! Warehouse trees carry mandatory flags; document trees are flag-free.
//!
//! Nodes are matched across trees by their root-to-node label path: the only
//! key that is stable between a schema and an arbitrary document. The same
//! tag name at two hierarchy positions is therefore two distinct nodes.
//!
//! [`AttributeTree::fuse`] is the admission gate of the whole pipeline: a
//! candidate document is accepted when every mandatory label path of the
//! reference tree occurs in it, and the merged tree is the reference shape
//! restricted to what the candidate actually contains (candidate-only
//! content is pruned away, absent optional nodes are dropped).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::xml::Element;

/// Root-to-node sequence of labels, rendered as `a/b/c`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelPath(Vec<String>);

impl LabelPath {
    pub fn new(segments: Vec<String>) -> Self {
        LabelPath(segments)
    }

    pub fn root(label: impl Into<String>) -> Self {
        LabelPath(alloc::vec![label.into()])
    }

    pub fn child(&self, label: impl Into<String>) -> Self {
        let mut segments = self.0.clone();
        segments.push(label.into());
        LabelPath(segments)
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Path of the parent node; `None` for a root path.
    pub fn parent(&self) -> Option<LabelPath> {
        if self.0.len() <= 1 {
            None
        } else {
            Some(LabelPath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> &str {
        self.0.last().map(String::as_str).unwrap_or("")
    }

    /// True when `self` is a (non-strict) ancestor path of `other`.
    pub fn is_prefix_of(&self, other: &LabelPath) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Parses the `a/b/c` rendering.
    pub fn parse(text: &str) -> LabelPath {
        LabelPath(text.split('/').map(String::from).collect())
    }
}

impl fmt::Display for LabelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, segment) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            f.write_str(segment)?;
        }
        Ok(())
    }
}

/// Handle to a node of one specific [`AttributeTree`] value.
///
/// Handles are not stable across tree-producing operations; re-resolve by
/// path with [`AttributeTree::find`] after a prune or graft.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
struct Node {
    label: String,
    mandatory: bool,
    parent: Option<usize>,
    children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct AttributeTree {
    nodes: Vec<Node>,
    root: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeError {
    CannotPruneRoot,
    CannotGraftRoot,
    UnknownNode,
    DuplicateSiblingLabel { parent: String, label: String },
    MalformedSchema(String),
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::CannotPruneRoot => write!(f, "the root node cannot be pruned"),
            TreeError::CannotGraftRoot => write!(f, "the root node cannot be grafted"),
            TreeError::UnknownNode => write!(f, "node does not belong to this tree"),
            TreeError::DuplicateSiblingLabel { parent, label } => {
                write!(f, "duplicate sibling label '{label}' under '{parent}'")
            }
            TreeError::MalformedSchema(msg) => write!(f, "malformed schema: {msg}"),
        }
    }
}

impl core::error::Error for TreeError {}

/// Did the candidate clear the mandatory-content threshold?
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionStatus {
    Accepted,
    Rejected,
}

/// Result of fusing a candidate document tree against a reference tree.
///
/// `status == Accepted` exactly when `missing` is empty, which is exactly
/// when `merged` is present.
#[derive(Clone, Debug)]
pub struct FusionOutcome {
    pub status: FusionStatus,
    pub merged: Option<AttributeTree>,
    pub missing: Vec<LabelPath>,
}

impl AttributeTree {
    /// Single-node tree.
    pub fn leaf(label: impl Into<String>, mandatory: bool) -> Self {
        AttributeTree {
            nodes: alloc::vec![Node {
                label: label.into(),
                mandatory,
                parent: None,
                children: Vec::new(),
            }],
            root: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(self.root)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a tree always has its root
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.nodes[node.0].label
    }

    pub fn mandatory(&self, node: NodeId) -> bool {
        self.nodes[node.0].mandatory
    }

    pub fn children(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[node.0].children.iter().map(|&i| NodeId(i))
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node.0].parent.map(NodeId)
    }

    fn contains(&self, node: NodeId) -> bool {
        node.0 < self.nodes.len()
    }

    /// Appends a child, enforcing sibling-label uniqueness.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        label: impl Into<String>,
        mandatory: bool,
    ) -> Result<NodeId, TreeError> {
        if !self.contains(parent) {
            return Err(TreeError::UnknownNode);
        }
        let label = label.into();
        for &c in &self.nodes[parent.0].children {
            if self.nodes[c].label == label {
                return Err(TreeError::DuplicateSiblingLabel {
                    parent: self.nodes[parent.0].label.clone(),
                    label,
                });
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            label,
            mandatory,
            parent: Some(parent.0),
            children: Vec::new(),
        });
        self.nodes[parent.0].children.push(id);
        Ok(NodeId(id))
    }

    pub fn path_of(&self, node: NodeId) -> LabelPath {
        let mut segments = Vec::new();
        let mut current = Some(node.0);
        while let Some(i) = current {
            segments.push(self.nodes[i].label.clone());
            current = self.nodes[i].parent;
        }
        segments.reverse();
        LabelPath(segments)
    }

    /// Resolves a label path to a node.
    pub fn find(&self, path: &LabelPath) -> Option<NodeId> {
        let mut segments = path.segments().iter();
        if segments.next()? != &self.nodes[self.root].label {
            return None;
        }
        let mut current = self.root;
        'outer: for segment in segments {
            for &c in &self.nodes[current].children {
                if self.nodes[c].label == *segment {
                    current = c;
                    continue 'outer;
                }
            }
            return None;
        }
        Some(NodeId(current))
    }

    /// Canonical form: every node's path mapped to its mandatory flag.
    ///
    /// Because sibling labels are unique, this map determines the tree up to
    /// node identifiers and child order.
    pub fn path_map(&self) -> BTreeMap<LabelPath, bool> {
        let mut map = BTreeMap::new();
        for i in 0..self.nodes.len() {
            map.insert(self.path_of(NodeId(i)), self.nodes[i].mandatory);
        }
        map
    }

    /// The set of all node paths.
    pub fn path_set(&self) -> BTreeSet<LabelPath> {
        self.path_map().into_keys().collect()
    }

    /// Paths of all mandatory nodes.
    pub fn mandatory_paths(&self) -> BTreeSet<LabelPath> {
        self.path_map()
            .into_iter()
            .filter_map(|(p, m)| m.then_some(p))
            .collect()
    }

    /// Structural equality: same label paths with the same mandatory flags,
    /// ignoring node identifiers and child order.
    pub fn structural_eq(&self, other: &AttributeTree) -> bool {
        self.path_map() == other.path_map()
    }

    /// Rebuilds a tree from a canonical path map.
    ///
    /// The map must contain exactly one root path and be closed under
    /// parents.
    pub fn from_path_map(map: &BTreeMap<LabelPath, bool>) -> Result<AttributeTree, TreeError> {
        let mut roots = map.keys().filter(|p| p.len() == 1);
        let root_path = roots
            .next()
            .ok_or_else(|| TreeError::MalformedSchema("no root path".to_string()))?;
        if roots.next().is_some() {
            return Err(TreeError::MalformedSchema("multiple root paths".to_string()));
        }
        let mut tree = AttributeTree::leaf(root_path.last(), map[root_path]);
        // BTreeMap iteration yields parents before children (prefix order).
        for (path, &mandatory) in map {
            if path.len() == 1 {
                continue;
            }
            let parent_path = path.parent().expect("non-root path has a parent");
            let parent = tree.find(&parent_path).ok_or_else(|| {
                TreeError::MalformedSchema(format!("orphan path '{path}'"))
            })?;
            tree.add_child(parent, path.last(), mandatory)?;
        }
        Ok(tree)
    }

    /// Verifies the type invariants; used by tests after every rebuilding
    /// operation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".to_string());
        }
        if self.nodes[self.root].parent.is_some() {
            return Err("root has a parent".to_string());
        }
        let mut seen = alloc::vec![false; self.nodes.len()];
        let mut stack = alloc::vec![self.root];
        let mut reached = 0usize;
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(format!("node {i} reached twice (cycle or shared child)"));
            }
            seen[i] = true;
            reached += 1;
            let mut labels = BTreeSet::new();
            for &c in &self.nodes[i].children {
                if self.nodes[c].parent != Some(i) {
                    return Err(format!("child {c} does not point back to parent {i}"));
                }
                if !labels.insert(self.nodes[c].label.as_str()) {
                    return Err(format!(
                        "duplicate sibling label '{}' under node {i}",
                        self.nodes[c].label
                    ));
                }
                stack.push(c);
            }
        }
        if reached != self.nodes.len() {
            return Err(format!(
                "tree is not connected: reached {reached} of {} nodes",
                self.nodes.len()
            ));
        }
        Ok(())
    }

    /// Removes `node` and its whole subtree.
    pub fn prune(&self, node: NodeId) -> Result<AttributeTree, TreeError> {
        if !self.contains(node) {
            return Err(TreeError::UnknownNode);
        }
        if node.0 == self.root {
            return Err(TreeError::CannotPruneRoot);
        }
        let mut out = AttributeTree::leaf(
            self.nodes[self.root].label.clone(),
            self.nodes[self.root].mandatory,
        );
        self.copy_children(self.root, &mut out, NodeId(0), Some(node.0));
        Ok(out)
    }

    fn copy_children(
        &self,
        from: usize,
        out: &mut AttributeTree,
        to: NodeId,
        skip: Option<usize>,
    ) {
        for &c in &self.nodes[from].children {
            if Some(c) == skip {
                continue;
            }
            let copied = out
                .add_child(to, self.nodes[c].label.clone(), self.nodes[c].mandatory)
                .expect("source tree has unique sibling labels");
            self.copy_children(c, out, copied, skip);
        }
    }

    /// Removes `node` while reattaching its children to its parent.
    ///
    /// When a promoted child carries the same label as an existing sibling,
    /// the two nodes merge: children sets are unioned recursively and the
    /// mandatory flags are or-ed.
    pub fn graft(&self, node: NodeId) -> Result<AttributeTree, TreeError> {
        if !self.contains(node) {
            return Err(TreeError::UnknownNode);
        }
        if node.0 == self.root {
            return Err(TreeError::CannotGraftRoot);
        }
        let mut out = AttributeTree::leaf(
            self.nodes[self.root].label.clone(),
            self.nodes[self.root].mandatory,
        );
        self.graft_copy(self.root, &mut out, NodeId(0), node.0);
        Ok(out)
    }

    /// Copies the children of `from` under `to`. The grafted node is spliced
    /// out wherever the walk meets it: its children continue under the same
    /// target, merging with equal-label siblings (flags or-ed, children sets
    /// unioned recursively).
    fn graft_copy(&self, from: usize, out: &mut AttributeTree, to: NodeId, grafted: usize) {
        for &c in &self.nodes[from].children {
            if c == grafted {
                self.graft_copy(c, out, to, grafted);
                continue;
            }
            let label = &self.nodes[c].label;
            let existing = out.children(to).find(|&k| out.nodes[k.0].label == *label);
            let target = match existing {
                Some(id) => {
                    out.nodes[id.0].mandatory |= self.nodes[c].mandatory;
                    id
                }
                None => out
                    .add_child(to, label.clone(), self.nodes[c].mandatory)
                    .expect("no equal-label sibling exists"),
            };
            self.graft_copy(c, out, target, grafted);
        }
    }

    /// Admission check and merge of a candidate document tree against this
    /// reference tree.
    ///
    /// Accepted exactly when every mandatory label path of the reference
    /// occurs in the candidate. The merged tree is the reference restricted
    /// to paths the candidate contains (the root always survives), keeping
    /// the reference's mandatory flags. Rejection is a value, not an error.
    pub fn fuse(&self, candidate: &AttributeTree) -> FusionOutcome {
        let candidate_paths = candidate.path_set();
        let missing: Vec<LabelPath> = self
            .mandatory_paths()
            .into_iter()
            .filter(|p| !candidate_paths.contains(p))
            .collect();
        if !missing.is_empty() {
            return FusionOutcome {
                status: FusionStatus::Rejected,
                merged: None,
                missing,
            };
        }
        let surviving: BTreeMap<LabelPath, bool> = self
            .path_map()
            .into_iter()
            .filter(|(p, _)| p.len() == 1 || candidate_paths.contains(p))
            .collect();
        let merged =
            AttributeTree::from_path_map(&surviving).expect("filtered map stays prefix-closed");
        FusionOutcome {
            status: FusionStatus::Accepted,
            merged: Some(merged),
            missing: Vec::new(),
        }
    }

    /// Diagnostic XML rendering: one `node` element per tree node.
    pub fn to_diagnostic_xml(&self) -> Element {
        self.node_to_xml(NodeId(self.root))
    }

    fn node_to_xml(&self, node: NodeId) -> Element {
        let mut e = Element::new("node")
            .with_attr("label", self.nodes[node.0].label.clone())
            .with_attr("mandatory", bool_str(self.nodes[node.0].mandatory));
        for child in self.children(node) {
            e.children.push(self.node_to_xml(child));
        }
        e
    }
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Builds the attribute tree of a logical schema document.
///
/// The schema format is the one emitted by [`crate::mcm`]: a `schema` root
/// wrapping exactly one fact `element`, with nested `element` and
/// `attribute` declarations. Every declaration becomes one node; `attribute`
/// declarations become leaves.
pub fn tree_from_schema(schema: &Element) -> Result<AttributeTree, TreeError> {
    if schema.name != "schema" {
        return Err(TreeError::MalformedSchema(format!(
            "expected root element 'schema', found '{}'",
            schema.name
        )));
    }
    let mut fact_elements = schema.children_named("element");
    let fact = fact_elements
        .next()
        .ok_or_else(|| TreeError::MalformedSchema("schema declares no fact element".into()))?;
    if fact_elements.next().is_some() {
        return Err(TreeError::MalformedSchema(
            "schema declares multiple root elements".into(),
        ));
    }
    let name = schema_decl_name(fact)?;
    let mut tree = AttributeTree::leaf(name, schema_decl_required(fact));
    schema_children_into(fact, &mut tree, NodeId(0))?;
    Ok(tree)
}

fn schema_decl_name(decl: &Element) -> Result<&str, TreeError> {
    decl.attr("name")
        .ok_or_else(|| TreeError::MalformedSchema(format!("'{}' declaration without name", decl.name)))
}

fn schema_decl_required(decl: &Element) -> bool {
    decl.attr("use") != Some("optional")
}

fn schema_children_into(
    decl: &Element,
    tree: &mut AttributeTree,
    node: NodeId,
) -> Result<(), TreeError> {
    for child in &decl.children {
        match child.name.as_str() {
            "attribute" | "element" => {
                let id = tree.add_child(node, schema_decl_name(child)?, schema_decl_required(child))?;
                if child.name == "element" {
                    schema_children_into(child, tree, id)?;
                } else if !child.children.is_empty() {
                    return Err(TreeError::MalformedSchema(
                        "attribute declarations cannot nest".into(),
                    ));
                }
            }
            other => {
                return Err(TreeError::MalformedSchema(format!(
                    "unexpected declaration '{other}'"
                )))
            }
        }
    }
    Ok(())
}

/// Extracts the attribute tree of a concrete document.
///
/// One node per distinct label path: repeated sibling elements with the same
/// name collapse onto one node, and XML attributes become child nodes so a
/// value carried either as an attribute or as a child element satisfies the
/// same path. Mandatory flags are all false.
pub fn tree_from_document(doc: &Element) -> AttributeTree {
    let mut tree = AttributeTree::leaf(doc.name.clone(), false);
    document_children_into(doc, &mut tree, NodeId(0));
    tree
}

fn document_children_into(doc: &Element, tree: &mut AttributeTree, node: NodeId) {
    for (attr, _) in &doc.attrs {
        find_or_add(tree, node, attr);
    }
    for child in &doc.children {
        let id = find_or_add(tree, node, &child.name);
        document_children_into(child, tree, id);
    }
}

fn find_or_add(tree: &mut AttributeTree, parent: NodeId, label: &str) -> NodeId {
    let existing = tree.children(parent).find(|&c| tree.label(c) == label);
    match existing {
        Some(id) => id,
        None => tree
            .add_child(parent, label, false)
            .expect("absence was just checked"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml;
    use alloc::vec;
    use proptest::prelude::*;

    fn doc(text: &str) -> Element {
        xml::parse(text).unwrap()
    }

    /// Hand-built star schema document: fact F{m1}, dimension D{a1}.
    fn small_schema() -> Element {
        Element::new("schema").with_child(
            Element::new("element")
                .with_attr("name", "F")
                .with_attr("use", "required")
                .with_child(
                    Element::new("attribute")
                        .with_attr("name", "m1")
                        .with_attr("type", "integer")
                        .with_attr("use", "required"),
                )
                .with_child(
                    Element::new("element")
                        .with_attr("name", "D")
                        .with_attr("use", "required")
                        .with_child(
                            Element::new("attribute")
                                .with_attr("name", "a1")
                                .with_attr("type", "string")
                                .with_attr("use", "required"),
                        ),
                ),
        )
    }

    #[test]
    fn schema_tree_mirrors_declarations() {
        let tree = tree_from_schema(&small_schema()).unwrap();
        let root = tree.root();
        assert_eq!(tree.label(root), "F");
        let labels: Vec<_> = tree.children(root).map(|c| tree.label(c).to_string()).collect();
        assert_eq!(labels, vec!["m1", "D"]);
        let d = tree.find(&LabelPath::parse("F/D")).unwrap();
        let d_children: Vec<_> = tree.children(d).map(|c| tree.label(c).to_string()).collect();
        assert_eq!(d_children, vec!["a1"]);
    }

    #[test]
    fn snowflake_nesting_becomes_a_path() {
        let schema = doc(r#"<schema>
            <element name="F" use="required">
              <element name="D1" use="required">
                <element name="D2" use="required">
                  <attribute name="a" type="string" use="required"/>
                </element>
              </element>
            </element>
          </schema>"#);
        let tree = tree_from_schema(&schema).unwrap();
        assert!(tree.find(&LabelPath::parse("F/D1/D2/a")).is_some());
        assert_eq!(tree.len(), 4);
    }

    /// Independent walk of a schema document collecting attribute paths.
    fn schema_attribute_paths(decl: &Element, prefix: &LabelPath, out: &mut BTreeSet<LabelPath>) {
        for child in &decl.children {
            let path = prefix.child(child.attr("name").unwrap());
            match child.name.as_str() {
                "attribute" => {
                    out.insert(path);
                }
                _ => schema_attribute_paths(child, &path, out),
            }
        }
    }

    #[test]
    fn schema_tree_leaves_equal_attribute_set() {
        let schema = small_schema();
        let fact = schema.child("element").unwrap();
        let mut expected = BTreeSet::new();
        schema_attribute_paths(
            fact,
            &LabelPath::root(fact.attr("name").unwrap()),
            &mut expected,
        );
        let tree = tree_from_schema(&schema).unwrap();
        let leaves: BTreeSet<LabelPath> = tree
            .path_set()
            .into_iter()
            .filter(|p| {
                let node = tree.find(p).unwrap();
                tree.children(node).next().is_none()
            })
            .collect();
        assert_eq!(leaves, expected);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            tree_from_schema(&doc("<schema/>")),
            Err(TreeError::MalformedSchema(_))
        ));
        assert!(matches!(
            tree_from_schema(&doc(
                "<schema><element name=\"a\"/><element name=\"b\"/></schema>"
            )),
            Err(TreeError::MalformedSchema(_))
        ));
    }

    #[test]
    fn duplicate_siblings_collapse() {
        let tree = tree_from_document(&doc("<a><b/><b/><c/></a>"));
        let labels: Vec<_> = tree
            .children(tree.root())
            .map(|c| tree.label(c).to_string())
            .collect();
        assert_eq!(labels, vec!["b", "c"]);
    }

    #[test]
    fn single_element_document() {
        let tree = tree_from_document(&doc("<a/>"));
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.label(tree.root()), "a");
    }

    #[test]
    fn attributes_become_child_nodes() {
        let tree = tree_from_document(&doc("<a x=\"1\"><x/><b y=\"2\"/></a>"));
        // Attribute x and element x collapse onto one path.
        assert_eq!(tree.path_set().len(), 4);
        assert!(tree.find(&LabelPath::parse("a/b/y")).is_some());
    }

    /// Path-enumeration oracle: distinct root-to-node label paths of a document.
    fn enumerate_paths(doc: &Element, prefix: &LabelPath, out: &mut BTreeSet<LabelPath>) {
        out.insert(prefix.clone());
        for (attr, _) in &doc.attrs {
            out.insert(prefix.child(attr));
        }
        for child in &doc.children {
            enumerate_paths(child, &prefix.child(child.name.clone()), out);
        }
    }

    #[test]
    fn node_count_equals_distinct_path_count() {
        let document = doc(
            "<lib><shelf n=\"1\"><book t=\"x\"/><book t=\"y\"/></shelf><shelf n=\"2\"><cd/></shelf></lib>",
        );
        let tree = tree_from_document(&document);
        let mut expected = BTreeSet::new();
        enumerate_paths(&document, &LabelPath::root("lib"), &mut expected);
        assert_eq!(tree.path_set(), expected);
        assert_eq!(tree.len(), expected.len());
    }

    #[test]
    fn prune_leaf_and_internal() {
        let tree = tree_from_document(&doc("<a><b/></a>"));
        let b = tree.find(&LabelPath::parse("a/b")).unwrap();
        let pruned = tree.prune(b).unwrap();
        assert_eq!(pruned.len(), 1);

        let tree = tree_from_document(&doc("<a><m><x/><y/></m><z/></a>"));
        let m = tree.find(&LabelPath::parse("a/m")).unwrap();
        let pruned = tree.prune(m).unwrap();
        assert_eq!(pruned.len(), tree.len() - 3);
        pruned.check_invariants().unwrap();
    }

    #[test]
    fn prune_errors() {
        let tree = tree_from_document(&doc("<a><b/></a>"));
        assert!(matches!(tree.prune(tree.root()), Err(TreeError::CannotPruneRoot)));
        assert!(matches!(tree.prune(NodeId(99)), Err(TreeError::UnknownNode)));
        assert!(matches!(tree.graft(tree.root()), Err(TreeError::CannotGraftRoot)));
        assert!(matches!(tree.graft(NodeId(99)), Err(TreeError::UnknownNode)));
    }

    #[test]
    fn graft_leaf_equals_prune_leaf() {
        let tree = tree_from_document(&doc("<a><b/><c><d/></c></a>"));
        let b = tree.find(&LabelPath::parse("a/b")).unwrap();
        assert!(tree.graft(b).unwrap().structural_eq(&tree.prune(b).unwrap()));
    }

    #[test]
    fn graft_mid_node_shortens_path() {
        let tree = tree_from_document(&doc("<a><b><c/></b></a>"));
        let b = tree.find(&LabelPath::parse("a/b")).unwrap();
        let grafted = tree.graft(b).unwrap();
        assert!(grafted.find(&LabelPath::parse("a/c")).is_some());
        assert_eq!(grafted.len(), 2);
    }

    #[test]
    fn graft_merges_label_collisions() {
        // Grafting m promotes x, colliding with the existing sibling x.
        let tree = tree_from_document(&doc("<a><m><x><p/></x></m><x><q/></x></a>"));
        let m = tree.find(&LabelPath::parse("a/m")).unwrap();
        let grafted = tree.graft(m).unwrap();
        grafted.check_invariants().unwrap();
        let expected: BTreeSet<LabelPath> = ["a", "a/x", "a/x/p", "a/x/q"]
            .iter()
            .map(|s| LabelPath::parse(s))
            .collect();
        assert_eq!(grafted.path_set(), expected);
    }

    /// Oracle for graft: transform the path map and rebuild the tree.
    fn graft_oracle(tree: &AttributeTree, node: NodeId) -> AttributeTree {
        let grafted_path = tree.path_of(node);
        let depth = grafted_path.len() - 1;
        let mut map: BTreeMap<LabelPath, bool> = BTreeMap::new();
        for (path, mandatory) in tree.path_map() {
            if path == grafted_path {
                continue;
            }
            let new_path = if grafted_path.is_prefix_of(&path) {
                let mut segments = path.segments().to_vec();
                segments.remove(depth);
                LabelPath::new(segments)
            } else {
                path
            };
            *map.entry(new_path).or_insert(false) |= mandatory;
        }
        AttributeTree::from_path_map(&map).unwrap()
    }

    #[test]
    fn graft_collision_matches_rebuild_oracle() {
        let tree = tree_from_document(&doc(
            "<a><m><x><p/></x><y/></m><x><q/><p/></x><z/></a>",
        ));
        let m = tree.find(&LabelPath::parse("a/m")).unwrap();
        assert!(tree.graft(m).unwrap().structural_eq(&graft_oracle(&tree, m)));
    }

    #[test]
    fn self_fusion_is_identity_for_all_mandatory() {
        let schema = small_schema();
        let tree = tree_from_schema(&schema).unwrap();
        let outcome = tree.fuse(&tree);
        assert_eq!(outcome.status, FusionStatus::Accepted);
        assert!(outcome.merged.unwrap().structural_eq(&tree));
        assert!(outcome.missing.is_empty());
    }

    #[test]
    fn missing_mandatory_measure_rejects() {
        let reference = tree_from_schema(&small_schema()).unwrap();
        let candidate = tree_from_document(&doc("<F><D a1=\"v\"/></F>"));
        let outcome = reference.fuse(&candidate);
        assert_eq!(outcome.status, FusionStatus::Rejected);
        assert!(outcome.merged.is_none());
        assert_eq!(outcome.missing, vec![LabelPath::parse("F/m1")]);
    }

    #[test]
    fn fusion_prunes_candidate_only_and_absent_optional_content() {
        let schema = doc(r#"<schema>
            <element name="F" use="required">
              <attribute name="m1" type="integer" use="required"/>
              <element name="D" use="optional">
                <attribute name="a1" type="string" use="optional"/>
              </element>
            </element>
          </schema>"#);
        let reference = tree_from_schema(&schema).unwrap();
        let candidate = tree_from_document(&doc("<F m1=\"1\"><extra/><noise n=\"2\"/></F>"));
        let outcome = reference.fuse(&candidate);
        assert_eq!(outcome.status, FusionStatus::Accepted);
        let merged = outcome.merged.unwrap();
        let expected: BTreeSet<LabelPath> =
            [LabelPath::parse("F"), LabelPath::parse("F/m1")].into_iter().collect();
        assert_eq!(merged.path_set(), expected);
    }

    #[test]
    fn diagnostic_xml_lists_every_node() {
        let tree = tree_from_schema(&small_schema()).unwrap();
        let xml = tree.to_diagnostic_xml();
        assert_eq!(xml.attr("label"), Some("F"));
        assert_eq!(xml.attr("mandatory"), Some("true"));
        assert_eq!(xml.children.len(), 2);
    }

    // --- property tests ---------------------------------------------------

    prop_compose! {
        /// Random tree built from (parent choice, label choice, mandatory)
        /// insertion triples over a small label pool to force collisions.
        fn arb_tree()(
            inserts in proptest::collection::vec((any::<u8>(), 0u8..6, any::<bool>()), 0..24)
        ) -> AttributeTree {
            let labels = ["a", "b", "c", "d", "e", "f"];
            let mut tree = AttributeTree::leaf("root", false);
            let mut ids = vec![tree.root()];
            for (parent, label, mandatory) in inserts {
                let parent = ids[parent as usize % ids.len()];
                if let Ok(id) = tree.add_child(parent, labels[label as usize], mandatory) {
                    ids.push(id);
                }
            }
            tree
        }
    }

    fn non_root_nodes(tree: &AttributeTree) -> Vec<LabelPath> {
        tree.path_set().into_iter().filter(|p| p.len() > 1).collect()
    }

    proptest! {
        #[test]
        fn prune_and_graft_preserve_invariants(tree in arb_tree(), pick in any::<u16>()) {
            let candidates = non_root_nodes(&tree);
            prop_assume!(!candidates.is_empty());
            let path = &candidates[pick as usize % candidates.len()];
            let node = tree.find(path).unwrap();
            tree.prune(node).unwrap().check_invariants().unwrap();
            tree.graft(node).unwrap().check_invariants().unwrap();
        }

        #[test]
        fn prune_removes_exactly_the_subtree(tree in arb_tree(), pick in any::<u16>()) {
            let candidates = non_root_nodes(&tree);
            prop_assume!(!candidates.is_empty());
            let path = &candidates[pick as usize % candidates.len()];
            let node = tree.find(path).unwrap();
            // Subtree size by independent DFS over the path set.
            let subtree = tree
                .path_set()
                .iter()
                .filter(|p| path.is_prefix_of(p))
                .count();
            let pruned = tree.prune(node).unwrap();
            prop_assert_eq!(pruned.len(), tree.len() - subtree);
        }

        #[test]
        fn graft_matches_path_rebuild_oracle(tree in arb_tree(), pick in any::<u16>()) {
            let candidates = non_root_nodes(&tree);
            prop_assume!(!candidates.is_empty());
            let path = &candidates[pick as usize % candidates.len()];
            let node = tree.find(path).unwrap();
            let grafted = tree.graft(node).unwrap();
            prop_assert!(grafted.structural_eq(&graft_oracle(&tree, node)));
        }

        #[test]
        fn grafts_on_disjoint_branches_commute(
            tree in arb_tree(),
            pick_a in any::<u16>(),
            pick_b in any::<u16>(),
        ) {
            let candidates = non_root_nodes(&tree);
            // Disjoint branches: a graft rewrites the subtree under the
            // grafted node's parent, so the two parent subtrees must not
            // contain the other node.
            let pairs: Vec<(&LabelPath, &LabelPath)> = candidates
                .iter()
                .flat_map(|a| candidates.iter().map(move |b| (a, b)))
                .filter(|(a, b)| {
                    !a.parent().unwrap().is_prefix_of(b)
                        && !b.parent().unwrap().is_prefix_of(a)
                })
                .collect();
            if pairs.is_empty() {
                return Ok(());
            }
            let (a, b) = pairs[(pick_a as usize ^ (pick_b as usize) << 4) % pairs.len()];

            let graft_at = |t: &AttributeTree, p: &LabelPath| {
                let node = t.find(p).expect("disjoint path survives the other graft");
                t.graft(node).unwrap()
            };
            let ab = graft_at(&graft_at(&tree, a), b);
            let ba = graft_at(&graft_at(&tree, b), a);
            prop_assert_eq!(ab.path_set(), ba.path_set());
        }

        #[test]
        fn fusion_acceptance_equals_path_inclusion(
            reference in arb_tree(),
            candidate in arb_tree(),
        ) {
            let outcome = reference.fuse(&candidate);
            let included = reference
                .mandatory_paths()
                .is_subset(&candidate.path_set());
            prop_assert_eq!(outcome.status == FusionStatus::Accepted, included);
            prop_assert_eq!(outcome.missing.is_empty(), included);
            prop_assert_eq!(outcome.merged.is_some(), included);
            if let Some(merged) = outcome.merged {
                merged.check_invariants().unwrap();
            }
        }
    }
}
