//! Tag-structure mining over a document corpus.
//!
//! Tags are qualified by their full root-to-node path before mining, which
//! keeps equal tag names at different hierarchy positions apart. The minimal
//! DTD is the union tag hierarchy of the corpus with per-path document
//! counts; each document then becomes one transaction whose items are its
//! distinct tag paths.
//!
//! The frequent-itemset search is a level-wise Apriori adapted to the tag
//! hierarchy: a transaction's path set is closed under ancestors (a document
//! containing `a/b` necessarily contains `a`), so an itemset that lies on
//! one root-to-leaf path is structurally trivial — its support equals the
//! support of its deepest item. Such chains are therefore never counted
//! against the transactions (their support is derived) and never reported,
//! while still feeding candidate generation so that mixed itemsets survive.
//! Rules are extracted from the reported itemsets and scored by lift.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::attree::{self, AttributeTree, LabelPath};
use crate::xml::Element;

/// The union tag hierarchy of a corpus: one tree per distinct document root
/// (a homogeneous corpus yields exactly one), plus how many documents
/// contain each path.
#[derive(Clone, Debug)]
pub struct MinimalDtd {
    pub roots: Vec<AttributeTree>,
    pub counts: BTreeMap<LabelPath, u64>,
}

impl MinimalDtd {
    pub fn contains(&self, path: &LabelPath) -> bool {
        self.counts.contains_key(path)
    }

    /// Diagnostic document: the hierarchy with per-path document counts.
    pub fn to_xml(&self) -> Element {
        let mut root = Element::new("dtd");
        for tree in &self.roots {
            root.children.push(self.node_xml(tree, tree.root()));
        }
        root
    }

    fn node_xml(&self, tree: &AttributeTree, node: attree::NodeId) -> Element {
        let path = tree.path_of(node);
        let mut e = Element::new("node")
            .with_attr("label", tree.label(node))
            .with_attr("count", self.counts.get(&path).copied().unwrap_or(0).to_string());
        for child in tree.children(node) {
            e.children.push(self.node_xml(tree, child));
        }
        e
    }
}

/// One document's itemset: its distinct tag paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub document: String,
    pub items: BTreeSet<LabelPath>,
}

/// All frequent itemsets of a corpus.
///
/// `sets` is the reported list (chains suppressed); `support` keeps every
/// frequent itemset including the derivable chains, for rule confidence
/// lookups.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequentItemsets {
    pub sets: Vec<FrequentItemset>,
    pub support: BTreeMap<Vec<LabelPath>, u64>,
    pub transactions: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequentItemset {
    /// Sorted items.
    pub items: Vec<LabelPath>,
    pub support_count: u64,
}

/// An association rule over tag paths with its metrics; quality is lift.
#[derive(Clone, Debug, PartialEq)]
pub struct AssociationRule {
    pub antecedent: Vec<LabelPath>,
    pub consequent: Vec<LabelPath>,
    pub support: f64,
    pub confidence: f64,
    pub quality: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MineError {
    EmptyCorpus,
    /// A document contains a path outside the DTD: the DTD is stale.
    UnknownPath(String),
    BadParameter(String),
    MalformedRules(String),
}

impl fmt::Display for MineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MineError::EmptyCorpus => write!(f, "the corpus contains no usable document"),
            MineError::UnknownPath(p) => {
                write!(f, "path '{p}' is not in the minimal DTD; rebuild it")
            }
            MineError::BadParameter(msg) => write!(f, "bad mining parameter: {msg}"),
            MineError::MalformedRules(msg) => write!(f, "malformed rules document: {msg}"),
        }
    }
}

impl core::error::Error for MineError {}

/// Builds the minimal DTD of a parsed corpus.
pub fn build_minimal_dtd(corpus: &[(String, Element)]) -> Result<MinimalDtd, MineError> {
    if corpus.is_empty() {
        return Err(MineError::EmptyCorpus);
    }
    let mut counts: BTreeMap<LabelPath, u64> = BTreeMap::new();
    for (_, doc) in corpus {
        for path in attree::tree_from_document(doc).path_set() {
            *counts.entry(path).or_insert(0) += 1;
        }
    }
    // One union tree per distinct root label, in label order.
    let mut by_root: BTreeMap<&str, BTreeMap<LabelPath, bool>> = BTreeMap::new();
    for path in counts.keys() {
        by_root
            .entry(path.segments()[0].as_str())
            .or_default()
            .insert(path.clone(), false);
    }
    let roots = by_root
        .into_values()
        .map(|map| AttributeTree::from_path_map(&map).expect("path sets are prefix-closed"))
        .collect();
    Ok(MinimalDtd { roots, counts })
}

/// One transaction per document: the distinct tag paths it contains.
pub fn extract_transactions(
    corpus: &[(String, Element)],
    dtd: &MinimalDtd,
) -> Result<Vec<Transaction>, MineError> {
    corpus
        .iter()
        .map(|(id, doc)| {
            let items = attree::tree_from_document(doc).path_set();
            for path in &items {
                if !dtd.contains(path) {
                    return Err(MineError::UnknownPath(path.to_string()));
                }
            }
            Ok(Transaction {
                document: id.clone(),
                items,
            })
        })
        .collect()
}

/// True when the items form one root-to-leaf chain: every pair is related by
/// the ancestor (path prefix) relation.
fn is_chain(items: &[LabelPath]) -> bool {
    // Sorted paths: a chain means each item is a prefix of the next.
    items
        .windows(2)
        .all(|pair| pair[0].is_prefix_of(&pair[1]))
}

/// Drops items that are proper ancestors of other items; the support of any
/// itemset equals the support of this reduction, because a document that
/// contains a path contains all its ancestors.
fn antichain_reduce(items: &[LabelPath]) -> Vec<LabelPath> {
    items
        .iter()
        .filter(|item| {
            !items
                .iter()
                .any(|other| *item != other && item.is_prefix_of(other))
        })
        .cloned()
        .collect()
}

/// Level-wise frequent-itemset search with the hierarchy adaptation.
///
/// `minsup` is a fraction of the transaction count in `(0, 1]`. All and only
/// the itemsets with support at least `minsup` survive; reported sets exclude
/// the structurally trivial chains.
pub fn apriori(transactions: &[Transaction], minsup: f64) -> Result<FrequentItemsets, MineError> {
    if transactions.is_empty() {
        return Err(MineError::EmptyCorpus);
    }
    if !(minsup > 0.0 && minsup <= 1.0) {
        return Err(MineError::BadParameter(format!(
            "minsup must be in (0, 1], got {minsup}"
        )));
    }
    let n = transactions.len() as u64;
    let frequent_fraction = |count: u64| count as f64 / n as f64 >= minsup;

    let mut support: BTreeMap<Vec<LabelPath>, u64> = BTreeMap::new();

    // Level 1: plain counting.
    let mut item_counts: BTreeMap<LabelPath, u64> = BTreeMap::new();
    for t in transactions {
        for item in &t.items {
            *item_counts.entry(item.clone()).or_insert(0) += 1;
        }
    }
    let mut level: Vec<Vec<LabelPath>> = Vec::new();
    for (item, count) in item_counts {
        if frequent_fraction(count) {
            support.insert(alloc::vec![item.clone()], count);
            level.push(alloc::vec![item]);
        }
    }

    while !level.is_empty() {
        let k = level[0].len() + 1;
        let mut next: Vec<Vec<LabelPath>> = Vec::new();
        for i in 0..level.len() {
            for j in i + 1..level.len() {
                // Join: equal (k-2)-prefix, distinct last items.
                if level[i][..k - 2] != level[j][..k - 2] {
                    continue;
                }
                let mut candidate = level[i].clone();
                candidate.push(level[j][k - 2].clone());
                candidate.sort();

                let count = if candidate.len() != antichain_reduce(&candidate).len() {
                    // Support is derived, not counted: a reducible itemset
                    // has the support of its maximal items.
                    match support.get(&antichain_reduce(&candidate)) {
                        Some(&c) => c,
                        None => continue, // the reduction is infrequent
                    }
                } else {
                    // Downward closure over reductions: every (k-1)-subset
                    // must be frequent once reduced.
                    let prunable = (0..candidate.len()).any(|drop| {
                        let mut subset = candidate.clone();
                        subset.remove(drop);
                        !support.contains_key(&antichain_reduce(&subset))
                    });
                    if prunable {
                        continue;
                    }
                    transactions
                        .iter()
                        .filter(|t| candidate.iter().all(|item| t.items.contains(item)))
                        .count() as u64
                };
                if frequent_fraction(count) {
                    support.insert(candidate.clone(), count);
                    next.push(candidate);
                }
            }
        }
        next.sort();
        next.dedup();
        level = next;
    }

    let sets = support
        .iter()
        .filter(|(items, _)| items.len() == 1 || !is_chain(items))
        .map(|(items, &support_count)| FrequentItemset {
            items: items.clone(),
            support_count,
        })
        .collect();
    Ok(FrequentItemsets {
        sets,
        support,
        transactions: n,
    })
}

/// Extracts every rule `A -> B` with `A ∪ B` reported frequent, disjoint
/// nonempty sides and confidence at least `minconf`; scored by lift with
/// confidence as tiebreak.
pub fn extract_rules(
    frequent: &FrequentItemsets,
    minconf: f64,
) -> Result<Vec<AssociationRule>, MineError> {
    if !(minconf > 0.0 && minconf <= 1.0) {
        return Err(MineError::BadParameter(format!(
            "minconf must be in (0, 1], got {minconf}"
        )));
    }
    let n = frequent.transactions as f64;
    let support_of = |items: &[LabelPath]| -> Option<u64> {
        frequent.support.get(&antichain_reduce(items)).copied()
    };
    let mut rules = Vec::new();
    for set in &frequent.sets {
        let size = set.items.len();
        if size < 2 {
            continue;
        }
        for mask in 1u32..(1 << size) - 1 {
            let antecedent: Vec<LabelPath> = set
                .items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| p.clone())
                .collect();
            let consequent: Vec<LabelPath> = set
                .items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) == 0)
                .map(|(_, p)| p.clone())
                .collect();
            let Some(antecedent_count) = support_of(&antecedent) else {
                continue;
            };
            let confidence = set.support_count as f64 / antecedent_count as f64;
            if confidence < minconf {
                continue;
            }
            let Some(consequent_count) = support_of(&consequent) else {
                continue;
            };
            rules.push(AssociationRule {
                antecedent,
                consequent,
                support: set.support_count as f64 / n,
                confidence,
                quality: confidence / (consequent_count as f64 / n),
            });
        }
    }
    rules.sort_by(|a, b| {
        b.quality
            .partial_cmp(&a.quality)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(
                b.confidence
                    .partial_cmp(&a.confidence)
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    Ok(rules)
}

/// Serializes the rules deterministically; floats use the shortest exact
/// rendering, so reading the document back yields equal values.
pub fn emit_rules_xml(rules: &[AssociationRule]) -> Element {
    let mut root = Element::new("rules").with_attr("count", rules.len().to_string());
    for rule in rules {
        let mut r = Element::new("rule")
            .with_attr("support", format!("{}", rule.support))
            .with_attr("confidence", format!("{}", rule.confidence))
            .with_attr("quality", format!("{}", rule.quality));
        let mut antecedent = Element::new("antecedent");
        for item in &rule.antecedent {
            antecedent
                .children
                .push(Element::new("item").with_attr("path", item.to_string()));
        }
        let mut consequent = Element::new("consequent");
        for item in &rule.consequent {
            consequent
                .children
                .push(Element::new("item").with_attr("path", item.to_string()));
        }
        r.children.push(antecedent);
        r.children.push(consequent);
        root.children.push(r);
    }
    root
}

/// Reads a rules document back.
pub fn read_rules_xml(doc: &Element) -> Result<Vec<AssociationRule>, MineError> {
    if doc.name != "rules" {
        return Err(MineError::MalformedRules(format!(
            "expected root element 'rules', found '{}'",
            doc.name
        )));
    }
    let mut rules = Vec::new();
    for r in doc.children_named("rule") {
        let metric = |name: &str| -> Result<f64, MineError> {
            r.attr(name)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| MineError::MalformedRules(format!("rule without numeric '{name}'")))
        };
        let side = |name: &str| -> Result<Vec<LabelPath>, MineError> {
            let element = r
                .child(name)
                .ok_or_else(|| MineError::MalformedRules(format!("rule without {name}")))?;
            Ok(element
                .children_named("item")
                .filter_map(|i| i.attr("path"))
                .map(LabelPath::parse)
                .collect())
        };
        rules.push(AssociationRule {
            antecedent: side("antecedent")?,
            consequent: side("consequent")?,
            support: metric("support")?,
            confidence: metric("confidence")?,
            quality: metric("quality")?,
        });
    }
    Ok(rules)
}
