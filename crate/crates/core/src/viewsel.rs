//! Materialized-view selection: extract representative attributes from a
//! workload, build the binary query-attribute matrix, cluster similar
//! queries, derive one candidate view per cluster and pick a set under a
//! space budget with a greedy search.
//!
//! Similarity between queries is the Jaccard coefficient of their matrix
//! rows; clusters grow by complete-linkage agglomeration until no
//! inter-cluster pair reaches the threshold, so every intra-cluster pair
//! meets it. The greedy loop maximizes the benefit-density objective
//!
//! ```text
//! F_S(v) = (sum over queries of freq * (cost_S(q) - cost_{S+v}(q))
//!           - lambda * maintenance(v)) / size(v)
//! ```
//!
//! where a query's cost is the number of rows the best available source
//! scans (the store's cell count without a covering view, the view's row
//! count with one) and maintenance is the view's row count per refresh. Each
//! iteration re-evaluates F against the current selection, which captures
//! the interaction between views, and picks the best candidate; the loop
//! stops when no candidate improves (F <= 0), when every view is selected,
//! or when the best candidate no longer fits the budget. Stopping (rather
//! than skipping to a smaller view) keeps the selection monotone in the
//! budget.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::query::{
    self, AggFunc, AggSpec, AnalyticalQuery, AttrRef, PartialAgg, QueryError, ResultTable,
};
use crate::store::XCubeStore;
use crate::xml::{self, Element};

/// A workload of representative queries with frequency weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub queries: Vec<WorkloadQuery>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadQuery {
    pub id: String,
    pub query: AnalyticalQuery,
    pub frequency: f64,
}

impl Workload {
    pub fn new(queries: Vec<WorkloadQuery>) -> Result<Workload, ViewError> {
        if queries.is_empty() {
            return Err(ViewError::Malformed("the workload is empty".to_string()));
        }
        let mut ids = BTreeSet::new();
        for q in &queries {
            if !ids.insert(q.id.as_str()) {
                return Err(ViewError::Malformed(format!(
                    "duplicate query identifier '{}'",
                    q.id
                )));
            }
            if q.frequency.is_nan() || q.frequency < 0.0 {
                return Err(ViewError::Malformed(format!(
                    "query '{}' has a negative or NaN frequency",
                    q.id
                )));
            }
        }
        Ok(Workload { queries })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViewError {
    Malformed(String),
    Query(QueryError),
}

impl fmt::Display for ViewError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViewError::Malformed(msg) => write!(f, "bad view-selection input: {msg}"),
            ViewError::Query(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ViewError {}

impl From<QueryError> for ViewError {
    fn from(e: QueryError) -> Self {
        ViewError::Query(e)
    }
}

/// Attributes a query touches in its selection predicates and grouping
/// clauses.
fn query_attributes(q: &AnalyticalQuery) -> BTreeSet<AttrRef> {
    q.selections
        .iter()
        .map(|p| p.attr.clone())
        .chain(q.group_by.iter().cloned())
        .collect()
}

/// Deduplicated, ordered list of attributes occurring in any selection or
/// grouping clause of the workload.
pub fn extract_attributes(w: &Workload) -> Vec<AttrRef> {
    let mut set = BTreeSet::new();
    for q in &w.queries {
        set.extend(query_attributes(&q.query));
    }
    set.into_iter().collect()
}

/// The binary queries-by-attributes matrix: rows follow workload order,
/// columns follow [`extract_attributes`] order, and an entry is set exactly
/// when the attribute occurs in that query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryAttributeMatrix {
    pub query_ids: Vec<String>,
    pub attributes: Vec<AttrRef>,
    pub rows: Vec<Vec<bool>>,
}

pub fn build_matrix(w: &Workload) -> QueryAttributeMatrix {
    let attributes = extract_attributes(w);
    let rows = w
        .queries
        .iter()
        .map(|q| {
            let used = query_attributes(&q.query);
            attributes.iter().map(|a| used.contains(a)).collect()
        })
        .collect();
    QueryAttributeMatrix {
        query_ids: w.queries.iter().map(|q| q.id.clone()).collect(),
        attributes,
        rows,
    }
}

/// Jaccard similarity of two binary rows; two all-zero rows count as
/// identical (similarity 1).
fn jaccard(a: &[bool], b: &[bool]) -> f64 {
    let mut intersection = 0u32;
    let mut union = 0u32;
    for (&x, &y) in a.iter().zip(b) {
        if x && y {
            intersection += 1;
        }
        if x || y {
            union += 1;
        }
    }
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// One cluster of similar queries, as sorted workload indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryCluster {
    pub members: Vec<usize>,
}

/// Complete-linkage agglomeration over the matrix rows.
///
/// Merging continues while some cluster pair has minimum pairwise similarity
/// at least `theta`, so the result is a partition in which every
/// intra-cluster pair meets the threshold. Ties break on the smallest
/// (lead-member, lead-member) pair. Clusters come back ordered by their
/// smallest member.
pub fn cluster_queries(matrix: &QueryAttributeMatrix, theta: f64) -> Vec<QueryCluster> {
    let mut clusters: Vec<Vec<usize>> = (0..matrix.rows.len()).map(|i| alloc::vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let sim = complete_linkage(matrix, &clusters[i], &clusters[j]);
                let better = match best {
                    None => true,
                    Some((s, _, _)) => sim > s,
                };
                if better {
                    best = Some((sim, i, j));
                }
            }
        }
        match best {
            Some((sim, i, j)) if sim >= theta => {
                let merged_in = clusters.remove(j);
                clusters[i].extend(merged_in);
                clusters[i].sort_unstable();
            }
            _ => break,
        }
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
        .into_iter()
        .map(|members| QueryCluster { members })
        .collect()
}

fn complete_linkage(matrix: &QueryAttributeMatrix, a: &[usize], b: &[usize]) -> f64 {
    let mut min = f64::INFINITY;
    for &i in a {
        for &j in b {
            let sim = jaccard(&matrix.rows[i], &matrix.rows[j]);
            if sim < min {
                min = sim;
            }
        }
    }
    min
}

/// Distinct-value statistics used to estimate view sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoreStatistics {
    pub cell_count: u64,
    pub distinct: BTreeMap<AttrRef, u64>,
}

impl StoreStatistics {
    pub fn of(store: &XCubeStore) -> StoreStatistics {
        let mut distinct = BTreeMap::new();
        for def in &store.dimensions {
            for (attr, _) in &def.attributes {
                distinct.insert(
                    AttrRef::new(def.name.clone(), attr.clone()),
                    store.distinct_values(&def.name, attr),
                );
            }
        }
        StoreStatistics {
            cell_count: store.cell_count() as u64,
            distinct,
        }
    }

    /// Distinct-combination product capped by the cell count; the documented
    /// size estimate for a view grouping by `attrs`.
    pub fn estimate_rows(&self, attrs: &[AttrRef]) -> u64 {
        let mut product: u64 = 1;
        for attr in attrs {
            let d = self.distinct.get(attr).copied().unwrap_or(1).max(1);
            product = product.saturating_mul(d);
            if product >= self.cell_count {
                return self.cell_count.max(1);
            }
        }
        product.min(self.cell_count.max(1))
    }
}

/// A candidate view derived from one query cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateView {
    pub id: String,
    /// Sorted union of the member queries' extracted attributes.
    pub attributes: Vec<AttrRef>,
    /// Re-aggregable closure of the member queries' aggregates.
    pub aggregates: Vec<AggSpec>,
    /// Identifiers of the cluster's member queries.
    pub cluster: Vec<String>,
    /// Identifiers of all workload queries the view can answer.
    pub resolvable: Vec<String>,
    pub estimated_rows: u64,
}

/// True when a query can be answered from a view with these attributes and
/// aggregates: its attributes are covered and each of its aggregates is
/// derivable (AVG from SUM and COUNT, the rest from themselves).
fn covers(attributes: &[AttrRef], aggregates: &[AggSpec], q: &AnalyticalQuery) -> bool {
    query_attributes(q).iter().all(|a| attributes.contains(a))
        && q.aggregates.iter().all(|spec| match spec.func {
            AggFunc::Avg => {
                has_agg(aggregates, AggFunc::Sum, &spec.measure)
                    && has_agg(aggregates, AggFunc::Count, &spec.measure)
            }
            _ => has_agg(aggregates, spec.func, &spec.measure),
        })
}

fn has_agg(aggregates: &[AggSpec], func: AggFunc, measure: &str) -> bool {
    aggregates.iter().any(|a| a.func == func && a.measure == measure)
}

/// Builds one candidate view per cluster.
pub fn candidate_views(
    clusters: &[QueryCluster],
    w: &Workload,
    stats: &StoreStatistics,
) -> Vec<CandidateView> {
    clusters
        .iter()
        .enumerate()
        .map(|(i, cluster)| {
            let mut attrs: BTreeSet<AttrRef> = BTreeSet::new();
            let mut aggs: BTreeSet<(u8, String)> = BTreeSet::new();
            for &member in &cluster.members {
                let q = &w.queries[member];
                attrs.extend(query_attributes(&q.query));
                for spec in &q.query.aggregates {
                    match spec.func {
                        // AVG is derived, never stored.
                        AggFunc::Avg => {
                            aggs.insert((agg_rank(AggFunc::Sum), spec.measure.clone()));
                            aggs.insert((agg_rank(AggFunc::Count), spec.measure.clone()));
                        }
                        f => {
                            aggs.insert((agg_rank(f), spec.measure.clone()));
                        }
                    }
                }
            }
            aggs.insert((agg_rank(AggFunc::Count), "*".to_string()));
            let attributes: Vec<AttrRef> = attrs.into_iter().collect();
            let aggregates: Vec<AggSpec> = aggs
                .into_iter()
                .map(|(rank, measure)| AggSpec {
                    func: agg_from_rank(rank),
                    measure,
                })
                .collect();
            let resolvable = w
                .queries
                .iter()
                .filter(|q| covers(&attributes, &aggregates, &q.query))
                .map(|q| q.id.clone())
                .collect();
            CandidateView {
                id: format!("v{}", i + 1),
                estimated_rows: stats.estimate_rows(&attributes),
                attributes,
                aggregates,
                cluster: cluster.members.iter().map(|&m| w.queries[m].id.clone()).collect(),
                resolvable,
            }
        })
        .collect()
}

fn agg_rank(func: AggFunc) -> u8 {
    match func {
        AggFunc::Sum => 0,
        AggFunc::Count => 1,
        AggFunc::Min => 2,
        AggFunc::Max => 3,
        AggFunc::Avg => 4,
    }
}

fn agg_from_rank(rank: u8) -> AggFunc {
    match rank {
        0 => AggFunc::Sum,
        1 => AggFunc::Count,
        2 => AggFunc::Min,
        3 => AggFunc::Max,
        _ => AggFunc::Avg,
    }
}

/// Cost-model knobs: `lambda` weighs view maintenance against query savings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub lambda: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { lambda: 1.0 }
    }
}

/// One greedy iteration: the chosen view and its objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionStep {
    pub view: String,
    pub f_value: f64,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub selected: Vec<String>,
    pub log: Vec<SelectionStep>,
    pub budget_used: u64,
    pub budget_limit: u64,
}

fn view_size(v: &CandidateView) -> u64 {
    v.estimated_rows.max(1)
}

/// Scan cost of one query under a set of selected views.
fn query_cost(q: &WorkloadQuery, selected: &[&CandidateView], stats: &StoreStatistics) -> f64 {
    let mut best = stats.cell_count.max(1) as f64;
    for v in selected {
        if v.resolvable.contains(&q.id) {
            best = best.min(view_size(v) as f64);
        }
    }
    best
}

/// The benefit-density objective for adding `v` on top of `selected`.
fn f_value(
    v: &CandidateView,
    selected: &[&CandidateView],
    w: &Workload,
    stats: &StoreStatistics,
    cost: &CostModel,
) -> f64 {
    let mut with_v: Vec<&CandidateView> = selected.to_vec();
    with_v.push(v);
    let savings: f64 = w
        .queries
        .iter()
        .map(|q| q.frequency * (query_cost(q, selected, stats) - query_cost(q, &with_v, stats)))
        .sum();
    (savings - cost.lambda * view_size(v) as f64) / view_size(v) as f64
}

/// Net value of a whole selection: total savings against the bare store
/// minus weighted maintenance. The quantity the greedy search approximately
/// maximizes; exposed so selections can be compared against exhaustive
/// search.
pub fn objective_value(
    selected: &[&CandidateView],
    w: &Workload,
    stats: &StoreStatistics,
    cost: &CostModel,
) -> f64 {
    let savings: f64 = w
        .queries
        .iter()
        .map(|q| q.frequency * (query_cost(q, &[], stats) - query_cost(q, selected, stats)))
        .sum();
    let maintenance: f64 = selected.iter().map(|v| view_size(v) as f64).sum();
    savings - cost.lambda * maintenance
}

/// Greedy selection under a storage budget.
///
/// Every iteration recomputes F for the remaining candidates relative to the
/// current selection, takes the maximum (ties break on the candidate
/// identifier) and stops on no improvement, exhaustion, or when the best
/// candidate does not fit the remaining space.
pub fn greedy_select(
    views: &[CandidateView],
    w: &Workload,
    stats: &StoreStatistics,
    budget: u64,
    cost: &CostModel,
) -> SelectionResult {
    let mut result = SelectionResult {
        selected: Vec::new(),
        log: Vec::new(),
        budget_used: 0,
        budget_limit: budget,
    };
    let mut selected: Vec<&CandidateView> = Vec::new();
    loop {
        let remaining: Vec<&CandidateView> = views
            .iter()
            .filter(|v| !result.selected.contains(&v.id))
            .collect();
        if remaining.is_empty() {
            break;
        }
        let mut best: Option<(f64, &CandidateView)> = None;
        for v in remaining {
            let f = f_value(v, &selected, w, stats, cost);
            let better = match best {
                None => true,
                Some((bf, bv)) => f > bf || (f == bf && v.id < bv.id),
            };
            if better {
                best = Some((f, v));
            }
        }
        let Some((f, v)) = best else { break };
        if f <= 0.0 {
            break;
        }
        if result.budget_used + view_size(v) > budget {
            break;
        }
        result.budget_used += view_size(v);
        result.selected.push(v.id.clone());
        result.log.push(SelectionStep {
            view: v.id.clone(),
            f_value: f,
            size: view_size(v),
        });
        selected.push(v);
    }
    result
}

/// The iteration log as a report document.
pub fn selection_report(result: &SelectionResult) -> Element {
    let mut report = Element::new("selection")
        .with_attr("budget", result.budget_limit.to_string())
        .with_attr("used", result.budget_used.to_string());
    for step in &result.log {
        report.children.push(
            Element::new("step")
                .with_attr("view", step.view.clone())
                .with_attr("f", format!("{}", step.f_value))
                .with_attr("size", step.size.to_string()),
        );
    }
    for id in &result.selected {
        report
            .children
            .push(Element::new("selected").with_attr("view", id.clone()));
    }
    report
}

/// A materialized view: pre-grouped aggregation over the view's attributes.
///
/// Row keys are per-attribute optional values: cells lacking one of the view
/// attributes group under an absent key rather than being dropped, so
/// answering a query that references fewer attributes stays exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaterializedView {
    pub id: String,
    pub attributes: Vec<AttrRef>,
    pub aggregates: Vec<AggSpec>,
    pub rows: Vec<ViewRow>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewRow {
    pub key: Vec<Option<String>>,
    pub values: Vec<query::AggValue>,
}

/// Materializes a candidate view against the store.
pub fn materialize(store: &XCubeStore, v: &CandidateView) -> Result<MaterializedView, ViewError> {
    for attr in &v.attributes {
        if store
            .dimension_def(&attr.dimension)
            .and_then(|d| d.attribute_type(&attr.attribute))
            .is_none()
        {
            return Err(ViewError::Query(QueryError::UnknownAttribute(attr.to_string())));
        }
    }
    let compiled = query::compile_aggregates(store, &v.aggregates)?;
    // Build the member lookup once, then fold every cell into its group.
    let members: BTreeMap<(&str, &str), &[(String, String)]> = store
        .members
        .iter()
        .map(|m| ((m.dimension.as_str(), m.node.as_str()), m.attributes.as_slice()))
        .collect();
    let mut groups: BTreeMap<Vec<Option<String>>, Vec<query::Accumulator>> = BTreeMap::new();
    for cell in &store.cells {
        let key: Vec<Option<String>> = v
            .attributes
            .iter()
            .map(|attr| {
                cell.coordinate(&attr.dimension)
                    .and_then(|node| members.get(&(attr.dimension.as_str(), node.as_str())))
                    .and_then(|attrs| {
                        attrs
                            .iter()
                            .find(|(n, _)| *n == attr.attribute)
                            .map(|(_, value)| value.clone())
                    })
            })
            .collect();
        let accs = groups
            .entry(key)
            .or_insert_with(|| compiled.iter().map(query::Accumulator::new).collect());
        for acc in accs.iter_mut() {
            acc.feed_cell(cell)?;
        }
    }
    let rows = groups
        .into_iter()
        .map(|(key, accs)| {
            Ok(ViewRow {
                key,
                values: accs
                    .into_iter()
                    .map(query::Accumulator::finish)
                    .collect::<Result<_, QueryError>>()?,
            })
        })
        .collect::<Result<Vec<_>, QueryError>>()?;
    Ok(MaterializedView {
        id: v.id.clone(),
        attributes: v.attributes.clone(),
        aggregates: v.aggregates.clone(),
        rows,
    })
}

/// Whether and how a query was answered from the materialized views.
#[derive(Clone, Debug, PartialEq)]
pub enum CoverageOutcome {
    Covered { view: String, table: ResultTable },
    NotCovered,
}

/// Answers a query from the materialized views without touching base data.
///
/// Picks the smallest covering view (ties on identifier), filters its rows
/// with the query's predicates, re-groups on the query's grouping attributes
/// and re-aggregates. Exact for every covered query: SUM, COUNT, MIN and MAX
/// re-aggregate losslessly and AVG is derived from SUM and COUNT.
pub fn answer_from_views(
    store: &XCubeStore,
    views: &[MaterializedView],
    q: &AnalyticalQuery,
) -> Result<CoverageOutcome, ViewError> {
    let mut covering: Vec<&MaterializedView> = views
        .iter()
        .filter(|v| covers(&v.attributes, &v.aggregates, q))
        .collect();
    covering.sort_by(|a, b| a.rows.len().cmp(&b.rows.len()).then(a.id.cmp(&b.id)));
    let Some(view) = covering.first() else {
        return Ok(CoverageOutcome::NotCovered);
    };

    let predicates = q
        .selections
        .iter()
        .map(|p| query::compile_predicate(store, p))
        .collect::<Result<Vec<_>, _>>()?;
    let attr_position = |attr: &AttrRef| -> usize {
        view.attributes
            .iter()
            .position(|a| a == attr)
            .expect("coverage guarantees the attribute")
    };
    let agg_position = |func: AggFunc, measure: &str| -> usize {
        view.aggregates
            .iter()
            .position(|a| a.func == func && a.measure == measure)
            .expect("coverage guarantees the aggregate")
    };

    let mut groups: BTreeMap<Vec<String>, Vec<Vec<PartialAgg>>> = BTreeMap::new();
    'rows: for row in &view.rows {
        for (predicate, p) in predicates.iter().zip(&q.selections) {
            match &row.key[attr_position(&p.attr)] {
                Some(value) if predicate.matches(value) => {}
                _ => continue 'rows,
            }
        }
        let mut key = Vec::with_capacity(q.group_by.len());
        for attr in &q.group_by {
            match &row.key[attr_position(attr)] {
                Some(value) => key.push(value.clone()),
                None => continue 'rows,
            }
        }
        let partials: Vec<PartialAgg> = q
            .aggregates
            .iter()
            .map(|spec| match spec.func {
                AggFunc::Avg => {
                    let sum = row.values[agg_position(AggFunc::Sum, &spec.measure)].clone();
                    let count = match &row.values[agg_position(AggFunc::Count, &spec.measure)] {
                        query::AggValue::Count(c) => *c,
                        _ => 0,
                    };
                    PartialAgg::SumCount(sum, count)
                }
                f => PartialAgg::Value(row.values[agg_position(f, &spec.measure)].clone()),
            })
            .collect();
        groups.entry(key).or_default().push(partials);
    }
    let table = query::reaggregate(store, q, groups)?;
    Ok(CoverageOutcome::Covered {
        view: view.id.clone(),
        table,
    })
}

impl MaterializedView {
    /// View document layout: declared attributes and aggregates, then one
    /// `row` element per group. Absent key parts and absent aggregates omit
    /// their `value` attribute.
    pub fn to_document(&self) -> String {
        let mut root = Element::new("view").with_attr("id", self.id.clone());
        for attr in &self.attributes {
            root.children
                .push(Element::new("attribute").with_attr("ref", attr.to_string()));
        }
        for agg in &self.aggregates {
            root.children.push(
                Element::new("aggregate")
                    .with_attr("function", agg.func.as_str())
                    .with_attr("measure", agg.measure.clone()),
            );
        }
        for row in &self.rows {
            let mut r = Element::new("row");
            for (attr, value) in self.attributes.iter().zip(&row.key) {
                let mut k = Element::new("key").with_attr("attribute", attr.to_string());
                if let Some(v) = value {
                    k.set_attr("value", v.clone());
                }
                r.children.push(k);
            }
            for (agg, value) in self.aggregates.iter().zip(&row.values) {
                let mut c = Element::new("cell").with_attr("column", agg.column_name());
                if let Some(text) = value.render() {
                    c.set_attr("value", text);
                }
                r.children.push(c);
            }
            root.children.push(r);
        }
        root.to_document_string()
    }

    /// Reads a view document back; aggregate values are typed from the
    /// store's measure catalog.
    pub fn from_document(text: &str, store: &XCubeStore) -> Result<MaterializedView, ViewError> {
        let doc = xml::parse(text).map_err(|e| ViewError::Malformed(e.to_string()))?;
        if doc.name != "view" {
            return Err(ViewError::Malformed(format!(
                "expected root element 'view', found '{}'",
                doc.name
            )));
        }
        let id = doc
            .attr("id")
            .ok_or_else(|| ViewError::Malformed("view without id".to_string()))?
            .to_string();
        let mut attributes = Vec::new();
        let mut aggregates = Vec::new();
        let mut rows = Vec::new();
        for child in &doc.children {
            match child.name.as_str() {
                "attribute" => {
                    let r = child
                        .attr("ref")
                        .and_then(AttrRef::parse)
                        .ok_or_else(|| ViewError::Malformed("bad attribute ref".to_string()))?;
                    attributes.push(r);
                }
                "aggregate" => {
                    let function = child
                        .attr("function")
                        .and_then(AggFunc::parse)
                        .ok_or_else(|| ViewError::Malformed("bad aggregate function".to_string()))?;
                    aggregates.push(AggSpec {
                        func: function,
                        measure: child
                            .attr("measure")
                            .ok_or_else(|| {
                                ViewError::Malformed("aggregate without measure".to_string())
                            })?
                            .to_string(),
                    });
                }
                "row" => {
                    let mut key = Vec::new();
                    let mut values = Vec::new();
                    for part in &child.children {
                        match part.name.as_str() {
                            "key" => key.push(part.attr("value").map(String::from)),
                            "cell" => values.push(part.attr("value").map(String::from)),
                            other => {
                                return Err(ViewError::Malformed(format!(
                                    "unexpected element '{other}' in view row"
                                )))
                            }
                        }
                    }
                    if key.len() != attributes.len() || values.len() != aggregates.len() {
                        return Err(ViewError::Malformed(
                            "row shape does not match the view declaration".to_string(),
                        ));
                    }
                    let values = values
                        .into_iter()
                        .zip(&aggregates)
                        .map(|(raw, agg)| query::parse_agg_value(raw.as_deref(), agg, store))
                        .collect::<Result<Vec<_>, QueryError>>()?;
                    rows.push(ViewRow { key, values });
                }
                other => {
                    return Err(ViewError::Malformed(format!(
                        "unexpected element '{other}' in view document"
                    )))
                }
            }
        }
        Ok(MaterializedView {
            id,
            attributes,
            aggregates,
            rows,
        })
    }
}
